#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvdiscord/cvdiscord.hpp"

namespace cvdiscord::cli {

using json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kInvalidArguments = 2, kNotConverged = 3 };

struct Config {
  std::string kind = "dpc";
  std::optional<double> alpha0;
  std::optional<double> n0;
  double eta = 1.0;
  double sigma = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  std::string grid;
  std::string eta_grid;
  std::string sigma_grid;
  std::string n0_grid;
  int resolution = 24;
  std::string out;
  std::string format = "csv";
  int jobs = 0;
  bool allow_unconverged = false;
};

struct Range {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;

  std::vector<double> values() const {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
    return v;
  }
};

// "start:stop:count"
inline Range parse_range(const std::string &text, const std::string &flag) {
  Range r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &r.start, &r.stop, &r.count, &tail) != 3)
    throw InvalidArgument(flag + " expects start:stop:count, got '" + text + "'");
  if (!std::isfinite(r.start) || !std::isfinite(r.stop) || r.count < 1)
    throw InvalidArgument(flag + " needs finite bounds and count >= 1");
  if (r.count == 1 && r.start != r.stop) throw InvalidArgument(flag + " with count 1 needs start == stop");
  return r;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Round-trips a double through 12 significant digits so JSON and CSV agree.
inline double rounded(double v) { return std::stod(format_number(v)); }

struct SweepRecord {
  std::string kind;
  double alpha0 = 0.0;
  double n0 = 0.0;
  double eta = 1.0;
  double sigma = 0.0;
  std::optional<double> lambda_a, lambda_b, theta_m, phi_m, discord_bits, variance, mid_bits, amid_bits;
  int truncation_dim = 0;
  bool converged = true;
  bool limit_flag = false;
};

inline const std::vector<std::string> &record_columns() {
  static const std::vector<std::string> cols = {"kind",       "alpha0",       "n0",       "eta",      "sigma",
                                                "lambda_a",   "lambda_b",     "theta_m",  "phi_m",    "discord_bits",
                                                "variance",   "mid_bits",     "amid_bits", "truncation_dim",
                                                "converged",  "limit_flag"};
  return cols;
}

inline std::vector<std::string> record_cells(const SweepRecord &r) {
  auto opt = [](const std::optional<double> &v) { return v ? format_number(*v) : std::string(); };
  return {r.kind,        format_number(r.alpha0), format_number(r.n0),    format_number(r.eta), format_number(r.sigma),
          opt(r.lambda_a), opt(r.lambda_b),       opt(r.theta_m),         opt(r.phi_m),         opt(r.discord_bits),
          opt(r.variance), opt(r.mid_bits),       opt(r.amid_bits),       std::to_string(r.truncation_dim),
          r.converged ? "true" : "false",         r.limit_flag ? "true" : "false"};
}

inline json record_json(const SweepRecord &r) {
  auto opt = [](const std::optional<double> &v) { return v ? json(rounded(*v)) : json(nullptr); };
  json j;
  j["kind"] = r.kind;
  j["alpha0"] = rounded(r.alpha0);
  j["n0"] = rounded(r.n0);
  j["eta"] = rounded(r.eta);
  j["sigma"] = rounded(r.sigma);
  j["lambda_a"] = opt(r.lambda_a);
  j["lambda_b"] = opt(r.lambda_b);
  j["theta_m"] = opt(r.theta_m);
  j["phi_m"] = opt(r.phi_m);
  j["discord_bits"] = opt(r.discord_bits);
  j["variance"] = opt(r.variance);
  j["mid_bits"] = opt(r.mid_bits);
  j["amid_bits"] = opt(r.amid_bits);
  j["truncation_dim"] = r.truncation_dim;
  j["converged"] = r.converged;
  j["limit_flag"] = r.limit_flag;
  return j;
}

inline json config_json(const Config &c, const std::string &command) {
  json j;
  j["command"] = command;
  j["kind"] = c.kind;
  j["alpha0"] = c.alpha0 ? json(*c.alpha0) : json(nullptr);
  j["n0"] = c.n0 ? json(*c.n0) : json(nullptr);
  j["eta"] = c.eta;
  j["sigma"] = c.sigma;
  j["lambda_a"] = c.lambda_a;
  j["lambda_b"] = c.lambda_b;
  j["grid"] = c.grid;
  j["eta_grid"] = c.eta_grid;
  j["sigma_grid"] = c.sigma_grid;
  j["n0_grid"] = c.n0_grid;
  j["resolution"] = c.resolution;
  j["format"] = c.format;
  j["allow_unconverged"] = c.allow_unconverged;
  return j;
}

// Runs task(i) for i in [0, n) on up to `jobs` threads; results are stored by index so output order is fixed.
template <class T>
std::vector<T> parallel_map(int n, int jobs, const std::function<T(int)> &task) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        slots[i] = task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  std::vector<T> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

class App {
 public:
  App(std::ostream &out, std::ostream &err) : out_(out), err_(err) {}

  int run(int argc, const char *const *argv) {
    CLI::App app{"Correlation measures of photon-added bipartite optical channels", "cvdiscord"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "Read key=value options from a file (flags override it)");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--kind", cfg_.kind, "Channel kind")->check(CLI::IsMember({"dpc", "pac"}))->capture_default_str();
    auto *a0 = app.add_option("--alpha0", cfg_.alpha0, "Input coherent amplitude alpha0 >= 0");
    auto *n0 = app.add_option("--n0", cfg_.n0, "Mean photon number n0 = alpha0^2");
    a0->excludes(n0);
    n0->excludes(a0);
    app.add_option("--eta", cfg_.eta, "Scattering transmittance in [0,1]")->capture_default_str();
    app.add_option("--sigma", cfg_.sigma, "Phase noise standard deviation (rad)")->capture_default_str();
    app.add_option("--lambda-a", cfg_.lambda_a, "LO phase of mode A (rad)")->capture_default_str();
    app.add_option("--lambda-b", cfg_.lambda_b, "LO phase of mode B (rad)")->capture_default_str();
    app.add_option("--grid", cfg_.grid, "Quadrature grid start:stop:count (default: +-(alpha0+7), 201 points)");
    app.add_option("--eta-grid", cfg_.eta_grid, "Sweep over eta, start:stop:count");
    app.add_option("--sigma-grid", cfg_.sigma_grid, "Sweep over sigma, start:stop:count");
    app.add_option("--n0-grid", cfg_.n0_grid, "Sweep over n0, start:stop:count");
    app.add_option("--resolution", cfg_.resolution, "Phase points per axis for mid-map")->capture_default_str();
    app.add_option("--out", cfg_.out, "Output file (default stdout)");
    app.add_option("--format", cfg_.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--jobs", cfg_.jobs, "Worker threads (default: logical cores)")->capture_default_str();
    app.add_flag("--allow-unconverged", cfg_.allow_unconverged, "Emit rows that did not converge");
    bool show_config = false;
    app.add_flag("--show-config", show_config, "Print the effective configuration and exit");

    std::string command;
    for (const char *name : {"jqp", "mid-map", "amid-sweep", "discord-sweep", "qd-vs-variance", "selftest"}) {
      static const std::map<std::string, std::string> help = {
          {"jqp", "Joint quadrature probability on an (X_A, X_B) grid"},
          {"mid-map", "MID over the (lambda_A, lambda_B) plane"},
          {"amid-sweep", "AMID of the pure channel over n0"},
          {"discord-sweep", "Quantum discord over eta, sigma and n0 grids"},
          {"qd-vs-variance", "Discord against the local quadrature variance"},
          {"selftest", "Quick numerical self checks"}};
      app.add_subcommand(name, help.at(name))->callback([&command, name] { command = name; });
    }

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
      out_ << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp &e) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::CallForVersion &e) {
      out_ << kVersion << "\n";
      return kOk;
    } catch (const CLI::RequiredError &e) {
      if (show_config) {
        out_ << app.config_to_str(true, true);
        return kOk;
      }
      err_ << "error: " << e.what() << "\n";
      return kInvalidArguments;
    } catch (const CLI::ParseError &e) {
      err_ << "error: " << e.what() << "\n";
      return kInvalidArguments;
    }
    if (show_config) {
      out_ << app.config_to_str(true, true);
      return kOk;
    }

    try {
      validate();
      return dispatch(command);
    } catch (const InvalidArgument &e) {
      err_ << "error: " << e.what() << "\n";
      return kInvalidArguments;
    } catch (const TruncationError &e) {
      err_ << "error: " << e.what() << "\n";
      return kInvalidArguments;
    } catch (const ConvergenceError &e) {
      err_ << "error: " << e.what() << "\n";
      return kNotConverged;
    } catch (const NumericalIntegrityError &e) {
      err_ << "error: " << e.what() << "\n";
      return kNotConverged;
    }
  }

 private:
  void validate() {
    if (cfg_.n0) {
      if (!std::isfinite(*cfg_.n0) || *cfg_.n0 < 0) throw InvalidArgument("--n0 must be a finite nonnegative number");
      cfg_.alpha0 = std::sqrt(*cfg_.n0);
    }
    check_alpha0(alpha0());
    check_eta(cfg_.eta);
    check_sigma(cfg_.sigma);
    if (!std::isfinite(cfg_.lambda_a) || !std::isfinite(cfg_.lambda_b)) throw InvalidArgument("LO phases must be finite");
    if (cfg_.resolution < 1) throw InvalidArgument("--resolution must be positive");
    if (cfg_.jobs < 0) throw InvalidArgument("--jobs must be nonnegative");
    if (cfg_.jobs == 0) cfg_.jobs = std::max(1u, std::thread::hardware_concurrency());
  }

  double alpha0() const { return cfg_.alpha0.value_or(0.0); }
  ChannelKind kind() const { return parse_channel_kind(cfg_.kind); }

  std::vector<double> sweep(const std::string &grid, double fallback, const std::string &flag) const {
    return grid.empty() ? std::vector<double>{fallback} : parse_range(grid, flag).values();
  }

  std::vector<double> alpha0_sweep() const {
    if (cfg_.n0_grid.empty()) return {alpha0()};
    std::vector<double> out;
    for (double n : parse_range(cfg_.n0_grid, "--n0-grid").values()) {
      if (n < 0) throw InvalidArgument("--n0-grid values must be nonnegative");
      out.push_back(std::sqrt(n));
    }
    return out;
  }

  SweepRecord base_record(double a0, double eta, double sigma) const {
    SweepRecord r;
    r.kind = cfg_.kind;
    r.alpha0 = a0;
    r.n0 = a0 * a0;
    r.eta = eta;
    r.sigma = sigma;
    return r;
  }

  int dispatch(const std::string &command) {
    if (command == "jqp") return cmd_jqp();
    if (command == "selftest") return cmd_selftest();
    std::vector<SweepRecord> rows;
    if (command == "mid-map") rows = cmd_mid_map();
    if (command == "amid-sweep") rows = cmd_amid_sweep();
    if (command == "discord-sweep") rows = cmd_discord_sweep(false);
    if (command == "qd-vs-variance") rows = cmd_discord_sweep(true);
    return emit(command, rows);
  }

  int emit(const std::string &command, const std::vector<SweepRecord> &all) {
    std::vector<SweepRecord> rows;
    bool dropped = false;
    for (const auto &r : all) {
      if (r.converged || cfg_.allow_unconverged)
        rows.push_back(r);
      else
        dropped = true;
    }
    std::ostringstream buf;
    json header;
    header["tool"] = "cvdiscord";
    header["version"] = kVersion;
    header["config"] = config_json(cfg_, command);
    if (cfg_.format == "json") {
      json doc = header;
      doc["records"] = json::array();
      for (const auto &r : rows) doc["records"].push_back(record_json(r));
      buf << doc.dump(2) << "\n";
    } else {
      buf << "# " << header.dump() << "\n";
      write_csv_row(buf, record_columns());
      for (const auto &r : rows) write_csv_row(buf, record_cells(r));
    }
    write_output(buf.str());
    if (dropped) {
      err_ << "error: some points did not converge (rerun with --allow-unconverged to emit them)\n";
      return kNotConverged;
    }
    return kOk;
  }

  static void write_csv_row(std::ostream &os, const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  }

  void write_output(const std::string &text) {
    if (cfg_.out.empty()) {
      out_ << text;
      return;
    }
    std::ofstream f(cfg_.out, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open output file '" + cfg_.out + "'");
    f << text;
  }

  int cmd_jqp() {
    const double a0 = alpha0();
    const Range r = cfg_.grid.empty() ? Range{-(a0 + 7.0), a0 + 7.0, 201} : parse_range(cfg_.grid, "--grid");
    if (r.count < 2 || !(r.stop > r.start)) throw InvalidArgument("--grid needs stop > start and count >= 2");
    const auto xs = r.values();
    const double h = (r.stop - r.start) / (r.count - 1);
    const bool closed = cfg_.eta == 1.0 && cfg_.sigma == 0.0;
    const ChannelKind k = kind();
    std::optional<HomodyneModel> model;
    int dim = 0;
    if (!closed) {
      const QubitPairState q = scattering_mixture(k, a0, cfg_.eta);
      const HilbertSpec space = channel_space(a0);
      dim = space.dim(0);
      const PhaseAverageResult avg = phase_average(to_fock(q, space), cfg_.sigma);
      model.emplace(avg.state);
    }
    const auto rows = parallel_map<std::vector<double>>(r.count, cfg_.jobs, [&](int i) {
      std::vector<double> row(xs.size());
      for (std::size_t j = 0; j < xs.size(); ++j)
        row[j] = closed ? jqp_closed(k, a0, xs[i], xs[j], cfg_.lambda_a, cfg_.lambda_b)
                        : model->density(xs[i], xs[j], cfg_.lambda_a, cfg_.lambda_b);
      return row;
    });
    double mass = 0.0;
    for (int i = 0; i < r.count; ++i)
      for (int j = 0; j < r.count; ++j) {
        const double wi = (i == 0 || i == r.count - 1) ? 0.5 : 1.0, wj = (j == 0 || j == r.count - 1) ? 0.5 : 1.0;
        mass += wi * wj * rows[i][j] * h * h;
      }
    const bool normalized = std::abs(mass - 1.0) <= 1e-6;

    json header;
    header["tool"] = "cvdiscord";
    header["version"] = kVersion;
    header["config"] = config_json(cfg_, "jqp");
    header["method"] = closed ? "closed-form" : "fock-numeric";
    header["truncation_dim"] = dim;
    header["mass"] = rounded(mass);
    header["converged"] = normalized;
    std::ostringstream buf;
    if (cfg_.format == "json") {
      json doc = header;
      doc["records"] = json::array();
      for (int i = 0; i < r.count; ++i)
        for (int j = 0; j < r.count; ++j)
          doc["records"].push_back({{"x_a", rounded(xs[i])}, {"x_b", rounded(xs[j])}, {"p", rounded(rows[i][j])}});
      buf << doc.dump(2) << "\n";
    } else {
      buf << "# " << header.dump() << "\n";
      buf << "x_a,x_b,p\n";
      for (int i = 0; i < r.count; ++i)
        for (int j = 0; j < r.count; ++j)
          buf << format_number(xs[i]) << "," << format_number(xs[j]) << "," << format_number(rows[i][j]) << "\n";
    }
    if (!normalized && !cfg_.allow_unconverged) {
      err_ << "error: grid integral " << format_number(mass) << " differs from 1 by more than 1e-6\n";
      return kNotConverged;
    }
    write_output(buf.str());
    return kOk;
  }

  std::vector<SweepRecord> cmd_mid_map() {
    const double a0 = alpha0();
    const HilbertSpec space = channel_space(a0);
    const DensityMatrix rho = DensityMatrix::from_ket(build_state_fock(kind(), a0, space));
    const double info = pure_mutual_information(rho);
    const HomodyneModel model(rho);
    const QuadGrid grid = default_grid(a0);
    const ProjectedEntropyEvaluator eval(model, grid);
    const int n = cfg_.resolution;
    return parallel_map<SweepRecord>(n * n, cfg_.jobs, [&](int idx) {
      const double la = 2.0 * std::numbers::pi * (idx / n) / n, lb = 2.0 * std::numbers::pi * (idx % n) / n;
      SweepRecord r = base_record(a0, 1.0, 0.0);
      ProjectedEntropies e = eval(la, lb);
      bool ok = true;
      try {
        e = projected_entropies(model, la, lb, grid);
      } catch (const ConvergenceError &) {
        ok = false;
      }
      r.lambda_a = la;
      r.lambda_b = lb;
      r.mid_bits = info - e.mutual_information();
      r.truncation_dim = space.dim(0);
      r.converged = ok;
      return r;
    });
  }

  std::vector<SweepRecord> cmd_amid_sweep() {
    const auto alphas = alpha0_sweep();
    const ChannelKind k = kind();
    return parallel_map<SweepRecord>(static_cast<int>(alphas.size()), cfg_.jobs, [&](int i) {
      const double a0 = alphas[i];
      const HilbertSpec space = channel_space(a0);
      const DensityMatrix rho = DensityMatrix::from_ket(build_state_fock(k, a0, space));
      AmidOptions opt;
      opt.allow_unconverged = true;
      const AmidResult res = amid(rho, default_grid(a0), opt);
      SweepRecord r = base_record(a0, 1.0, 0.0);
      r.lambda_a = res.lambda_a;
      r.lambda_b = res.lambda_b;
      r.mid_bits = res.value_at_origin;
      r.amid_bits = res.value;
      r.truncation_dim = space.dim(0);
      r.converged = res.converged;
      return r;
    });
  }

  std::vector<SweepRecord> cmd_discord_sweep(bool parametric) {
    const auto alphas = alpha0_sweep();
    const std::string eta_grid = parametric && cfg_.eta_grid.empty() && cfg_.sigma_grid.empty() ? "0:1:11" : cfg_.eta_grid;
    const auto etas = sweep(eta_grid, cfg_.eta, "--eta-grid");
    const auto sigmas = sweep(cfg_.sigma_grid, cfg_.sigma, "--sigma-grid");
    for (double e : etas) check_eta(e);
    for (double s : sigmas) check_sigma(s);
    struct Point {
      double a0, eta, sigma;
    };
    std::vector<Point> points;
    for (double a0 : alphas)
      for (double e : etas)
        for (double s : sigmas) points.push_back({a0, e, s});
    const ChannelKind k = kind();
    return parallel_map<SweepRecord>(static_cast<int>(points.size()), cfg_.jobs, [&](int i) {
      const Point &p = points[i];
      ChannelDiscordOptions opt;
      opt.discord.allow_unconverged = true;
      const ChannelDiscord cd = channel_discord(k, p.a0, p.eta, p.sigma, opt);
      SweepRecord r = base_record(p.a0, p.eta, p.sigma);
      r.lambda_a = cfg_.lambda_a;
      r.theta_m = cd.discord.theta;
      r.phi_m = cd.discord.phi;
      r.discord_bits = cd.discord.value;
      r.variance = quadrature_variance(k, cfg_.lambda_a, p.a0, p.eta, p.sigma);
      r.truncation_dim = cd.truncation_dim;
      r.converged = cd.discord.converged && cd.phase_converged;
      r.limit_flag = p.sigma == 0.0 && (p.eta < kLimitBranch || 1.0 - p.eta < kLimitBranch);
      return r;
    });
  }

  int cmd_selftest() {
    struct Check {
      std::string name;
      std::function<bool()> run;
    };
    const std::vector<Check> checks = {
        {"dpc closed form matches numeric discord at eta=0.5",
         [] {
           return std::abs(discord_numeric(scattering_mixture(ChannelKind::DPC, 1.0, 0.5)).value -
                           discord_dp_closed(0.5)) < 1e-4;
         }},
        {"dpc closed form limits",
         [] { return discord_dp_closed(0.0) == 0.0 && discord_dp_closed(1.0) == 1.0; }},
        {"variance identity",
         [] { return std::abs(discord_dp_from_variance(0.8) - discord_dp_closed(0.6)) < 1e-10; }},
        {"scattering mixture equals beamsplitter oracle",
         [] {
           const HilbertSpec s = channel_space(1.0);
           const auto a = scattering_fock_oracle(ChannelKind::PAC, 1.0, 0.7, s);
           const auto b = to_fock(scattering_mixture(ChannelKind::PAC, 1.0, 0.7), s);
           return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-7;
         }},
        {"dpc reduced entropy is one bit",
         [] {
           const HilbertSpec s = channel_space(2.0);
           const auto rho = DensityMatrix::from_ket(build_state_fock(ChannelKind::DPC, 2.0, s));
           return std::abs(von_neumann_entropy(partial_trace(rho, {0})) - 1.0) < 1e-8;
         }},
        {"joint quadrature closed form matches overlap sum",
         [] {
           const auto rho = DensityMatrix::from_ket(build_state_fock(ChannelKind::PAC, 1.0, channel_space(1.0)));
           return std::abs(jqp_closed(ChannelKind::PAC, 1.0, 0.3, -0.2, 0.4, 1.3) -
                           jqp_numeric(rho, 0.3, -0.2, 0.4, 1.3)) < 1e-8;
         }},
    };
    bool all = true;
    for (const auto &c : checks) {
      bool ok = false;
      try {
        ok = c.run();
      } catch (const std::exception &e) {
        err_ << c.name << ": " << e.what() << "\n";
      }
      all = all && ok;
      out_ << (ok ? "PASS " : "FAIL ") << c.name << "\n";
    }
    return all ? kOk : kNotConverged;
  }

  std::ostream &out_;
  std::ostream &err_;
  Config cfg_;
};

inline int run(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  return App(out, err).run(argc, argv);
}

}  // namespace cvdiscord::cli
