// Discord of both channels against scattering, with and without phase noise.
#include <cstdio>

#include "cvdiscord/cvdiscord.hpp"

int main() {
  using namespace cvdiscord;
  std::printf("%-4s %6s %6s %6s %10s %10s\n", "kind", "n0", "eta", "sigma", "discord", "variance");
  for (ChannelKind kind : {ChannelKind::DPC, ChannelKind::PAC})
    for (double n0 : {0.0, 4.0})
      for (double eta : {0.5, 1.0})
        for (double sigma : {0.0, 0.5}) {
          const double a0 = std::sqrt(n0);
          const ChannelDiscord cd = channel_discord(kind, a0, eta, sigma);
          std::printf("%-4s %6.2f %6.2f %6.2f %10.6f %10.6f\n", to_string(kind).c_str(), n0, eta, sigma,
                      cd.discord.value, quadrature_variance(kind, 0.0, a0, eta, sigma));
        }
}
