#pragma once

#include "cvdiscord/channels.hpp"
#include "cvdiscord/discord.hpp"
#include "cvdiscord/errors.hpp"
#include "cvdiscord/fock.hpp"
#include "cvdiscord/homodyne.hpp"
#include "cvdiscord/nelder_mead.hpp"
#include "cvdiscord/quadrature.hpp"
#include "cvdiscord/states.hpp"

namespace cvdiscord {

inline constexpr const char *kVersion = "0.1.0";

}  // namespace cvdiscord
