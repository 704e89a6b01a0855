#pragma once

#include "core.hpp"
#include "csv.hpp"
#include "explosion.hpp"
#include "heston.hpp"
#include "montecarlo.hpp"
#include "ode.hpp"
#include "rng.hpp"
#include "schemes.hpp"
#include "verify.hpp"

namespace cirexp {

inline constexpr const char* kVersion = "0.1.0";

} // namespace cirexp
