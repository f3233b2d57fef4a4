#pragma once

#include "s2cubic/errors.hpp"
#include "s2cubic/ivp.hpp"
#include "s2cubic/ode_family.hpp"
#include "s2cubic/phase_portrait.hpp"
#include "s2cubic/sphere_system.hpp"
#include "s2cubic/threshold.hpp"
#include "s2cubic/verify.hpp"

namespace s2cubic {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace s2cubic
