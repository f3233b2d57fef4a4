#pragma once

// Named numerical checks with pinned tolerances, each producing one
// machine-readable result line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "s2cubic/ode_family.hpp"
#include "s2cubic/sphere_system.hpp"

namespace s2cubic::verify {

struct CheckResult {
  std::string check;
  std::size_t n_samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline CheckResult make_result(std::string name, std::size_t n, double worst, double tol) {
  return {std::move(name), n, worst, tol, std::isfinite(worst) && worst <= tol};
}

/// Uniform draws phi in [0, 2 pi), y in [-1, 1], momenta in [-1, 1].
inline std::vector<PhaseState> random_states(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<PhaseState> out(n);
  for (auto& s : out) {
    s.phi = angle(rng);
    s.y = unit(rng);
    s.p_phi = unit(rng);
    s.p_y = unit(rng);
  }
  return out;
}

struct Tolerances {
  double bracket = 1e-9;
  double conservation = 1e-6;
  double curvature = 1e-6;
  double consistency = 1e-8;
  double u_residual = 1e-7;
};

/// Test hook: perturbs Theta'' of every jet fed to the bracket checks.
struct Faults {
  double jet_d2_offset = 0.0;
};

inline std::vector<CheckResult> check_bracket(Tau tau, std::size_t n, std::uint64_t seed,
                                              const IntegratorConfig& config = {},
                                              const Tolerances& tol = {}, const Faults& faults = {}) {
  const XSolution sol = solve_x(tau, 2.0, config);
  double worst_fh = 0.0;
  double worst_mom = 0.0;
  double worst_pot = 0.0;
  double worst_id = 0.0;
  for (const auto& s : random_states(n, seed)) {
    ThetaJet j = theta_jet(sol, s.y);
    j.d2 += faults.jet_d2_offset;
    const BracketValue fh = poisson_bracket_FH(s, j);
    worst_fh = std::max(worst_fh, fh.relative());
    // Pieces are measured against the whole bracket: at tau = 0 the potential
    // vanishes and its own scale is rounding noise.
    const BracketPieces pieces = bracket_pieces(s, j);
    worst_mom = std::max(worst_mom, std::abs(pieces.momentum_piece.value) / fh.scale);
    worst_pot = std::max(worst_pot, std::abs(pieces.potential_piece.value) / fh.scale);
    worst_id = std::max(worst_id, identity_residual(j).relative());
  }
  return {make_result("bracket_FH", n, worst_fh, tol.bracket),
          make_result("bracket_momentum_piece", n, worst_mom, tol.bracket),
          make_result("bracket_potential_piece", n, worst_pot, tol.bracket),
          make_result("identity_residual", n, worst_id, tol.bracket)};
}

inline std::vector<CheckResult> check_conservation(Tau tau, const IntegratorConfig& config = {},
                                                   const Tolerances& tol = {}) {
  const PhaseState start{0.7, 0.3, 0.2, -0.5};
  const auto rep = hamiltonian_flow(start, tau, {0.0, 100.0}, config);
  return {make_result("conservation_H", rep.samples.size(), rep.max_drift_H, tol.conservation),
          make_result("conservation_F", rep.samples.size(), rep.max_drift_F, tol.conservation)};
}

/// At tau = 0 the metric is the round sphere, so |K - 1| is checked on
/// [1e-2, 1e2]. Otherwise the formula is checked against a finite-difference
/// Laplacian of log lambda on the same grid.
inline std::vector<CheckResult> check_curvature(Tau tau, const IntegratorConfig& config = {},
                                                const Tolerances& tol = {}) {
  const UView view(solve_x(tau, 5.0, config));
  std::vector<double> grid;
  for (int k = -8; k <= 8; ++k) grid.push_back(std::pow(10.0, k / 4.0));
  double worst = 0.0;
  if (tau.value() == 0.0) {
    for (double r : grid) worst = std::max(worst, std::abs(gaussian_curvature(view, r) - 1.0));
    return {make_result("curvature_round_sphere", grid.size(), worst, tol.curvature)};
  }
  // Central differences in log r keep the stencil well scaled.
  auto log_lambda = [&](double r) { return -4.0 * std::log(r) - 2.0 * std::log(view(r).d1); };
  const double h = 1e-3;
  for (double r : grid) {
    if (r < 0.05 || r > 20.0) continue;
    const double t = std::log(r);
    const double fm = log_lambda(std::exp(t - h));
    const double f0 = log_lambda(r);
    const double fp = log_lambda(std::exp(t + h));
    // In t = log r the flat radial Laplacian is r^{-2} d^2/dt^2.
    const double lap = (fp - 2.0 * f0 + fm) / (h * h) / (r * r);
    const double lambda = std::exp(f0);
    const double k_fd = -lap / (2.0 * lambda);
    worst = std::max(worst, std::abs(gaussian_curvature(view, r) - k_fd));
  }
  return {make_result("curvature_fd_crosscheck", grid.size(), worst, 1e-5)};
}

inline std::vector<CheckResult> check_consistency(Tau tau, const IntegratorConfig& config = {},
                                                  const Tolerances& tol = {}) {
  const std::vector<double> times{0.25, 0.5, 1.0, 2.0, 3.0, 5.0};
  const XSolution x = solve_x(tau, 6.0, config);
  const auto rep = consistency_check(x, solve_g(tau, config), times);
  const UView view(x);
  double worst_u = 0.0;
  std::size_t n_u = 0;
  for (int k = -10; k <= 10; ++k) {
    const double r = std::pow(10.0, k / 5.0);
    worst_u = std::max(worst_u, u_residual(view(r), r).relative());
    ++n_u;
  }
  return {make_result("identity_first_derivative", times.size(), rep.max_first, tol.consistency),
          make_result("identity_second_derivative", times.size(), rep.max_second, tol.consistency),
          make_result("radial_equation_residual", n_u, worst_u, tol.u_residual)};
}

inline std::vector<CheckResult> check_poles(Tau tau, const IntegratorConfig& config = {}) {
  const PoleReport rep = pole_report(tau, config);
  auto coeffs = make_result("pole_coefficients_nonzero", 2, std::max(rep.zeta0_err, rep.xi0_err), 1e-6);
  coeffs.pass = coeffs.pass && rep.coefficients_nonzero;
  auto decay = make_result("pole_potential_decay", rep.north.size() + rep.south.size(),
                           rep.decay_deviation, kDecayDeviationLimit);
  decay.pass = rep.potential_decays;
  return {coeffs, decay,
          make_result("pole_curvature_bounded", rep.north.size() + rep.south.size() + 2,
                      rep.curvature_max, kCurvatureBound)};
}

}  // namespace s2cubic::verify
