#pragma once

// The natural mechanical system on the sphere in coordinates (phi, y = log r):
//
//   H = Theta'^2 (p_phi^2 + p_y^2) - Theta'^2 (Theta'' - Theta) cos(phi)
//   F = p_phi^3 + 3/2 (Theta cos(phi) p_phi - Theta' sin(phi) p_y)
//
// where Theta solves the autonomous equation. F Poisson-commutes with H.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "s2cubic/errors.hpp"
#include "s2cubic/ivp.hpp"
#include "s2cubic/ode_family.hpp"

namespace s2cubic {

struct PhaseState {
  double phi = 0.0;
  double y = 0.0;
  double p_phi = 0.0;
  double p_y = 0.0;
};

struct ThetaJet {
  double theta = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

inline ThetaJet theta_jet(const XSolution& sol, double y) {
  const Jet j = sol.jet(y);
  return {j.v, j.d1, j.d2, j.d3};
}

/// d1 d3 - (theta d2 - 2 d2^2 + d1^2 + theta^2); zero for jets of solutions.
inline Residual closure_residual(const ThetaJet& j) {
  const std::array<double, 5> terms{j.d1 * j.d3, -j.theta * j.d2, 2.0 * j.d2 * j.d2,
                                    -j.d1 * j.d1, -j.theta * j.theta};
  Residual r;
  for (double t : terms) {
    r.value += t;
    r.scale += std::abs(t);
  }
  return r;
}

/// Theta' Theta''' - Theta^2 - Theta'' Theta - Theta'^2 + 2 Theta''^2, the
/// factor that {V, E} is proportional to.
inline Residual identity_residual(const ThetaJet& j) {
  const std::array<double, 5> terms{j.d1 * j.d3, -j.theta * j.theta, -j.d2 * j.theta,
                                    -j.d1 * j.d1, 2.0 * j.d2 * j.d2};
  Residual r;
  for (double t : terms) {
    r.value += t;
    r.scale += std::abs(t);
  }
  return r;
}

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

inline EnergyBreakdown hamiltonian(const PhaseState& s, const ThetaJet& j) {
  const double w = j.d1 * j.d1;
  const double kinetic = w * (s.p_phi * s.p_phi + s.p_y * s.p_y);
  const double potential = -w * (j.d2 - j.theta) * std::cos(s.phi);
  return {kinetic, potential, kinetic + potential};
}

/// The part of F linear in the momenta.
inline double cubic_linear_part(const PhaseState& s, const ThetaJet& j) {
  return 1.5 * (j.theta * std::cos(s.phi) * s.p_phi - j.d1 * std::sin(s.phi) * s.p_y);
}

inline double cubic_integral(const PhaseState& s, const ThetaJet& j) {
  return s.p_phi * s.p_phi * s.p_phi + cubic_linear_part(s, j);
}

/// Energy from the polar form on momenta (p_r, p_phi), built from the
/// radial jet (Psi, Psi', Psi'', Psi'''). Matches hamiltonian() when
/// p_y = r p_r.
inline EnergyBreakdown hamiltonian_polar(double r, double phi, double p_r, double p_phi,
                                         const Jet& psi) {
  const double r2 = r * r;
  const double w = r2 * r2 * psi.d1 * psi.d1;
  const double kinetic = w * (p_r * p_r + p_phi * p_phi / r2);
  const double potential =
      -(psi.d2 * r2 + psi.d1 * r - psi.v) * psi.d1 * psi.d1 * r2 * std::cos(phi);
  return {kinetic, potential, kinetic + potential};
}

// ---------------------------------------------------------------------------
// Poisson brackets, {A, B} = sum dA/dq dB/dp - dA/dp dB/dq over (phi, y).

struct Gradient {
  double phi = 0.0;
  double y = 0.0;
  double p_phi = 0.0;
  double p_y = 0.0;

  Gradient operator+(const Gradient& o) const {
    return {phi + o.phi, y + o.y, p_phi + o.p_phi, p_y + o.p_y};
  }
};

struct BracketValue {
  double value = 0.0;
  /// Sum of absolute values of the products that cancel in `value`.
  double scale = 0.0;

  double relative() const { return scale > 0.0 ? std::abs(value) / scale : std::abs(value); }

  BracketValue& operator+=(const BracketValue& o) {
    value += o.value;
    scale += o.scale;
    return *this;
  }
};

inline BracketValue poisson_bracket(const Gradient& a, const Gradient& b) {
  const std::array<double, 4> terms{a.phi * b.p_phi, -a.p_phi * b.phi, a.y * b.p_y, -a.p_y * b.y};
  BracketValue out;
  for (double t : terms) {
    out.value += t;
    out.scale += std::abs(t);
  }
  return out;
}

namespace grad {

/// Kinetic part Theta'^2 (p_phi^2 + p_y^2).
inline Gradient kinetic(const PhaseState& s, const ThetaJet& j) {
  const double k = s.p_phi * s.p_phi + s.p_y * s.p_y;
  const double w = j.d1 * j.d1;
  return {0.0, 2.0 * j.d1 * j.d2 * k, 2.0 * w * s.p_phi, 2.0 * w * s.p_y};
}

inline Gradient potential(const PhaseState& s, const ThetaJet& j) {
  const double w = j.d1 * j.d1;
  const double a = j.d2 - j.theta;
  return {w * a * std::sin(s.phi), -(2.0 * j.d1 * j.d2 * a + w * (j.d3 - j.d1)) * std::cos(s.phi),
          0.0, 0.0};
}

/// p_phi^3.
inline Gradient cubic_head(const PhaseState& s) { return {0.0, 0.0, 3.0 * s.p_phi * s.p_phi, 0.0}; }

inline Gradient cubic_linear(const PhaseState& s, const ThetaJet& j) {
  const double c = std::cos(s.phi);
  const double sn = std::sin(s.phi);
  return {1.5 * (-j.theta * sn * s.p_phi - j.d1 * c * s.p_y),
          1.5 * (j.d1 * c * s.p_phi - j.d2 * sn * s.p_y), 1.5 * j.theta * c, -1.5 * j.d1 * sn};
}

inline Gradient hamiltonian(const PhaseState& s, const ThetaJet& j) {
  return kinetic(s, j) + potential(s, j);
}

inline Gradient cubic_integral(const PhaseState& s, const ThetaJet& j) {
  return cubic_head(s) + cubic_linear(s, j);
}

}  // namespace grad

/// {F, H} expanded over the pieces {p^3, H^}, {p^3, V}, {E, H^}, {E, V}, so
/// that the scale collects every product before cancellation.
inline BracketValue poisson_bracket_FH(const PhaseState& s, const ThetaJet& j) {
  const Gradient f_parts[] = {grad::cubic_head(s), grad::cubic_linear(s, j)};
  const Gradient h_parts[] = {grad::kinetic(s, j), grad::potential(s, j)};
  BracketValue out;
  for (const auto& f : f_parts) {
    for (const auto& h : h_parts) out += poisson_bracket(f, h);
  }
  return out;
}

inline BracketValue poisson_bracket_FH(const PhaseState& s, const XSolution& sol) {
  return poisson_bracket_FH(s, theta_jet(sol, s.y));
}

struct BracketPieces {
  /// {V, p_phi^3} + {H^, E}; vanishes for any Theta.
  BracketValue momentum_piece;
  /// {V, E}; vanishes because Theta solves the autonomous equation.
  BracketValue potential_piece;
};

inline BracketPieces bracket_pieces(const PhaseState& s, const ThetaJet& j) {
  BracketPieces out;
  out.momentum_piece = poisson_bracket(grad::potential(s, j), grad::cubic_head(s));
  out.momentum_piece += poisson_bracket(grad::kinetic(s, j), grad::cubic_linear(s, j));
  out.potential_piece = poisson_bracket(grad::potential(s, j), grad::cubic_linear(s, j));
  return out;
}

// ---------------------------------------------------------------------------
// Flow

struct ConservationSample {
  double time = 0.0;
  double h = 0.0;
  double f = 0.0;
};

struct ConservationReport {
  std::vector<ConservationSample> samples;
  double max_drift_H = 0.0;
  double max_drift_F = 0.0;
  PhaseState final_state;
};

struct FlowOptions {
  std::size_t n_samples = 1001;
  /// The x-solution is extended on demand up to this |y|.
  double y_cap = 18.0;
};

inline ivp::State<4> hamilton_rhs(const ivp::State<4>& z, const ThetaJet& j) {
  const PhaseState s{z[0], z[1], z[2], z[3]};
  const Gradient g = grad::hamiltonian(s, j);
  return {g.p_phi, g.p_y, -g.phi, -g.y};
}

namespace detail {

inline double relative_drift(double value, double reference) {
  const double scale = std::abs(reference) > 0.0 ? std::abs(reference) : 1.0;
  return std::abs(value - reference) / scale;
}

}  // namespace detail

/// Integrates Hamilton's equations from `initial` over `span`, sampling H
/// and F on a uniform time grid. The x-solution grows as the trajectory
/// wanders in y; beyond |y| = y_cap the flow fails with DomainExceeded.
inline ConservationReport hamiltonian_flow(const PhaseState& initial, const XSolution& sol,
                                           ivp::TimeSpan span, const IntegratorConfig& config = {},
                                           const FlowOptions& opts = {}) {
  if (opts.n_samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least two samples");
  auto theta = std::make_shared<XSolution>(sol);
  auto jet_at = [theta, cap = opts.y_cap](double y) {
    if (std::abs(y) > theta->t_max()) {
      if (std::abs(y) > cap) {
        throw Error(ErrorKind::DomainExceeded,
                    "trajectory left |y| <= " + std::to_string(cap) + " (y=" + std::to_string(y) + ")");
      }
      *theta = theta->extended(std::min(cap, std::max(2.0 * theta->t_max(), std::abs(y) + 2.0)));
    }
    return theta_jet(*theta, y);
  };
  if (std::abs(initial.y) > opts.y_cap) {
    throw Error(ErrorKind::DomainExceeded, "initial y outside the extendable range");
  }
  ivp::OdeProblem<4> problem{
      [jet_at](double, const ivp::State<4>& z) { return hamilton_rhs(z, jet_at(z[1])); },
      span.start,
      {initial.phi, initial.y, initial.p_phi, initial.p_y}};
  const auto traj = ivp::integrate(problem, span, config);
  if (traj.termination().cause != ivp::Termination::Cause::ReachedEnd) {
    throw Error(ErrorKind::DomainExceeded,
                "flow stopped early: " + std::string(ivp::to_string(traj.termination().cause)));
  }

  ConservationReport rep;
  const ThetaJet j0 = jet_at(initial.y);
  const double h0 = hamiltonian(initial, j0).total;
  const double f0 = cubic_integral(initial, j0);
  rep.samples.reserve(opts.n_samples);
  for (std::size_t k = 0; k < opts.n_samples; ++k) {
    const double t = span.start + (span.end - span.start) * static_cast<double>(k) /
                                      static_cast<double>(opts.n_samples - 1);
    const auto z = traj(t);
    const PhaseState s{z[0], z[1], z[2], z[3]};
    const ThetaJet j = jet_at(s.y);
    const ConservationSample smp{t, hamiltonian(s, j).total, cubic_integral(s, j)};
    rep.max_drift_H = std::max(rep.max_drift_H, detail::relative_drift(smp.h, h0));
    rep.max_drift_F = std::max(rep.max_drift_F, detail::relative_drift(smp.f, f0));
    rep.samples.push_back(smp);
  }
  const auto zf = traj.final_state();
  rep.final_state = {zf[0], zf[1], zf[2], zf[3]};
  return rep;
}

inline ConservationReport hamiltonian_flow(const PhaseState& initial, Tau tau, ivp::TimeSpan span,
                                           const IntegratorConfig& config = {},
                                           const FlowOptions& opts = {}) {
  // Theta is solved two decades tighter than the flow; its dense output
  // otherwise leaks into H.
  IntegratorConfig inner = config;
  inner.rel_tol = std::max(1e-2 * config.rel_tol, 1e-13);
  inner.abs_tol = std::max(1e-2 * config.abs_tol, 1e-13);
  return hamiltonian_flow(initial, solve_x(tau, std::max(6.0, std::abs(initial.y) + 4.0), inner),
                          span, config, opts);
}

// ---------------------------------------------------------------------------
// Curvature of the kinetic metric (r^2 dphi^2 + dr^2) / (r^4 Psi'^2).
// With lambda = 1/(r^4 Psi'^2), K = -(1/(2 lambda)) (f'' + f'/r), f = log lambda,
// which reduces to r^4 (Psi''' Psi' - Psi''^2 + Psi'' Psi' / r).

inline double gaussian_curvature(const Jet& psi, double r) {
  const double r2 = r * r;
  return r2 * r2 * (psi.d3 * psi.d1 - psi.d2 * psi.d2 + psi.d2 * psi.d1 / r);
}

inline double gaussian_curvature(const UView& view, double r) {
  return gaussian_curvature(view(r), r);
}

inline double gaussian_curvature(Tau tau, double r, const IntegratorConfig& config = {}) {
  if (!(r > 0.0)) throw Error(ErrorKind::OutOfDomain, "r must be positive");
  return gaussian_curvature(UView(solve_x(tau, std::max(1.0, std::abs(std::log(r)) + 1.0), config)),
                            r);
}

/// Curvature near a pole from the pole-side coefficient zeta (or xi):
/// with sigma = 1/r^2 (resp. r^2) the metric is (rho^2 dphi^2 + drho^2) /
/// zeta(rho^2)^2, so K = 4 zeta zeta' + 4 sigma (zeta zeta'' - zeta'^2).
inline double pole_side_curvature(const GSolution& g, double sigma) {
  const Jet j = g.jet_extended(sigma);
  const double z = j.v - 2.0 * sigma * j.d1;
  const double z1 = -j.d1 - 2.0 * sigma * j.d2;
  const double z2 = -3.0 * j.d2 - 2.0 * sigma * j.d3;
  return 4.0 * z * z1 + 4.0 * sigma * (z * z2 - z1 * z1);
}

// ---------------------------------------------------------------------------
// Pole regularity

struct PoleSample {
  double r = 0.0;
  /// V(r, phi = 0).
  double potential = 0.0;
  /// |V| scaled by the expected decay: r |V| near r = infinity, |V| / r near r = 0.
  double scaled = 0.0;
  double curvature = 0.0;
};

struct PoleReport {
  double tau = 0.0;
  double zeta0 = 0.0;
  double xi0 = 0.0;
  double zeta0_err = 0.0;
  double xi0_err = 0.0;
  /// Extrapolated g''(0) for tau and -tau; its sign is recorded, not asserted.
  double g2_plus = 0.0;
  double g2_minus = 0.0;
  double nu0 = 0.0;
  double mu0 = 0.0;
  double curvature_north = 0.0;
  double curvature_south = 0.0;
  std::vector<PoleSample> north;  // r -> infinity
  std::vector<PoleSample> south;  // r -> 0
  /// Largest |scaled / limit - 1| over both grids (0 when the potential
  /// vanishes identically).
  double decay_deviation = 0.0;
  double curvature_max = 0.0;
  bool coefficients_nonzero = false;
  bool potential_decays = false;
  bool curvature_bounded = false;

  bool regular() const { return coefficients_nonzero && potential_decays && curvature_bounded; }
};

inline constexpr double kDecayDeviationLimit = 0.5;
inline constexpr double kCurvatureBound = 1e6;

inline PoleReport pole_report(const AsymptoticCoeffs& c) {
  PoleReport rep;
  rep.tau = c.tau().value();
  const auto& lp = c.plus().limits_at_zero();
  const auto& lm = c.minus().limits_at_zero();
  rep.zeta0 = c.zeta(0.0);
  rep.xi0 = c.xi(0.0);
  rep.zeta0_err = lp.g0_err;
  rep.xi0_err = lm.g0_err;
  rep.g2_plus = lp.g2;
  rep.g2_minus = lm.g2;
  rep.nu0 = c.nu(0.0);
  rep.mu0 = c.mu(0.0);
  rep.curvature_north = pole_side_curvature(c.plus(), 0.0);
  rep.curvature_south = pole_side_curvature(c.minus(), 0.0);
  rep.coefficients_nonzero = std::abs(rep.zeta0) > 1e-8 && std::abs(rep.xi0) > 1e-8;

  // Geometric grids toward each pole; s = 1/r^2 down to 1e-6.
  for (double r : {1e1, 1e2, 1e3}) {
    const double sigma = 1.0 / (r * r);
    const double v = -c.nu(sigma) / r;
    rep.north.push_back({r, v, r * std::abs(v), pole_side_curvature(c.plus(), sigma)});
  }
  for (double r : {1e-1, 1e-2, 1e-3}) {
    const double v = -c.mu(r * r) * r;
    rep.south.push_back({r, v, std::abs(v) / r, pole_side_curvature(c.minus(), r * r)});
  }

  auto decays = [&rep](const std::vector<PoleSample>& side, double limit) {
    if (std::abs(limit) < 1e-14) {
      return std::all_of(side.begin(), side.end(),
                         [](const PoleSample& p) { return std::abs(p.potential) <= 1e-14; });
    }
    bool ok = true;
    for (std::size_t i = 0; i < side.size(); ++i) {
      const double dev = std::abs(side[i].scaled / std::abs(limit) - 1.0);
      rep.decay_deviation = std::max(rep.decay_deviation, dev);
      ok = ok && dev <= kDecayDeviationLimit;
      if (i > 0) ok = ok && std::abs(side[i].potential) < std::abs(side[i - 1].potential);
    }
    return ok;
  };
  rep.potential_decays = decays(rep.north, rep.nu0) && decays(rep.south, rep.mu0);

  double k_max = std::max(std::abs(rep.curvature_north), std::abs(rep.curvature_south));
  bool finite = std::isfinite(k_max);
  for (const auto* side : {&rep.north, &rep.south}) {
    for (const auto& p : *side) {
      finite = finite && std::isfinite(p.curvature);
      k_max = std::max(k_max, std::abs(p.curvature));
    }
  }
  rep.curvature_max = k_max;
  rep.curvature_bounded = finite && k_max < kCurvatureBound;
  return rep;
}

inline PoleReport pole_report(Tau tau, const IntegratorConfig& config = {}) {
  return pole_report(asymptotic_coeffs(tau, config));
}

}  // namespace s2cubic
