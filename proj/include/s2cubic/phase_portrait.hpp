#pragma once

// Phase plane of the autonomous equation in q = x'/x, p = q':
//
//   q' = p,   p' = (1 + 2q^2 - 3q^4 + p - 7q^2 p - 2p^2) / q
//
// and its desingularised form (time rescaled by q)
//
//   q' = q p, p' = 1 + 2q^2 - 3q^4 + p - 7q^2 p - 2p^2.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "s2cubic/errors.hpp"
#include "s2cubic/ivp.hpp"
#include "s2cubic/ode_family.hpp"

namespace s2cubic {

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

inline double sms_p_rate(double q, double p) {
  const double q2 = q * q;
  return 1.0 + 2.0 * q2 - 3.0 * q2 * q2 + p - 7.0 * q2 * p - 2.0 * p * p;
}

inline PhasePoint rhs_sms(const PhasePoint& pt) { return {pt.q * pt.p, sms_p_rate(pt.q, pt.p)}; }

inline PhasePoint rhs_syst1(const PhasePoint& pt) {
  if (pt.q == 0.0) throw Error(ErrorKind::DerivativeSingular, "q = 0 is singular");
  return {pt.p, sms_p_rate(pt.q, pt.p) / pt.q};
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

inline Matrix2 sms_jacobian(const PhasePoint& pt) {
  const double q = pt.q;
  const double p = pt.p;
  return {{{p, q}, {4.0 * q - 12.0 * q * q * q - 14.0 * q * p, 1.0 - 7.0 * q * q - 4.0 * p}}};
}

enum class EquilibriumKind { Saddle, StableNode, UnstableNode };

constexpr std::string_view to_string(EquilibriumKind k) noexcept {
  switch (k) {
    case EquilibriumKind::Saddle: return "Saddle";
    case EquilibriumKind::StableNode: return "StableNode";
    case EquilibriumKind::UnstableNode: return "UnstableNode";
  }
  return "Unknown";
}

struct Equilibrium {
  PhasePoint point;
  Matrix2 jacobian{};
  /// Ascending.
  std::array<double, 2> eigenvalues{};
  EquilibriumKind kind = EquilibriumKind::Saddle;
};

/// Real eigenvalues of a 2x2 matrix, ascending. Throws if they are complex.
inline std::array<double, 2> real_eigenvalues(const Matrix2& m) {
  const double tr = m[0][0] + m[1][1];
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) throw Error(ErrorKind::InvalidArgument, "complex eigenvalues");
  const double root = std::sqrt(disc);
  // Avoid cancellation in the smaller-magnitude root.
  const double big = tr >= 0.0 ? 0.5 * (tr + root) : 0.5 * (tr - root);
  const double small = big != 0.0 ? det / big : 0.0;
  return big < small ? std::array{big, small} : std::array{small, big};
}

inline Equilibrium classify_equilibrium(const PhasePoint& pt) {
  Equilibrium e{pt, sms_jacobian(pt), {}, EquilibriumKind::Saddle};
  e.eigenvalues = real_eigenvalues(e.jacobian);
  if (e.eigenvalues[0] < 0.0 && e.eigenvalues[1] < 0.0) {
    e.kind = EquilibriumKind::StableNode;
  } else if (e.eigenvalues[0] > 0.0 && e.eigenvalues[1] > 0.0) {
    e.kind = EquilibriumKind::UnstableNode;
  }
  return e;
}

/// The four singular points of the desingularised system: saddles (0, 1)
/// and (0, -1/2), nodes (1, 0) and (-1, 0).
inline std::vector<Equilibrium> equilibria() {
  return {classify_equilibrium({0.0, 1.0}), classify_equilibrium({0.0, -0.5}),
          classify_equilibrium({1.0, 0.0}), classify_equilibrium({-1.0, 0.0})};
}

inline constexpr double kOrbitTMin = 1e-3;

inline PhasePoint phase_point(const XState& s) {
  const double q = s[1] / s[0];
  return {q, s[2] / s[0] - q * q};
}

/// Maps x-solution samples to the phase plane. Times must be >= 1e-3,
/// since q = x'/x blows up as t -> 0+.
inline std::vector<PhasePoint> orbit_from_x(const XSolution& sol, std::span<const double> t_grid) {
  std::vector<PhasePoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    if (t < kOrbitTMin) {
      throw Error(ErrorKind::OutOfDomain,
                  "orbit extraction needs t >= 1e-3, got " + std::to_string(t));
    }
    out.push_back(phase_point(sol(t)));
  }
  return out;
}

/// p on the orbit of `sol` at the (first) time where q = x'/x equals
/// `q_target`. q decreases from +infinity at t = 0+, so the crossing is
/// found by a forward scan and bisection.
inline PhasePoint orbit_at_q(const XSolution& sol, double q_target) {
  auto q_of = [&](double t) { return phase_point(sol(t)).q; };
  double lo = std::min(1e-6, 0.5 / q_target);
  if (q_of(lo) <= q_target) {
    throw Error(ErrorKind::OutOfDomain, "q target above the resolved orbit head");
  }
  double hi = lo;
  while (true) {
    const double next = std::min(hi * 1.25, sol.t_max());
    if (q_of(next) <= q_target) {
      lo = hi;
      hi = next;
      break;
    }
    if (next == sol.t_max()) {
      throw Error(ErrorKind::OutOfDomain, "orbit never reaches q=" + std::to_string(q_target));
    }
    hi = next;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (q_of(mid) > q_target ? lo : hi) = mid;
  }
  return phase_point(sol(0.5 * (lo + hi)));
}

// ---------------------------------------------------------------------------
// Orbit fate

enum class Verdict { ConvergesToNode, EscapesToSaddleSide, Undetermined };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ConvergesToNode: return "ConvergesToNode";
    case Verdict::EscapesToSaddleSide: return "EscapesToSaddleSide";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "Unknown";
}

struct ClassifyOptions {
  /// Radius of the decision ball around the node (1, 0).
  double delta_trap = 0.05;
  double q_escape = 0.05;
  /// Escape needs p below this, i.e. below the saddle at p = -1/2.
  double p_sep = -0.55;
  /// Decision budget in desingularised time.
  double t_budget = 200.0;
  /// Hand-over from the x-equation to the phase system once q falls to this.
  double q_switch = 20.0;
};

struct OrbitDiagnostic {
  PhasePoint final_point;
  double time_used = 0.0;
  std::string trigger;
};

struct OrbitClassification {
  Verdict verdict = Verdict::Undetermined;
  OrbitDiagnostic diagnostic;
};

/// Decides whether the orbit of parameter tau reaches the stable node
/// (1, 0) or passes below the saddle (0, -1/2). Accepts any real tau.
inline OrbitClassification classify_orbit(double tau, const IntegratorConfig& config = {},
                                          const ClassifyOptions& opts = {}) {
  using Cause = ivp::Termination::Cause;
  OrbitClassification out;

  // Head of the orbit: the x-equation near t = 0, where q is unbounded.
  ivp::OdeProblem<3> head{detail::rhs_x_soft, 0.0, {0.0, 1.0, tau}};
  std::vector<ivp::Event<3>> head_events{
      {"q_switch", [q = opts.q_switch](double, const XState& s) { return s[1] - q * s[0]; },
       ivp::Crossing::Falling},
      {"x1_vanishes", [](double, const XState& s) { return s[1]; }, ivp::Crossing::Falling}};
  ivp::DenseSolution<3> head_sol = [&]() -> ivp::DenseSolution<3> {
    try {
      return ivp::integrate(head, {0.0, 1.0}, config, head_events);
    } catch (const Error& e) {
      return ivp::DenseSolution<3>(0.0, head.initial_state, {},
                                   {Cause::StepLimitReached, 0.0, e.what()});
    }
  }();
  const auto& hterm = head_sol.termination();
  if (hterm.cause != Cause::EventFired) {
    out.diagnostic = {{}, hterm.time, "head integration stopped: " + std::string(to_string(hterm.cause))};
    return out;
  }
  const XState hs = head_sol(hterm.time);
  if (hterm.event_id == "x1_vanishes") {
    const PhasePoint pt{0.0, hs[2] / hs[0]};
    out.diagnostic = {pt, hterm.time, "x' vanished"};
    out.verdict = pt.p < opts.p_sep ? Verdict::EscapesToSaddleSide : Verdict::Undetermined;
    return out;
  }

  // Tail: the polynomial system, regular everywhere.
  const PhasePoint start = phase_point(hs);
  ivp::OdeProblem<2> tail{[](double, const ivp::State<2>& y) {
                            const PhasePoint d = rhs_sms({y[0], y[1]});
                            return ivp::State<2>{d.q, d.p};
                          },
                          0.0,
                          {start.q, start.p}};
  std::vector<ivp::Event<2>> tail_events{
      {"trap",
       [d = opts.delta_trap](double, const ivp::State<2>& y) {
         return std::hypot(y[0] - 1.0, y[1]) - d;
       },
       ivp::Crossing::Falling},
      {"escape",
       [qe = opts.q_escape, ps = opts.p_sep](double, const ivp::State<2>& y) {
         return std::max(y[0] - qe, y[1] - ps);
       },
       ivp::Crossing::Falling}};
  try {
    const auto tail_sol = ivp::integrate(tail, {0.0, opts.t_budget}, config, tail_events);
    const auto& term = tail_sol.termination();
    const auto end = tail_sol.final_state();
    out.diagnostic = {{end[0], end[1]}, hterm.time + term.time, std::string(to_string(term.cause))};
    if (term.cause == Cause::EventFired) {
      out.diagnostic.trigger = term.event_id;
      out.verdict = term.event_id == "trap" ? Verdict::ConvergesToNode : Verdict::EscapesToSaddleSide;
    }
  } catch (const Error& e) {
    out.diagnostic = {start, hterm.time, e.what()};
  }
  return out;
}

/// Integrates the desingularised system from `start` for `duration` and
/// reports the largest distance from the node (1, 0) seen on the way and
/// the final distance. Used to confirm that the decision ball attracts.
struct TrapProbe {
  double max_distance = 0.0;
  double final_distance = 0.0;
};

inline TrapProbe probe_trap(const PhasePoint& start, double duration,
                            const IntegratorConfig& config = {}) {
  ivp::OdeProblem<2> prob{[](double, const ivp::State<2>& y) {
                            const PhasePoint d = rhs_sms({y[0], y[1]});
                            return ivp::State<2>{d.q, d.p};
                          },
                          0.0,
                          {start.q, start.p}};
  const auto sol = ivp::integrate(prob, {0.0, duration}, config);
  TrapProbe out;
  for (const auto& seg : sol.segments()) {
    for (int k = 0; k <= 8; ++k) {
      const auto y = seg.value(seg.t0 + (seg.t1 - seg.t0) * k / 8.0);
      out.max_distance = std::max(out.max_distance, std::hypot(y[0] - 1.0, y[1]));
    }
  }
  const auto end = sol.final_state();
  out.final_distance = std::hypot(end[0] - 1.0, end[1]);
  return out;
}

/// Grid over [q_lo, q_hi] x [p_lo, p_hi] of the desingularised field.
struct PortraitSample {
  PhasePoint point;
  PhasePoint velocity;
};

inline std::vector<PortraitSample> portrait_grid(double q_lo, double q_hi, double p_lo, double p_hi,
                                                 std::size_t nq, std::size_t np) {
  if (nq < 2 || np < 2 || !(q_hi > q_lo) || !(p_hi > p_lo)) {
    throw Error(ErrorKind::InvalidArgument, "portrait grid needs at least 2x2 points on a nonempty box");
  }
  std::vector<PortraitSample> out;
  out.reserve(nq * np);
  for (std::size_t i = 0; i < nq; ++i) {
    const double q = q_lo + (q_hi - q_lo) * static_cast<double>(i) / static_cast<double>(nq - 1);
    for (std::size_t j = 0; j < np; ++j) {
      const double p = p_lo + (p_hi - p_lo) * static_cast<double>(j) / static_cast<double>(np - 1);
      out.push_back({{q, p}, rhs_sms({q, p})});
    }
  }
  return out;
}

}  // namespace s2cubic
