#pragma once

// The defining third-order ODE in its three equivalent forms:
//
//   radial      u'''u'r^4 = -7u''u'r^3 - 2u''^2 r^4 + u''u r^2 - 2u'^2 r^2 + u'u r + u^2,
//               u(1) = 0, u'(1) = 1, u''(1) = tau - 1
//   autonomous  x'x''' = x x'' - 2x''^2 + x'^2 + x^2,   x(0) = 0, x'(0) = 1, x''(0) = tau
//   pole-side   g''' = g''(3g' + 4 s g'') / (g - 2 g' s),
//               g(1) = 0, g'(1) = -1/2, g''(1) = tau / 4
//
// related by t = log r, u(r) = x(log r), s = exp(-2t), x(t) = exp(t) g(s).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "s2cubic/errors.hpp"
#include "s2cubic/ivp.hpp"

namespace s2cubic {

using ivp::IntegratorConfig;

/// Existence window (-threshold, threshold) used to vet parameters.
struct TauWindow {
  double threshold = 0.57735;
  double margin = 1e-3;
};

/// The family parameter.
class Tau {
 public:
  /// Throws OutOfWindow unless |value| < threshold - margin.
  static Tau checked(double value, const TauWindow& window = {}) {
    if (!std::isfinite(value) || std::abs(value) >= window.threshold - window.margin) {
      throw Error(ErrorKind::OutOfWindow,
                  "tau=" + std::to_string(value) + " is outside the existence window (-" +
                      std::to_string(window.threshold) + ", " +
                      std::to_string(window.threshold) + ")");
    }
    return Tau(value);
  }

  /// No window check; for exploring super-critical parameters.
  static constexpr Tau trusted(double value) noexcept { return Tau(value); }

  constexpr double value() const noexcept { return value_; }
  constexpr Tau negated() const noexcept { return Tau(-value_); }

 private:
  constexpr explicit Tau(double value) noexcept : value_(value) {}
  double value_;
};

using XState = ivp::State<3>;
using GState = ivp::State<3>;

/// Value and first three derivatives at one point.
struct Jet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

inline constexpr double kDerivativeFloor = 1e-14;
inline constexpr double kDenominatorFloor = 1e-13;

/// x''' from the closure of the autonomous equation.
inline double x_third(double x, double x1, double x2) {
  if (std::abs(x1) < kDerivativeFloor) {
    throw Error(ErrorKind::DerivativeSingular, "x' vanishes, the equation degenerates");
  }
  return (x * x2 - 2.0 * x2 * x2 + x1 * x1 + x * x) / x1;
}

inline XState rhs_x(const XState& s) { return {s[1], s[2], x_third(s[0], s[1], s[2])}; }

inline double g_third(double s, double g, double g1, double g2) {
  const double den = g - 2.0 * g1 * s;
  if (std::abs(den) < kDenominatorFloor) {
    throw Error(ErrorKind::DenominatorVanished, "g - 2g's vanished at s=" + std::to_string(s));
  }
  return g2 * (3.0 * g1 + 4.0 * s * g2) / den;
}

inline GState rhs_g(double s, const GState& st) {
  return {st[1], st[2], g_third(s, st[0], st[1], st[2])};
}

namespace detail {

// Integrator-facing forms: singular points become NaN so the step control
// can back away from them instead of unwinding through an exception.
inline XState rhs_x_soft(double, const XState& s) {
  if (std::abs(s[1]) < kDerivativeFloor) return {s[1], s[2], std::nan("")};
  return {s[1], s[2], (s[0] * s[2] - 2.0 * s[2] * s[2] + s[1] * s[1] + s[0] * s[0]) / s[1]};
}

inline GState rhs_g_soft(double s, const GState& st) {
  const double den = st[0] - 2.0 * st[1] * s;
  if (std::abs(den) < kDenominatorFloor) return {st[1], st[2], std::nan("")};
  return {st[1], st[2], st[2] * (3.0 * st[1] + 4.0 * s * st[2]) / den};
}

inline ivp::DenseSolution<3> integrate_x(double tau, double t_max, const IntegratorConfig& cfg) {
  ivp::OdeProblem<3> problem{rhs_x_soft, 0.0, {0.0, 1.0, tau}};
  std::vector<ivp::Event<3>> events{
      {"x1_vanishes", [](double, const XState& s) { return s[1]; }, ivp::Crossing::Falling}};
  ivp::DenseSolution<3> sol = [&] {
    try {
      return ivp::integrate(problem, {0.0, t_max}, cfg, events);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFiniteRhs || e.kind() == ErrorKind::StepLimitReached) {
        throw Error(ErrorKind::DerivativeSingular,
                    "tau=" + std::to_string(tau) + ": " + e.what());
      }
      throw;
    }
  }();
  const auto& term = sol.termination();
  using Cause = ivp::Termination::Cause;
  if (term.cause == Cause::EventFired) {
    throw Error(ErrorKind::DerivativeSingular,
                "tau=" + std::to_string(tau) + ": x' reaches 0 at t=" + std::to_string(term.time));
  }
  if (term.cause == Cause::BlowUp) {
    throw Error(ErrorKind::BlowUp, "tau=" + std::to_string(tau) + ": solution exceeds " +
                                       std::to_string(cfg.blow_up_norm) + " at t=" +
                                       std::to_string(term.time));
  }
  if (term.cause == Cause::StepLimitReached) {
    throw Error(ErrorKind::StepLimitReached, "tau=" + std::to_string(tau));
  }
  return sol;
}

}  // namespace detail

/// Solution of the autonomous problem on [-t_max, t_max]. Negative times are
/// served by the odd symmetry x_tau(t) = -x_{-tau}(-t) from a companion
/// trajectory solved for -tau.
class XSolution {
 public:
  XSolution(Tau tau, std::shared_ptr<const ivp::DenseSolution<3>> forward,
            std::shared_ptr<const ivp::DenseSolution<3>> companion, IntegratorConfig config)
      : tau_(tau), forward_(std::move(forward)), companion_(std::move(companion)), config_(config) {}

  Tau tau() const noexcept { return tau_; }
  double t_max() const noexcept { return std::min(forward_->t_end(), companion_->t_end()); }
  const IntegratorConfig& config() const noexcept { return config_; }
  bool contains(double t) const noexcept { return std::abs(t) <= t_max(); }

  /// (x, x', x'') at t.
  XState operator()(double t) const {
    check(t);
    if (t >= 0.0) return (*forward_)(t);
    const XState c = (*companion_)(-t);
    return {-c[0], c[1], -c[2]};
  }

  Jet jet(double t) const {
    const XState s = (*this)(t);
    return {s[0], s[1], s[2], x_third(s[0], s[1], s[2])};
  }

  const ivp::DenseSolution<3>& forward() const noexcept { return *forward_; }
  const ivp::DenseSolution<3>& companion() const noexcept { return *companion_; }

  /// Same trajectory continued to a larger span; values already computed
  /// are kept bit-for-bit.
  XSolution extended(double new_t_max) const {
    if (new_t_max <= t_max()) return *this;
    const ivp::Rhs<3> rhs = detail::rhs_x_soft;
    auto fwd = std::make_shared<const ivp::DenseSolution<3>>(
        ivp::extend(*forward_, rhs, new_t_max, config_));
    auto cmp = companion_ == forward_
                   ? fwd
                   : std::make_shared<const ivp::DenseSolution<3>>(
                         ivp::extend(*companion_, rhs, new_t_max, config_));
    if (fwd->termination().cause != ivp::Termination::Cause::ReachedEnd ||
        cmp->termination().cause != ivp::Termination::Cause::ReachedEnd) {
      throw Error(ErrorKind::BlowUp, "extension to t=" + std::to_string(new_t_max) + " failed");
    }
    return XSolution(tau_, std::move(fwd), std::move(cmp), config_);
  }

 private:
  void check(double t) const {
    if (!contains(t)) {
      throw Error(ErrorKind::OutOfDomain, "t=" + std::to_string(t) + " outside [-" +
                                              std::to_string(t_max()) + ", " +
                                              std::to_string(t_max()) + "]");
    }
  }

  Tau tau_;
  std::shared_ptr<const ivp::DenseSolution<3>> forward_;
  std::shared_ptr<const ivp::DenseSolution<3>> companion_;
  IntegratorConfig config_;
};

/// Largest step taken for the x-solution.
inline constexpr double kXMaxStep = 0.1;

inline XSolution solve_x(Tau tau, double t_max, const IntegratorConfig& user_config = {}) {
  if (!(t_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_max must be positive");
  IntegratorConfig config = user_config;
  config.max_step = std::min(config.max_step, kXMaxStep);
  auto fwd = std::make_shared<const ivp::DenseSolution<3>>(
      detail::integrate_x(tau.value(), t_max, config));
  auto cmp = tau.value() == 0.0 ? fwd
                                : std::make_shared<const ivp::DenseSolution<3>>(
                                      detail::integrate_x(-tau.value(), t_max, config));
  return XSolution(tau, std::move(fwd), std::move(cmp), config);
}

// ---------------------------------------------------------------------------
// Radial view u(r) = x(log r).

class UView {
 public:
  explicit UView(XSolution source) : source_(std::move(source)) {}

  const XSolution& source() const noexcept { return source_; }

  Jet operator()(double r) const {
    if (!(r > 0.0)) throw Error(ErrorKind::OutOfDomain, "r must be positive");
    const double t = std::log(r);
    if (!source_.contains(t)) {
      throw Error(ErrorKind::OutOfDomain, "log r=" + std::to_string(t) + " outside solved span");
    }
    const Jet x = source_.jet(t);
    return {x.v, x.d1 / r, (x.d2 - x.d1) / (r * r), (x.d3 - 3.0 * x.d2 + 2.0 * x.d1) / (r * r * r)};
  }

 private:
  XSolution source_;
};

inline Jet u_eval(const UView& view, double r) { return view(r); }

struct Residual {
  double value = 0.0;
  /// Sum of absolute values of the terms that cancel in `value`.
  double scale = 0.0;

  double relative() const { return scale > 0.0 ? std::abs(value) / scale : std::abs(value); }
};

/// Residual of the radial equation at r for the jet (u, u', u'', u''').
inline Residual u_residual(const Jet& u, double r) {
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double r4 = r2 * r2;
  const std::array<double, 7> terms{u.d3 * u.d1 * r4,  7.0 * u.d2 * u.d1 * r3,
                                    2.0 * u.d2 * u.d2 * r4, -u.d2 * u.v * r2,
                                    2.0 * u.d1 * u.d1 * r2, -u.d1 * u.v * r,
                                    -u.v * u.v};
  Residual out;
  for (double term : terms) {
    out.value += term;
    out.scale += std::abs(term);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pole-side formulation.

struct GLimits {
  double g0 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  double g0_err = 0.0;
  double g1_err = 0.0;
  double g2_err = 0.0;
};

namespace detail {

/// Neville extrapolation of samples (s_k, v_k) to s = 0. Returns the value
/// and the difference between the two highest-order estimates.
inline std::pair<double, double> extrapolate_to_zero(std::span<const double> s,
                                                     std::span<const double> v) {
  std::vector<double> p(v.begin(), v.end());
  const std::size_t n = p.size();
  double prev = p.back();
  double best = p.back();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      p[i] = (s[i + m] * p[i] - s[i] * p[i + 1]) / (s[i + m] - s[i]);
    }
    prev = best;
    best = p[0];
  }
  return {best, std::abs(best - prev)};
}

}  // namespace detail

class GSolution {
 public:
  GSolution(Tau tau, std::shared_ptr<const ivp::DenseSolution<3>> trajectory, GLimits limits)
      : tau_(tau), trajectory_(std::move(trajectory)), limits_(limits) {}

  Tau tau() const noexcept { return tau_; }
  double s_min() const noexcept { return trajectory_->t_end(); }
  const GLimits& limits_at_zero() const noexcept { return limits_; }
  const ivp::DenseSolution<3>& trajectory() const noexcept { return *trajectory_; }

  /// (g, g', g'') for s in [s_min, 1].
  GState operator()(double s) const { return (*trajectory_)(s); }

  Jet jet(double s) const {
    const GState st = (*this)(s);
    return {st[0], st[1], st[2], g_third(s, st[0], st[1], st[2])};
  }

  /// Like jet() but valid on [0, 1]: below s_min the Taylor polynomial of
  /// the extrapolated limits is used.
  Jet jet_extended(double s) const {
    if (s >= s_min()) return jet(s);
    if (s < 0.0) throw Error(ErrorKind::OutOfDomain, "s must be nonnegative");
    const auto& L = limits_;
    return {L.g0 + s * (L.g1 + s * (0.5 * L.g2 + s * L.g3 / 6.0)),
            L.g1 + s * (L.g2 + 0.5 * s * L.g3), L.g2 + s * L.g3, L.g3};
  }

 private:
  Tau tau_;
  std::shared_ptr<const ivp::DenseSolution<3>> trajectory_;
  GLimits limits_;
};

inline constexpr double kDefaultSMin = 1e-6;

/// Integrates the pole-side problem from s = 1 down to s_min and
/// extrapolates g, g', g'' to s = 0 from the samples s_min * 2^k, k = 0..4.
inline GSolution solve_g(Tau tau, const IntegratorConfig& config = {},
                         double s_min = kDefaultSMin) {
  if (!(s_min > 0.0 && s_min < 1.0 / 32.0)) {
    throw Error(ErrorKind::InvalidArgument, "s_min must lie in (0, 1/32)");
  }
  ivp::OdeProblem<3> problem{detail::rhs_g_soft, 1.0, {0.0, -0.5, 0.25 * tau.value()}};
  std::vector<ivp::Event<3>> events{
      {"denominator", [](double s, const GState& g) {
         return std::abs(g[0] - 2.0 * g[1] * s) - kDenominatorFloor;
       },
       ivp::Crossing::Falling}};
  auto traj = [&] {
    try {
      return ivp::integrate(problem, {1.0, s_min}, config, events);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFiniteRhs) {
        throw Error(ErrorKind::DenominatorVanished, e.what());
      }
      throw;
    }
  }();
  const auto& term = traj.termination();
  if (term.cause == ivp::Termination::Cause::EventFired) {
    throw Error(ErrorKind::DenominatorVanished, "g - 2g's vanished at s=" + std::to_string(term.time));
  }
  if (term.cause != ivp::Termination::Cause::ReachedEnd) {
    throw Error(term.cause == ivp::Termination::Cause::BlowUp ? ErrorKind::BlowUp
                                                                : ErrorKind::StepLimitReached,
                "g-integration stopped at s=" + std::to_string(term.time));
  }

  std::array<double, 5> s{};
  std::array<std::array<double, 5>, 3> v{};
  for (std::size_t k = 0; k < s.size(); ++k) {
    s[k] = s_min * std::ldexp(1.0, static_cast<int>(s.size() - 1 - k));
    const GState st = traj(s[k]);
    for (std::size_t c = 0; c < 3; ++c) v[c][k] = st[c];
  }
  GLimits lim;
  std::tie(lim.g0, lim.g0_err) = detail::extrapolate_to_zero(s, v[0]);
  std::tie(lim.g1, lim.g1_err) = detail::extrapolate_to_zero(s, v[1]);
  std::tie(lim.g2, lim.g2_err) = detail::extrapolate_to_zero(s, v[2]);
  lim.g3 = g_third(0.0, lim.g0, lim.g1, lim.g2);
  return GSolution(tau, std::make_shared<const ivp::DenseSolution<3>>(std::move(traj)), lim);
}

// ---------------------------------------------------------------------------
// Cross-formulation identities
//   x'(t)        = e^t (g - 2 g' s)
//   x''(t) - x(t) = 4 e^{-3t} g''(s),   s = e^{-2t}

struct ConsistencySample {
  double t = 0.0;
  double first = 0.0;
  double second = 0.0;
};

struct ConsistencyReport {
  std::vector<ConsistencySample> samples;
  double max_first = 0.0;
  double max_second = 0.0;
};

inline ConsistencyReport consistency_check(const XSolution& x, const GSolution& g,
                                           std::span<const double> times) {
  ConsistencyReport rep;
  for (double t : times) {
    const double s = std::exp(-2.0 * t);
    const XState xs = x(t);
    const GState gs = g(s);
    const double scale1 = std::max(1.0, std::abs(xs[1]));
    const double scale2 = std::max({1.0, std::abs(xs[0]), std::abs(xs[2])});
    ConsistencySample smp{t,
                          std::abs(xs[1] - std::exp(t) * (gs[0] - 2.0 * gs[1] * s)) / scale1,
                          std::abs(xs[2] - xs[0] - 4.0 * std::exp(-3.0 * t) * gs[2]) / scale2};
    rep.max_first = std::max(rep.max_first, smp.first);
    rep.max_second = std::max(rep.max_second, smp.second);
    rep.samples.push_back(smp);
  }
  return rep;
}

inline ConsistencyReport consistency_check(Tau tau, std::span<const double> times,
                                           const IntegratorConfig& config = {}) {
  double t_hi = 0.0;
  for (double t : times) t_hi = std::max(t_hi, std::abs(t));
  return consistency_check(solve_x(tau, std::max(t_hi, 1.0), config), solve_g(tau, config), times);
}

// ---------------------------------------------------------------------------
// Pole coefficients:
//   Psi'(r)                          = zeta(1/r^2)         = xi(r^2) / r^2
//   (Psi'' r^2 + Psi' r - Psi) Psi'^2 r^2 = nu(1/r^2) / r   = mu(r^2) r
// with zeta = g - 2 sigma g', nu = 4 zeta^2 g'' and, by the odd symmetry,
// xi_tau = zeta_{-tau}, mu_tau = -nu_{-tau}.

class AsymptoticCoeffs {
 public:
  AsymptoticCoeffs(GSolution plus, GSolution minus)
      : plus_(std::move(plus)), minus_(std::move(minus)) {
    if (plus_.tau().value() != -minus_.tau().value()) {
      throw Error(ErrorKind::InvalidArgument, "coefficient pair needs g-solutions for tau and -tau");
    }
  }

  Tau tau() const noexcept { return plus_.tau(); }
  const GSolution& plus() const noexcept { return plus_; }
  const GSolution& minus() const noexcept { return minus_; }

  double zeta(double sigma) const { return zeta_of(plus_, sigma); }
  double nu(double sigma) const { return nu_of(plus_, sigma); }
  double xi(double sigma) const { return zeta_of(minus_, sigma); }
  double mu(double sigma) const { return -nu_of(minus_, sigma); }

 private:
  static void check(double sigma) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) {
      throw Error(ErrorKind::OutOfDomain, "sigma must lie in [0, 1]");
    }
  }
  static double zeta_of(const GSolution& g, double sigma) {
    check(sigma);
    const Jet j = g.jet_extended(sigma);
    return j.v - 2.0 * sigma * j.d1;
  }
  static double nu_of(const GSolution& g, double sigma) {
    check(sigma);
    const Jet j = g.jet_extended(sigma);
    const double z = j.v - 2.0 * sigma * j.d1;
    return 4.0 * z * z * j.d2;
  }

  GSolution plus_;
  GSolution minus_;
};

inline AsymptoticCoeffs asymptotic_coeffs(Tau tau, const IntegratorConfig& config = {}) {
  return AsymptoticCoeffs(solve_g(tau, config), solve_g(tau.negated(), config));
}

}  // namespace s2cubic
