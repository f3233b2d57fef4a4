#pragma once

// Adaptive explicit Runge-Kutta initial-value solver (DOP853) with a
// 7th-order continuous extension, event location and a blow-up guard.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "s2cubic/detail/dop853_tableau.hpp"
#include "s2cubic/errors.hpp"

namespace s2cubic::ivp {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
using Rhs = std::function<State<N>(double, const State<N>&)>;

template <std::size_t N>
struct OdeProblem {
  static constexpr std::size_t dimension = N;

  Rhs<N> rhs;
  double initial_time = 0.0;
  State<N> initial_state{};
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  /// Integration stops with Termination::Cause::BlowUp once any state
  /// component exceeds this magnitude.
  double blow_up_norm = 1e8;
  std::size_t max_steps = 10'000'000;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) ||
        !(blow_up_norm > 0.0) || max_steps == 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "integrator config fields must be strictly positive");
    }
  }
};

struct TimeSpan {
  double start = 0.0;
  double end = 0.0;
};

enum class Crossing { Rising, Falling, Any };

template <std::size_t N>
struct Event {
  std::string id;
  std::function<double(double, const State<N>&)> guard;
  Crossing direction = Crossing::Any;
};

/// Event times are bisected on the dense output down to this width.
inline constexpr double kEventTimeTolerance = 1e-12;

struct Termination {
  enum class Cause { ReachedEnd, EventFired, BlowUp, StepLimitReached };

  Cause cause = Cause::ReachedEnd;
  double time = 0.0;
  std::string event_id;
};

constexpr std::string_view to_string(Termination::Cause cause) noexcept {
  switch (cause) {
    case Termination::Cause::ReachedEnd: return "ReachedEnd";
    case Termination::Cause::EventFired: return "EventFired";
    case Termination::Cause::BlowUp: return "BlowUp";
    case Termination::Cause::StepLimitReached: return "StepLimitReached";
  }
  return "Unknown";
}

/// One accepted step. The interpolant is built on [t0, t0 + h]; t1 equals
/// t0 + h except for a final step cut short by an event.
template <std::size_t N>
struct Segment {
  double t0 = 0.0;
  double h = 0.0;
  double t1 = 0.0;
  std::array<State<N>, 8> rcont{};

  State<N> value(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& r = rcont;
      const double conpar = r[4][i] + s * (r[5][i] + s1 * (r[6][i] + s * r[7][i]));
      out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * conpar)));
    }
    return out;
  }

  State<N> derivative(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& r = rcont;
      const double f = r[6][i] + s * r[7][i];
      const double e = r[5][i] + s1 * f;
      const double d = r[4][i] + s * e;
      const double c = r[3][i] + s1 * d;
      const double b = r[2][i] + s * c;
      const double a = r[1][i] + s1 * b;
      const double de = -f + s1 * r[7][i];
      const double dd = e + s * de;
      const double dc = -d + s1 * dd;
      const double db = c + s * dc;
      const double da = -b + s1 * db;
      out[i] = (a + s * da) / h;
    }
    return out;
  }
};

template <std::size_t N>
class DenseSolution {
 public:
  DenseSolution(double t_start, State<N> y_start, std::vector<Segment<N>> segments,
                Termination termination)
      : t_start_(t_start),
        y_start_(y_start),
        segments_(std::move(segments)),
        termination_(std::move(termination)) {}

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept {
    return segments_.empty() ? t_start_ : segments_.back().t1;
  }
  bool forward() const noexcept { return t_end() >= t_start_; }

  bool contains(double t) const noexcept {
    const double lo = std::min(t_start_, t_end());
    const double hi = std::max(t_start_, t_end());
    return t >= lo && t <= hi;
  }

  State<N> operator()(double t) const {
    if (segments_.empty()) {
      check_domain(t);
      return y_start_;
    }
    return locate(t).value(t);
  }

  State<N> derivative(double t) const { return locate(t).derivative(t); }

  const State<N>& initial_state() const noexcept { return y_start_; }
  State<N> final_state() const { return (*this)(t_end()); }

  const std::vector<Segment<N>>& segments() const noexcept { return segments_; }
  const Termination& termination() const noexcept { return termination_; }

 private:
  void check_domain(double t) const {
    if (!contains(t)) {
      throw Error(ErrorKind::OutOfDomain,
                  "t=" + std::to_string(t) + " outside [" + std::to_string(t_start_) +
                      ", " + std::to_string(t_end()) + "]");
    }
  }

  const Segment<N>& locate(double t) const {
    check_domain(t);
    if (segments_.empty()) {
      throw Error(ErrorKind::OutOfDomain, "empty solution has no interpolant");
    }
    auto it = forward()
                  ? std::lower_bound(segments_.begin(), segments_.end(), t,
                                     [](const Segment<N>& s, double v) { return s.t1 < v; })
                  : std::lower_bound(segments_.begin(), segments_.end(), t,
                                     [](const Segment<N>& s, double v) { return s.t1 > v; });
    if (it == segments_.end()) --it;
    return *it;
  }

  double t_start_;
  State<N> y_start_;
  std::vector<Segment<N>> segments_;
  Termination termination_;
};

namespace detail {

template <std::size_t N>
bool all_finite(const State<N>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

template <std::size_t N>
State<N> combine(const State<N>& y, double h,
                 std::initializer_list<std::pair<double, const State<N>*>> terms) {
  State<N> out = y;
  for (std::size_t i = 0; i < N; ++i) {
    double acc = 0.0;
    for (const auto& [c, k] : terms) acc += c * (*k)[i];
    out[i] += h * acc;
  }
  return out;
}

template <std::size_t N>
double initial_step(const Rhs<N>& f, double t, const State<N>& y, const State<N>& f0,
                    double dir, double h_max, const IntegratorConfig& cfg) {
  double dnf = 0.0;
  double dny = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y[i] / sk) * (y[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, h_max);
  State<N> y1;
  for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h * f0[i];
  const State<N> f1 = f(t + dir * h, y1);
  double der2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  if (!std::isfinite(der2)) return std::min(h, h_max) * 1e-3;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
  return std::min({100.0 * h, h1, h_max});
}

inline bool crossed(double before, double after, Crossing direction) {
  switch (direction) {
    case Crossing::Rising: return before < 0.0 && after >= 0.0;
    case Crossing::Falling: return before > 0.0 && after <= 0.0;
    case Crossing::Any:
      return (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0);
  }
  return false;
}

}  // namespace detail

/// Integrates `problem` over `span` (which must start at the problem's
/// initial time). Stops at the end of the span, at the first event whose
/// guard crosses zero in the requested direction, when the state norm
/// passes `blow_up_norm`, or when `max_steps` step attempts are used.
template <std::size_t N>
DenseSolution<N> integrate(const OdeProblem<N>& problem, TimeSpan span,
                           const IntegratorConfig& config,
                           const std::vector<Event<N>>& events = {}) {
  namespace tab = s2cubic::detail::dop853;
  config.validate();
  if (span.start != problem.initial_time) {
    throw Error(ErrorKind::InvalidArgument, "span must start at the problem's initial time");
  }
  if (!problem.rhs) throw Error(ErrorKind::InvalidArgument, "problem has no rhs");

  const auto& f = problem.rhs;
  double t = span.start;
  State<N> y = problem.initial_state;
  std::vector<Segment<N>> segments;
  if (span.end == span.start) {
    return DenseSolution<N>(t, y, {}, Termination{Termination::Cause::ReachedEnd, t, {}});
  }

  const double dir = span.end > span.start ? 1.0 : -1.0;
  const double h_max = std::min(config.max_step, std::abs(span.end - span.start));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double safe = 0.9;
  constexpr double facc1 = 1.0 / 0.333;
  constexpr double facc2 = 1.0 / 6.0;

  State<N> k1 = f(t, y);
  if (!detail::all_finite(k1)) {
    throw Error(ErrorKind::NonFiniteRhs, "rhs is not finite at the initial point");
  }
  std::vector<double> guard_prev;
  guard_prev.reserve(events.size());
  for (const auto& ev : events) guard_prev.push_back(ev.guard(t, y));

  double h = dir * detail::initial_step(f, t, y, k1, dir, h_max, config);
  bool reject = false;
  bool non_finite = false;
  std::size_t attempts = 0;
  Termination termination{Termination::Cause::ReachedEnd, span.end, {}};

  while (true) {
    if (attempts >= config.max_steps) {
      termination = {Termination::Cause::StepLimitReached, t, {}};
      break;
    }
    if (std::abs(h) <= 10.0 * eps * std::max(1.0, std::abs(t))) {
      throw Error(non_finite ? ErrorKind::NonFiniteRhs : ErrorKind::StepLimitReached,
                  "step size underflow at t=" + std::to_string(t));
    }
    bool last = false;
    if ((t + 1.01 * h - span.end) * dir >= 0.0) {
      h = span.end - t;
      last = true;
    }
    ++attempts;

    const State<N> k2 = f(t + tab::c2 * h, detail::combine<N>(y, h, {{tab::a21, &k1}}));
    const State<N> k3 =
        f(t + tab::c3 * h, detail::combine<N>(y, h, {{tab::a31, &k1}, {tab::a32, &k2}}));
    const State<N> k4 =
        f(t + tab::c4 * h, detail::combine<N>(y, h, {{tab::a41, &k1}, {tab::a43, &k3}}));
    const State<N> k5 = f(t + tab::c5 * h, detail::combine<N>(y, h, {{tab::a51, &k1},
                                                                     {tab::a53, &k3},
                                                                     {tab::a54, &k4}}));
    const State<N> k6 = f(t + tab::c6 * h, detail::combine<N>(y, h, {{tab::a61, &k1},
                                                                     {tab::a64, &k4},
                                                                     {tab::a65, &k5}}));
    const State<N> k7 = f(t + tab::c7 * h, detail::combine<N>(y, h, {{tab::a71, &k1},
                                                                     {tab::a74, &k4},
                                                                     {tab::a75, &k5},
                                                                     {tab::a76, &k6}}));
    const State<N> k8 = f(t + tab::c8 * h, detail::combine<N>(y, h, {{tab::a81, &k1},
                                                                     {tab::a84, &k4},
                                                                     {tab::a85, &k5},
                                                                     {tab::a86, &k6},
                                                                     {tab::a87, &k7}}));
    const State<N> k9 = f(t + tab::c9 * h, detail::combine<N>(y, h, {{tab::a91, &k1},
                                                                     {tab::a94, &k4},
                                                                     {tab::a95, &k5},
                                                                     {tab::a96, &k6},
                                                                     {tab::a97, &k7},
                                                                     {tab::a98, &k8}}));
    const State<N> k10 = f(t + tab::c10 * h, detail::combine<N>(y, h, {{tab::a101, &k1},
                                                                       {tab::a104, &k4},
                                                                       {tab::a105, &k5},
                                                                       {tab::a106, &k6},
                                                                       {tab::a107, &k7},
                                                                       {tab::a108, &k8},
                                                                       {tab::a109, &k9}}));
    const State<N> k11 = f(t + tab::c11 * h, detail::combine<N>(y, h, {{tab::a111, &k1},
                                                                       {tab::a114, &k4},
                                                                       {tab::a115, &k5},
                                                                       {tab::a116, &k6},
                                                                       {tab::a117, &k7},
                                                                       {tab::a118, &k8},
                                                                       {tab::a119, &k9},
                                                                       {tab::a1110, &k10}}));
    const State<N> k12 = f(t + h, detail::combine<N>(y, h, {{tab::a121, &k1},
                                                            {tab::a124, &k4},
                                                            {tab::a125, &k5},
                                                            {tab::a126, &k6},
                                                            {tab::a127, &k7},
                                                            {tab::a128, &k8},
                                                            {tab::a129, &k9},
                                                            {tab::a1210, &k10},
                                                            {tab::a1211, &k11}}));
    State<N> bsum;
    for (std::size_t i = 0; i < N; ++i) {
      bsum[i] = tab::b1 * k1[i] + tab::b6 * k6[i] + tab::b7 * k7[i] + tab::b8 * k8[i] +
                tab::b9 * k9[i] + tab::b10 * k10[i] + tab::b11 * k11[i] + tab::b12 * k12[i];
    }
    State<N> y_new;
    for (std::size_t i = 0; i < N; ++i) y_new[i] = y[i] + h * bsum[i];

    // Non-finite stages mean the trial step overshot into a singular region.
    // Retreat until the step underflows.
    std::optional<State<N>> k13;
    if (detail::all_finite(y_new)) {
      k13 = f(t + h, y_new);
      if (!detail::all_finite(*k13)) k13.reset();
    }
    if (!k13) {
      non_finite = true;
      reject = true;
      h *= 0.25;
      continue;
    }

    double err = 0.0;
    double err2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk =
          config.abs_tol + config.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      const double e3 = bsum[i] - tab::bhh1 * k1[i] - tab::bhh2 * k9[i] - tab::bhh3 * k12[i];
      const double e5 = tab::e51 * k1[i] + tab::e56 * k6[i] + tab::e57 * k7[i] +
                        tab::e58 * k8[i] + tab::e59 * k9[i] + tab::e510 * k10[i] +
                        tab::e511 * k11[i] + tab::e512 * k12[i];
      err2 += (e3 / sk) * (e3 / sk);
      err += (e5 / sk) * (e5 / sk);
    }
    double deno = err + 0.01 * err2;
    if (deno <= 0.0) deno = 1.0;
    err = std::abs(h) * err * std::sqrt(1.0 / (static_cast<double>(N) * deno));
    const double fac11 = std::pow(err, 1.0 / 8.0);

    if (!(err <= 1.0)) {
      reject = true;
      h /= std::min(facc1, fac11 / safe);
      continue;
    }
    non_finite = false;

    Segment<N> seg;
    seg.t0 = t;
    seg.h = h;
    seg.t1 = last ? span.end : t + h;
    const State<N>& k13v = *k13;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y_new[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      seg.rcont[0][i] = y[i];
      seg.rcont[1][i] = ydiff;
      seg.rcont[2][i] = bspl;
      seg.rcont[3][i] = ydiff - h * k13v[i] - bspl;
      seg.rcont[4][i] = tab::d41 * k1[i] + tab::d46 * k6[i] + tab::d47 * k7[i] +
                        tab::d48 * k8[i] + tab::d49 * k9[i] + tab::d410 * k10[i] +
                        tab::d411 * k11[i] + tab::d412 * k12[i];
      seg.rcont[5][i] = tab::d51 * k1[i] + tab::d56 * k6[i] + tab::d57 * k7[i] +
                        tab::d58 * k8[i] + tab::d59 * k9[i] + tab::d510 * k10[i] +
                        tab::d511 * k11[i] + tab::d512 * k12[i];
      seg.rcont[6][i] = tab::d61 * k1[i] + tab::d66 * k6[i] + tab::d67 * k7[i] +
                        tab::d68 * k8[i] + tab::d69 * k9[i] + tab::d610 * k10[i] +
                        tab::d611 * k11[i] + tab::d612 * k12[i];
      seg.rcont[7][i] = tab::d71 * k1[i] + tab::d76 * k6[i] + tab::d77 * k7[i] +
                        tab::d78 * k8[i] + tab::d79 * k9[i] + tab::d710 * k10[i] +
                        tab::d711 * k11[i] + tab::d712 * k12[i];
    }
    const State<N> k14 = f(t + tab::c14 * h, detail::combine<N>(y, h, {{tab::a141, &k1},
                                                                       {tab::a147, &k7},
                                                                       {tab::a148, &k8},
                                                                       {tab::a149, &k9},
                                                                       {tab::a1410, &k10},
                                                                       {tab::a1411, &k11},
                                                                       {tab::a1412, &k12},
                                                                       {tab::a1413, &k13v}}));
    const State<N> k15 = f(t + tab::c15 * h, detail::combine<N>(y, h, {{tab::a151, &k1},
                                                                       {tab::a156, &k6},
                                                                       {tab::a157, &k7},
                                                                       {tab::a158, &k8},
                                                                       {tab::a1511, &k11},
                                                                       {tab::a1512, &k12},
                                                                       {tab::a1513, &k13v},
                                                                       {tab::a1514, &k14}}));
    const State<N> k16 = f(t + tab::c16 * h, detail::combine<N>(y, h, {{tab::a161, &k1},
                                                                       {tab::a166, &k6},
                                                                       {tab::a167, &k7},
                                                                       {tab::a168, &k8},
                                                                       {tab::a169, &k9},
                                                                       {tab::a1613, &k13v},
                                                                       {tab::a1614, &k14},
                                                                       {tab::a1615, &k15}}));
    for (std::size_t i = 0; i < N; ++i) {
      seg.rcont[4][i] = h * (seg.rcont[4][i] + tab::d413 * k13v[i] + tab::d414 * k14[i] +
                             tab::d415 * k15[i] + tab::d416 * k16[i]);
      seg.rcont[5][i] = h * (seg.rcont[5][i] + tab::d513 * k13v[i] + tab::d514 * k14[i] +
                             tab::d515 * k15[i] + tab::d516 * k16[i]);
      seg.rcont[6][i] = h * (seg.rcont[6][i] + tab::d613 * k13v[i] + tab::d614 * k14[i] +
                             tab::d615 * k15[i] + tab::d616 * k16[i]);
      seg.rcont[7][i] = h * (seg.rcont[7][i] + tab::d713 * k13v[i] + tab::d714 * k14[i] +
                             tab::d715 * k15[i] + tab::d716 * k16[i]);
    }

    // Earliest event crossing inside the step, located by bisection on
    // the interpolant.
    std::optional<std::pair<double, std::size_t>> fired;
    std::vector<double> guard_new(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
      guard_new[e] = events[e].guard(seg.t1, y_new);
      if (!detail::crossed(guard_prev[e], guard_new[e], events[e].direction)) continue;
      double lo = t;
      double hi = seg.t1;
      const double g_lo = guard_prev[e];
      while (std::abs(hi - lo) > kEventTimeTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double g_mid = events[e].guard(mid, seg.value(mid));
        if (detail::crossed(g_lo, g_mid, events[e].direction) ||
            (g_mid == 0.0 && g_lo != 0.0)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (!fired || (hi - fired->first) * dir < 0.0) fired = std::pair{hi, e};
    }
    if (fired) {
      seg.t1 = fired->first;
      segments.push_back(seg);
      termination = {Termination::Cause::EventFired, fired->first, events[fired->second].id};
      break;
    }
    guard_prev = std::move(guard_new);

    segments.push_back(seg);
    t = seg.t1;
    y = y_new;
    k1 = k13v;

    const double norm = std::abs(*std::max_element(
        y.begin(), y.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }));
    if (norm > config.blow_up_norm) {
      termination = {Termination::Cause::BlowUp, t, {}};
      break;
    }
    if (last) {
      termination = {Termination::Cause::ReachedEnd, t, {}};
      break;
    }

    const double fac = std::max(facc2, std::min(facc1, fac11 / safe));
    double h_new = h / fac;
    if (std::abs(h_new) > h_max) h_new = dir * h_max;
    if (reject) h_new = dir * std::min(std::abs(h_new), std::abs(h));
    reject = false;
    h = h_new;
  }

  return DenseSolution<N>(span.start, problem.initial_state, std::move(segments),
                          std::move(termination));
}

/// Continues an existing solution to `new_end` from its final state.
/// Values on the old span are untouched.
template <std::size_t N>
DenseSolution<N> extend(const DenseSolution<N>& base, const Rhs<N>& rhs, double new_end,
                        const IntegratorConfig& config) {
  const double end = base.t_end();
  if ((new_end - end) * (base.forward() ? 1.0 : -1.0) <= 0.0) return base;
  OdeProblem<N> cont{rhs, end, base.final_state()};
  auto more = integrate(cont, {end, new_end}, config);
  std::vector<Segment<N>> segs = base.segments();
  segs.insert(segs.end(), more.segments().begin(), more.segments().end());
  return DenseSolution<N>(base.t_start(), base.initial_state(), std::move(segs),
                          more.termination());
}

}  // namespace s2cubic::ivp
