#pragma once

#include <cmath>
#include <string>

#include "s2cubic/errors.hpp"
#include "s2cubic/phase_portrait.hpp"

namespace s2cubic {

struct Bracket {
  double low = -1.0;
  double high = 0.0;
};

struct ThresholdResult {
  double t_estimate = 0.0;
  /// low classifies as escaping, high as converging.
  Bracket bracket;
  int evaluations = 0;
  int undetermined_count = 0;
};

struct ThresholdOptions {
  ClassifyOptions classify;
  int budget_doublings = 3;
  /// Escape margin used once the budget doublings are spent.
  double relaxed_p_sep = -0.51;
  /// BudgetExhausted is raised past this many unresolved midpoints.
  int max_undetermined = 8;
};

/// Window built from a located threshold.
inline TauWindow window_from(const ThresholdResult& r, double margin = 1e-3) {
  return {r.t_estimate, margin};
}

namespace detail {

class Decider {
 public:
  Decider(const IntegratorConfig& config, const ThresholdOptions& opts, ThresholdResult& tally)
      : config_(config), opts_(opts), tally_(tally) {}

  Verdict operator()(double tau) {
    ClassifyOptions co = opts_.classify;
    for (int attempt = 0; attempt <= opts_.budget_doublings; ++attempt) {
      ++tally_.evaluations;
      const Verdict v = classify_orbit(tau, config_, co).verdict;
      if (v != Verdict::Undetermined) return v;
      co.t_budget *= 2.0;
    }
    co.p_sep = opts_.relaxed_p_sep;
    ++tally_.evaluations;
    const Verdict v = classify_orbit(tau, config_, co).verdict;
    if (v != Verdict::Undetermined) return v;
    if (++tally_.undetermined_count > opts_.max_undetermined) {
      throw Error(ErrorKind::BudgetExhausted,
                  "more than " + std::to_string(opts_.max_undetermined) +
                      " undetermined classifications");
    }
    // Conservative: an undecided orbit is not counted as converging.
    return Verdict::EscapesToSaddleSide;
  }

 private:
  const IntegratorConfig& config_;
  const ThresholdOptions& opts_;
  ThresholdResult& tally_;
};

}  // namespace detail

/// Bisection on tau over `initial` (low < high <= 0) for the boundary
/// between escaping and converging orbits; T is minus that boundary.
inline ThresholdResult find_T(double tol = 1e-4, Bracket initial = {},
                              const IntegratorConfig& config = {},
                              const ThresholdOptions& opts = {}) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  if (!(initial.low < initial.high) || initial.high > 0.0) {
    throw Error(ErrorKind::InvalidArgument, "bracket must satisfy low < high <= 0");
  }
  ThresholdResult res;
  detail::Decider decide(config, opts, res);
  const Verdict v_low = decide(initial.low);
  const Verdict v_high = decide(initial.high);
  if (v_low != Verdict::EscapesToSaddleSide || v_high != Verdict::ConvergesToNode) {
    throw Error(ErrorKind::BadBracket,
                "bracket (" + std::to_string(initial.low) + ", " + std::to_string(initial.high) +
                    ") classifies as " + std::string(to_string(v_low)) + " / " +
                    std::string(to_string(v_high)));
  }
  Bracket b = initial;
  while (b.high - b.low > tol) {
    const double mid = 0.5 * (b.low + b.high);
    (decide(mid) == Verdict::ConvergesToNode ? b.high : b.low) = mid;
  }
  res.bracket = b;
  res.t_estimate = -0.5 * (b.low + b.high);
  return res;
}

}  // namespace s2cubic
