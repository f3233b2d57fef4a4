#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "output.hpp"
#include "s2cubic/s2cubic.hpp"

namespace s2cubic::cli {
namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kSolver = 3, kBracket = 4, kVerification = 5 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::OutOfWindow:
      return kUsage;
    case ErrorKind::BadBracket:
    case ErrorKind::BudgetExhausted:
      return kBracket;
    default:
      return kSolver;
  }
}

struct Common {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  std::string out;
  std::string format;

  IntegratorConfig config() const {
    IntegratorConfig c;
    c.rel_tol = rel_tol;
    c.abs_tol = abs_tol;
    c.validate();
    return c;
  }
};

void add_common(CLI::App* sub, Common& c, const std::string& default_format,
                std::vector<std::string> formats) {
  sub->add_option("--rel-tol", c.rel_tol, "relative integration tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--abs-tol", c.abs_tol, "absolute integration tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("-o,--out", c.out, "output file (default stdout), written atomically");
  c.format = default_format;
  sub->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember(std::move(formats)))
      ->capture_default_str();
}

std::vector<std::pair<std::string, std::string>> header(const std::string& command,
                                                        const Common& c) {
  return {{"tool", "s2cubic"},
          {"version", kVersion},
          {"command", command},
          {"rel_tol", fmt_num(c.rel_tol)},
          {"abs_tol", fmt_num(c.abs_tol)}};
}

Json json_header(const std::string& command, const Common& c) {
  Json j = Json::object();
  j["tool"] = "s2cubic";
  j["version"] = kVersion;
  j["command"] = command;
  j["rel_tol"] = c.rel_tol;
  j["abs_tol"] = c.abs_tol;
  return j;
}

void write_table(Table& t, const Common& c) {
  emit(c.format == "json" ? dump(t.to_json()) : t.to_csv(), c.out);
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  double tau = 0.0;
  std::string formulation = "x";
  double t_min = 0.0;
  double t_max = 5.0;
  double r_min = 0.1;
  double r_max = 10.0;
  double s_min = 1e-6;
  std::size_t points = 101;
  bool outside_window = false;
};

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = k + 1 == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return v;
}

int run_solve(const SolveArgs& a, const Common& c) {
  const Tau tau = a.outside_window ? Tau::trusted(a.tau) : Tau::checked(a.tau);
  const IntegratorConfig cfg = c.config();
  if (a.points < 2) throw Error(ErrorKind::InvalidArgument, "--points must be at least 2");

  Table t;
  t.meta = header("solve", c);
  t.meta.insert(t.meta.begin() + 3, {"formulation", a.formulation});
  t.meta.insert(t.meta.begin() + 4, {"tau", fmt_num(a.tau)});

  if (a.formulation == "x") {
    if (!(a.t_max > a.t_min)) throw Error(ErrorKind::InvalidArgument, "need t-min < t-max");
    const XSolution sol = solve_x(tau, std::max(std::abs(a.t_min), std::abs(a.t_max)), cfg);
    t.columns = {"t", "x", "x1", "x2", "x3"};
    for (double s : linspace(a.t_min, a.t_max, a.points)) {
      const Jet j = sol.jet(s);
      t.rows.push_back({s, j.v, j.d1, j.d2, j.d3});
    }
  } else if (a.formulation == "u") {
    if (!(a.r_min > 0.0 && a.r_max > a.r_min)) {
      throw Error(ErrorKind::InvalidArgument, "need 0 < r-min < r-max");
    }
    const double lo = std::log(a.r_min);
    const double hi = std::log(a.r_max);
    const UView view(solve_x(tau, std::max(std::abs(lo), std::abs(hi)), cfg));
    t.columns = {"r", "u", "u1", "u2", "u3"};
    const auto grid = linspace(lo, hi, a.points);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double r = k == 0 ? a.r_min : k + 1 == grid.size() ? a.r_max : std::exp(grid[k]);
      const Jet j = view(r);
      t.rows.push_back({r, j.v, j.d1, j.d2, j.d3});
    }
  } else {
    const GSolution sol = solve_g(tau, cfg, a.s_min);
    const GLimits& L = sol.limits_at_zero();
    t.meta.push_back({"g0_at_zero", fmt_num(L.g0)});
    t.meta.push_back({"g1_at_zero", fmt_num(L.g1)});
    t.meta.push_back({"g2_at_zero", fmt_num(L.g2)});
    t.columns = {"s", "g", "g1", "g2", "g3"};
    for (double s : linspace(1.0, sol.s_min(), a.points)) {
      const Jet j = sol.jet(s);
      t.rows.push_back({s, j.v, j.d1, j.d2, j.d3});
    }
  }
  write_table(t, c);
  return kOk;
}

// ---------------------------------------------------------------------------

struct FindTArgs {
  double tol = 1e-4;
  std::vector<double> bracket{-1.0, 0.0};
  double t_budget = 200.0;
  double delta_trap = 0.05;
};

int run_find_t(const FindTArgs& a, const Common& c) {
  ThresholdOptions opts;
  opts.classify.t_budget = a.t_budget;
  opts.classify.delta_trap = a.delta_trap;
  const ThresholdResult r = find_T(a.tol, {a.bracket[0], a.bracket[1]}, c.config(), opts);
  Json j = json_header("find-t", c);
  j["tol"] = a.tol;
  j["t_estimate"] = r.t_estimate;
  j["bracket"] = {r.bracket.low, r.bracket.high};
  j["evaluations"] = r.evaluations;
  j["undetermined_count"] = r.undetermined_count;
  emit(dump(j), c.out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct PortraitArgs {
  std::vector<double> q_range{-2.0, 2.0};
  std::vector<double> p_range{-2.0, 2.0};
  std::size_t nq = 21;
  std::size_t np = 21;
};

int run_portrait(const PortraitArgs& a, const Common& c) {
  Table t;
  t.meta = header("portrait", c);
  t.columns = {"q", "p", "q_dot", "p_dot"};
  for (const auto& s :
       portrait_grid(a.q_range[0], a.q_range[1], a.p_range[0], a.p_range[1], a.nq, a.np)) {
    t.rows.push_back({s.point.q, s.point.p, s.velocity.q, s.velocity.p});
  }
  write_table(t, c);
  return kOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string check = "all";
  double tau = 0.3;
  std::size_t samples = 100;
  std::uint64_t seed = 12345;
  double corrupt_jet = 0.0;
};

int run_verify(const VerifyArgs& a, const Common& c) {
  const Tau tau = Tau::checked(a.tau);
  const IntegratorConfig cfg = c.config();
  const bool all = a.check == "all";
  std::vector<verify::CheckResult> results;
  auto take = [&](std::vector<verify::CheckResult> rs) {
    results.insert(results.end(), rs.begin(), rs.end());
  };
  if (all || a.check == "bracket") {
    take(verify::check_bracket(tau, a.samples, a.seed, cfg, {}, {a.corrupt_jet}));
  }
  if (all || a.check == "conservation") take(verify::check_conservation(tau, cfg));
  if (all || a.check == "curvature") take(verify::check_curvature(tau, cfg));
  if (all || a.check == "consistency") take(verify::check_consistency(tau, cfg));
  if (all || a.check == "poles") take(verify::check_poles(tau, cfg));

  Json j = json_header("verify", c);
  j["check"] = a.check;
  j["tau"] = a.tau;
  j["seed"] = a.seed;
  j["samples"] = a.samples;
  bool pass = true;
  Json arr = Json::array();
  for (const auto& r : results) {
    arr.push_back({{"check", r.check},
                   {"n_samples", r.n_samples},
                   {"max_residual", r.max_residual},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass}});
    pass = pass && r.pass;
  }
  j["results"] = std::move(arr);
  j["pass"] = pass;
  emit(dump(j), c.out);
  return pass ? kOk : kVerification;
}

// ---------------------------------------------------------------------------

int run_report(double tau_value, const Common& c) {
  const Tau tau = Tau::checked(tau_value);
  const IntegratorConfig cfg = c.config();
  Json j = json_header("report", c);
  j["tau"] = tau_value;

  const XSolution x = solve_x(tau, 5.0, cfg);
  const Jet j1 = x.jet(1.0);
  j["x_at_1"] = {{"x", j1.v}, {"x1", j1.d1}, {"x2", j1.d2}, {"x3", j1.d3}};

  Json eqs = Json::array();
  for (const auto& e : equilibria()) {
    eqs.push_back({{"q", e.point.q},
                   {"p", e.point.p},
                   {"eigenvalues", e.eigenvalues},
                   {"kind", std::string(to_string(e.kind))}});
  }
  j["equilibria"] = std::move(eqs);

  const OrbitClassification oc = classify_orbit(-tau_value, cfg);
  j["orbit_of_minus_tau"] = {{"verdict", std::string(to_string(oc.verdict))},
                             {"trigger", oc.diagnostic.trigger},
                             {"time_used", oc.diagnostic.time_used}};

  const PoleReport p = pole_report(tau, cfg);
  j["poles"] = {{"zeta0", p.zeta0},
                {"xi0", p.xi0},
                {"g2_plus", p.g2_plus},
                {"g2_minus", p.g2_minus},
                {"nu0", p.nu0},
                {"mu0", p.mu0},
                {"curvature_north", p.curvature_north},
                {"curvature_south", p.curvature_south},
                {"decay_deviation", p.decay_deviation},
                {"regular", p.regular()}};

  const UView view(x);
  Json curv = Json::array();
  for (double r : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    curv.push_back({{"r", r}, {"K", gaussian_curvature(view, r)}});
  }
  j["curvature"] = std::move(curv);
  emit(dump(j), c.out);
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Adjustable-metric family on the sphere: solver and checks", "s2cubic"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.allow_extras(false);

  Common c_solve, c_find, c_portrait, c_verify, c_report;

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "integrate one formulation and tabulate it");
  solve->add_option("--tau", solve_args.tau, "family parameter")->required();
  solve->add_option("--formulation", solve_args.formulation, "x, u or g")
      ->check(CLI::IsMember({"x", "u", "g"}))
      ->capture_default_str();
  solve->add_option("--t-min", solve_args.t_min, "x: first time")->capture_default_str();
  solve->add_option("--t-max", solve_args.t_max, "x: last time")->capture_default_str();
  solve->add_option("--r-min", solve_args.r_min, "u: smallest radius")->capture_default_str();
  solve->add_option("--r-max", solve_args.r_max, "u: largest radius")->capture_default_str();
  solve->add_option("--s-min", solve_args.s_min, "g: smallest s")->capture_default_str();
  solve->add_option("--points", solve_args.points, "rows in the table")->capture_default_str();
  solve->add_flag("--outside-window", solve_args.outside_window,
                  "accept tau outside the existence window");
  add_common(solve, c_solve, "csv", {"csv", "json"});

  FindTArgs ft_args;
  auto* find_t = app.add_subcommand("find-t", "locate the existence threshold T by bisection");
  find_t->add_option("--tol", ft_args.tol, "bracket width to stop at")->capture_default_str();
  find_t->add_option("--bracket", ft_args.bracket, "initial bracket LOW HIGH on the tau axis")
      ->expected(2)
      ->capture_default_str();
  find_t->add_option("--budget", ft_args.t_budget, "classification budget")->capture_default_str();
  find_t->add_option("--delta-trap", ft_args.delta_trap, "decision ball radius")
      ->capture_default_str();
  add_common(find_t, c_find, "json", {"json"});

  PortraitArgs pp_args;
  auto* portrait = app.add_subcommand("portrait", "sample the phase-plane vector field");
  portrait->add_option("--q-range", pp_args.q_range, "Q_LO Q_HI")->expected(2)->capture_default_str();
  portrait->add_option("--p-range", pp_args.p_range, "P_LO P_HI")->expected(2)->capture_default_str();
  portrait->add_option("--nq", pp_args.nq, "grid points in q")->capture_default_str();
  portrait->add_option("--np", pp_args.np, "grid points in p")->capture_default_str();
  add_common(portrait, c_portrait, "csv", {"csv", "json"});

  VerifyArgs v_args;
  auto* ver = app.add_subcommand("verify", "run numerical checks; exit 5 if any fails");
  ver->add_option("check", v_args.check, "bracket, conservation, curvature, consistency, poles or all")
      ->check(CLI::IsMember({"bracket", "conservation", "curvature", "consistency", "poles", "all"}))
      ->capture_default_str();
  ver->add_option("--tau", v_args.tau, "family parameter")->capture_default_str();
  ver->add_option("--samples", v_args.samples, "random phase-space states")->capture_default_str();
  ver->add_option("--seed", v_args.seed, "random seed")->capture_default_str();
  ver->add_option("--corrupt-jet", v_args.corrupt_jet)->group("");
  add_common(ver, c_verify, "json", {"json"});

  double report_tau = 0.3;
  auto* report = app.add_subcommand("report", "summary of one family member");
  report->add_option("--tau", report_tau, "family parameter")->capture_default_str();
  add_common(report, c_report, "json", {"json"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return run_solve(solve_args, c_solve);
    if (*find_t) return run_find_t(ft_args, c_find);
    if (*portrait) return run_portrait(pp_args, c_portrait);
    if (*ver) return run_verify(v_args, c_verify);
    return run_report(report_tau, c_report);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
}

}  // namespace
}  // namespace s2cubic::cli

int main(int argc, char** argv) { return s2cubic::cli::run(argc, argv); }
