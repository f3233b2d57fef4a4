#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(S2CUBIC_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      if (header) *header = line;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, SolveXMatchesSinh) {
  const CliRun r = run("solve --tau 0 --formulation x --t-max 3 --points 31");
  ASSERT_EQ(r.code, 0);
  std::string header;
  const auto rows = csv_rows(r.out, &header);
  EXPECT_EQ(header, "t,x,x1,x2,x3");
  ASSERT_EQ(rows.size(), 31u);
  for (const auto& row : rows) EXPECT_NEAR(row[1], std::sinh(row[0]), 1e-9 * std::cosh(row[0]));
  EXPECT_NE(r.out.find("# tau=0"), std::string::npos);
  EXPECT_NE(r.out.find("# formulation=x"), std::string::npos);
  EXPECT_NE(r.out.find("# rel_tol=1e-10"), std::string::npos);
  EXPECT_NE(r.out.find("# version="), std::string::npos);
}

TEST(Cli, SolveUAndGFormulations) {
  const CliRun u = run("solve --tau 0 --formulation u --r-min 0.5 --r-max 2 --points 5");
  ASSERT_EQ(u.code, 0);
  for (const auto& row : csv_rows(u.out)) EXPECT_NEAR(row[1], 0.5 * (row[0] - 1.0 / row[0]), 1e-9);
  const CliRun g = run("solve --tau 0 --formulation g --points 5");
  ASSERT_EQ(g.code, 0);
  for (const auto& row : csv_rows(g.out)) EXPECT_NEAR(row[1], 0.5 * (1.0 - row[0]), 1e-10);
  EXPECT_NE(g.out.find("# g0_at_zero="), std::string::npos);
}

TEST(Cli, NumbersRoundTrip) {
  const CliRun r = run("solve --tau 0.3 --t-max 1 --points 7");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::size_t longest = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::stod(cell));
      EXPECT_EQ(cell, buf);
      std::size_t digits = 0;
      bool leading = true;
      for (char c : cell) {
        if (c == 'e') break;
        if (!std::isdigit(static_cast<unsigned char>(c))) continue;
        leading = leading && c == '0';
        digits += leading ? 0 : 1;
      }
      longest = std::max(longest, digits);
    }
  }
  EXPECT_EQ(longest, 17u);
}

TEST(Cli, JsonFormat) {
  const CliRun r = run("solve --tau 0.1 --t-max 1 --points 3 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["formulation"], "x");
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["columns"][1], "x");
}

TEST(Cli, FindT) {
  const CliRun r = run("find-t --tol 1e-4");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["t_estimate"].get<double>(), 0.57735, 5e-4);
  EXPECT_EQ(j["bracket"].size(), 2u);
}

TEST(Cli, FindTTightBracketAndSubcriticalBracket) {
  const CliRun r = run("find-t --tol 1e-5");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j["bracket"][1].get<double>() - j["bracket"][0].get<double>(), 1e-5);
  EXPECT_EQ(run("find-t --bracket -0.5 0").code, 4);
}

TEST(Cli, SolveGStartsAtOne) {
  const CliRun r = run("solve --tau 0.3 --formulation g --points 5");
  ASSERT_EQ(r.code, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0][0], 1.0);
  EXPECT_EQ(rows[0][1], 0.0);
  EXPECT_EQ(rows[0][2], -0.5);
}

TEST(Cli, VerifyCurvatureAndCorruptedAll) {
  const CliRun r = run("verify curvature --tau 0");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j["results"][0]["max_residual"].get<double>(), 1e-6);
  const CliRun bad = run("verify all --tau 0.3 --corrupt-jet 0.1");
  EXPECT_EQ(bad.code, 5);
  EXPECT_FALSE(nlohmann::json::parse(bad.out)["pass"].get<bool>());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("solve --tau 0 --no-such-option").code, 2);
  EXPECT_EQ(run("solve").code, 2);
  EXPECT_EQ(run("solve --tau 0.7").code, 2);
  EXPECT_EQ(run("solve --tau 0 --formulation z").code, 2);
  EXPECT_EQ(run("solve --tau 0 --rel-tol -1").code, 2);
  EXPECT_EQ(run("find-t --bracket -0.3 0").code, 4);
  EXPECT_EQ(run("solve --tau 0.9 --outside-window --t-max 10").code, 3);
  EXPECT_EQ(run("verify bracket --tau 0.3 --corrupt-jet 0.1").code, 5);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, VerifyIsDeterministic) {
  const CliRun a = run("verify bracket --tau 0.3 --seed 99 --samples 50");
  const CliRun b = run("verify bracket --tau 0.3 --seed 99 --samples 50");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["results"].size(), 4u);
}

TEST(Cli, VerifyAll) {
  const CliRun r = run("verify all --tau 0.5");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j["results"].size(), 11u);
}

TEST(Cli, PortraitGrid) {
  const CliRun r = run("portrait --q-range 0 1 --p-range -1 1 --nq 3 --np 3");
  ASSERT_EQ(r.code, 0);
  std::string header;
  const auto rows = csv_rows(r.out, &header);
  EXPECT_EQ(header, "q,p,q_dot,p_dot");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[4][0], 0.5);
  EXPECT_EQ(rows[4][1], 0.0);
}

TEST(Cli, Report) {
  const CliRun r = run("report --tau 0.3");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["equilibria"].size(), 4u);
  EXPECT_TRUE(j["poles"]["regular"].get<bool>());
  EXPECT_EQ(j["orbit_of_minus_tau"]["verdict"], "ConvergesToNode");
}

TEST(Cli, AtomicFileOutput) {
  const auto dir = std::filesystem::temp_directory_path() / "s2cubic_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  std::filesystem::remove(path);
  const CliRun r = run("solve --tau 0 --points 4 --out " + path.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(std::filesystem::exists(path));
  EXPECT_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(csv_rows(ss.str()).size(), 4u);
  EXPECT_EQ(run("solve --tau 0 --out /nonexistent-dir/x.csv").code, 2);
}
