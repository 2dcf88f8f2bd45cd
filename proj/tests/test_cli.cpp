#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("cltlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(CLTLAB_CLI) + " " + args + " 2>" + err.string();
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

void expect_one_line_error(const Result& r, int code) {
  EXPECT_EQ(r.code, code) << r.err;
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
}

}  // namespace

TEST(Cli, DeltaSingleStep) {
  const auto r = run("delta --base prod: --n 1 --target phi");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_lines(r.out);
  ASSERT_EQ(rows.size(), 1u);
  const auto f = fields(rows[0], ' ');
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "1");
  EXPECT_NEAR(std::stod(f[1]), 0.34134474606854293, 1e-12);
  // 17 significant digits.
  EXPECT_EQ(f[1].size(), std::string("0.34134474606854298").size());
}

TEST(Cli, DeltaRejectsZeroSteps) {
  const auto r = run("delta --base prod:surd:0,1,1,2 --n 0");
  expect_one_line_error(r, 2);
  EXPECT_NE(r.err.find("n >= 1"), std::string::npos);
}

TEST(Cli, SymmetricPhi3EqualsPhi) {
  const auto a = run("delta --base prod:surd:0,1,1,2 --n 16 --target phi3");
  const auto b = run("delta --base prod:surd:0,1,1,2 --n 16 --target phi");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SweepWritesThreeRows) {
  const auto dir = scratch() / "runs";
  const auto r = run("sweep --base prod:surd:0,1,1,2 --n 16,64,256 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(csv, r.out);
  const auto rows = data_lines(csv);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "n,delta_phi,delta_phi3,argmax,seconds");
  EXPECT_EQ(fields(rows[1], ',')[0], "16");
  EXPECT_NE(csv.find("# config_hash fnv1a64:"), std::string::npos);
  EXPECT_NE(csv.find("# modules "), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "sweep.json"));
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_TRUE(j["rows"][2]["lower_bound_ok"].get<bool>());
}

TEST(Cli, OutputsAreByteIdentical) {
  const auto a = scratch() / "det_a", b = scratch() / "det_b";
  ASSERT_EQ(run("sweep --base prod:surd:1,1,2,5 --n 2^4..2^7 --threads 1 --out " + a.string()).code, 0);
  ASSERT_EQ(run("sweep --base prod:surd:1,1,2,5 --n 2^4..2^7 --threads 3 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
  EXPECT_EQ(slurp(a / "sweep.json"), slurp(b / "sweep.json"));
}

TEST(Cli, DiscrepancyOnePoint) {
  const auto r = run("disc --alpha surd:0,1,1,2 --n 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_lines(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(fields(rows[1], ',')[1]), 0.58579, 1e-5);
}

TEST(Cli, FitRecoversPlantedRate) {
  const auto in = scratch() / "planted.csv";
  {
    std::ofstream f(in);
    f << "# planted\nn,delta_phi,delta_phi3,argmax,seconds\n";
    for (int k = 4; k <= 11; ++k) f << (1 << k) << "," << 1.0 / double(1 << k) << ",,0,0\n";
  }
  const auto r = run("fit --in " + in.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["fit"]["exponent"].get<double>(), -1.0, 5e-4);
  EXPECT_EQ(j["column"], "delta_phi");
}

TEST(Cli, FitNeedsFivePoints) {
  const auto in = scratch() / "short.csv";
  {
    std::ofstream f(in);
    f << "n,dstar\n2,0.5\n4,0.25\n";
  }
  expect_one_line_error(run("fit --in " + in.string()), 2);
}

TEST(Cli, ResourceErrorsExitThree) {
  expect_one_line_error(run("delta --base prod:surd:0,1,1,2 --n 500 --cap 1000"), 3);
}

TEST(Cli, ConfigErrorsExitTwo) {
  expect_one_line_error(run("delta --base bogus --n 3"), 2);
  expect_one_line_error(run("frobnicate"), 2);
  expect_one_line_error(run("sweep --base prod: --n 64,16"), 2);
  expect_one_line_error(run("disc --alpha rat:1/0 --n 3"), 2);
  expect_one_line_error(run("bounds --base prod: --n 2 --cutoff prop22"), 2);
  expect_one_line_error(run("--precision-bits 8 disc --alpha surd:0,1,1,2 --n 3"), 2);
}

TEST(Cli, CfReportsGrowthAndInequalities) {
  const auto r = run("cf --spec prod:surd:0,1,1,2 --samples 20000");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double p = j["growth"]["p_hat"].get<double>();
  EXPECT_GT(p, 1.7);
  EXPECT_LT(p, 2.3);
  EXPECT_EQ(j["ineq61"]["violations"].get<int>(), 0);
}

TEST(Cli, BoundsEmitsRatioDiagnostics) {
  const auto r = run("bounds --base prod:surd:0,1,1,2 --n 16,64,256");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["records"].size(), 3u);
  for (const auto& rec : j["records"]) {
    const double sum = rec["moment_term"].get<double>() + rec["cutoff_term"].get<double>() +
                       rec["tail_integral"].get<double>();
    EXPECT_NEAR(rec["rhs_total"].get<double>(), sum, 1e-15);
    EXPECT_NEAR(rec["ratio"].get<double>(), rec["rhs_total"].get<double>() / rec["delta_n"].get<double>(), 1e-12);
  }
  EXPECT_LT(j["ratio_spread"].get<double>(), 2.0);
}

TEST(Cli, AverageOverAlpha) {
  const auto r = run("avg --n 16,32 --grid 8");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "n,average,ratio");
}

TEST(Cli, PrecisionFlagIsRecorded) {
  const auto r = run("disc --alpha surd:0,1,1,2 --n 3 --precision-bits 256");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"precision_bits\":256"), std::string::npos);
}
