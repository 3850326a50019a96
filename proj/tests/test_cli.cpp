#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrll/cli.hpp"
#include "lrll/errors.hpp"

namespace fs = std::filesystem;
using lrll::cli::run;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lrll");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("lrll_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("LRLL_OUTPUT_DIR");
  }
  void TearDown() override {
    unsetenv("LRLL_OUTPUT_DIR");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(SensingSpec, Parse) {
  const auto s = lrll::cli::parse_sensing_spec("n=30,m=20,r=3,p=900");
  EXPECT_EQ(s.n, 30);
  EXPECT_EQ(s.m, 20);
  EXPECT_EQ(s.r, 3);
  EXPECT_EQ(s.p, 900);
  EXPECT_EQ(lrll::cli::parse_sensing_spec("n=5,r=1,p=10").m, 5);
  EXPECT_THROW(lrll::cli::parse_sensing_spec("n=5,r=1"), lrll::InputError);
  EXPECT_THROW(lrll::cli::parse_sensing_spec("n=5,r=1,p=x"), lrll::InputError);
  EXPECT_THROW(lrll::cli::parse_sensing_spec("n=5,r=1,p=10,q=2"), lrll::InputError);
  EXPECT_THROW(lrll::cli::parse_sensing_spec("n=2,r=3,p=10"), lrll::InputError);
}

TEST_F(CliTest, EnsembleRoundTripIsBitExact) {
  const lrll::Mat Ms = lrll::sensing_ground_truth(4, 3, 2, 9);
  const auto e = lrll::gaussian_sensing_ensemble(4, 3, 2, 25, Ms, 9);
  lrll::cli::write_ensemble(dir_ / "ens.json", e, 2);
  const auto back = lrll::cli::read_ensemble(dir_ / "ens.json");
  ASSERT_EQ(back.measurements(), 25);
  EXPECT_EQ(back.n, 4);
  EXPECT_EQ(back.m, 3);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.b, e.b);
  for (size_t i = 0; i < e.A.size(); ++i) EXPECT_EQ(back.A[i], e.A[i]);
  EXPECT_EQ(*back.Mstar, Ms);
  const std::string csv = slurp(dir_ / "ens.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "b,a0,a1,a2,a3,a4,a5,a6,a7,a8,a9,a10,a11");
}

TEST_F(CliTest, UnknownFlagPrintsUsage) {
  const Result r = invoke({"svp", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, InputErrors) {
  EXPECT_EQ(invoke({"rip", "--out", path("a")}).code, 1);  // no objective
  EXPECT_EQ(invoke({"rip", "--objective", "rank1", "--sensing", "n=3,r=1,p=9",
                    "--out", path("b")}).code, 1);
  EXPECT_EQ(invoke({"counterexample", "--family", "dialed", "--theta", "2",
                    "--out", path("c")}).code, 1);
  EXPECT_EQ(invoke({"witness", "--construct", "--delta", "0.3", "--out", path("d")}).code, 1);
  EXPECT_EQ(invoke({"svp", "--config", path("missing.json")}).code, 1);
}

TEST_F(CliTest, DivergenceExitsWithTwo) {
  const Result r = invoke({"svp", "--sensing", "n=4,r=1,p=40", "--eta", "1000",
                           "--rip-samples", "2", "--out", path("div")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(load(dir_ / "div" / "svp_summary.json")["status"], "diverged");
}

TEST_F(CliTest, CertifyRank1SpuriousPoint) {
  const Result r = invoke({"certify", "--objective", "rank1", "--point",
                           "e2-over-sqrt2", "--out", path("cert")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = load(dir_ / "cert" / "certify_report.json");
  EXPECT_EQ(j["schema"], "lrll.certify/1");
  EXPECT_EQ(j["report"]["classification"], "spurious-SOSP-candidate");
  EXPECT_EQ(j["report"]["gap"], "0.375");
  EXPECT_NE(r.out.find("spurious-SOSP-candidate"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "cert" / "config.json"));
  // Symmetric problem and the SVP fixed-point test at delta = 1/2.
  ASSERT_EQ(invoke({"certify", "--objective", "rank1", "--symmetric",
                    "--fixed-point-delta", "0.5", "--out", path("sym")}).code, 0);
  const json s = load(dir_ / "sym" / "certify_report.json");
  EXPECT_EQ(s["problem"], "h_s");
  EXPECT_EQ(s["svp_fixed_point"]["fixed_point"], "true");
}

TEST_F(CliTest, WitnessConstructionFeedsCertify) {
  const Result r = invoke({"witness", "--family", "example4", "--r", "2",
                           "--construct", "--out", path("w")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = load(dir_ / "w" / "witness_report.json");
  EXPECT_EQ(j["report"]["feasible"], "true");
  EXPECT_EQ(j["report"]["sufficient"], "true");
  EXPECT_EQ(j["construction"]["certificate"]["classification"], "spurious-SOSP-candidate");
  const fs::path obj = dir_ / "w" / "witness_objective.json";
  ASSERT_TRUE(fs::exists(obj));
  const Result c = invoke({"certify", "--objective-file", obj.string(), "--mu", "0",
                           "--tol-eig", "1e-9", "--out", path("c")});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(load(dir_ / "c" / "certify_report.json")["report"]["classification"],
            "spurious-SOSP-candidate");
  // delta = 1/3 is rejected through the alpha interval.
  ASSERT_EQ(invoke({"witness", "--delta", "0.3333333333333333", "--out", path("x")}).code, 0);
  const json x = load(dir_ / "x" / "witness_report.json");
  EXPECT_EQ(x["report"]["feasible"], "false");
  EXPECT_EQ(x["report"]["first_failure"], "alpha_interval");
}

TEST_F(CliTest, CounterexampleFamilies) {
  for (const std::string fam : {"rank1", "rankr", "witness", "dialed"}) {
    const std::string out = path(fam);
    const Result r = invoke({"counterexample", "--family", fam, "--r", "2", "--out", out});
    ASSERT_EQ(r.code, 0) << fam << ": " << r.err;
    const json j = load(fs::path(out) / "counterexample.json");
    EXPECT_EQ(j["family"], fam);
    ASSERT_TRUE(fs::exists(fs::path(out) / "objective.json"));
    // The emitted objective reproduces the same value at its point.
    const Result c = invoke({"certify", "--objective-file", out + "/objective.json",
                             "--out", out + "/cert"});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(load(fs::path(out) / "cert" / "certify_report.json")["report"]["f"],
              j["value_at_point"]);
  }
  EXPECT_EQ(load(dir_ / "rank1" / "counterexample.json")["gap"], "0.375");
  EXPECT_EQ(load(dir_ / "rankr" / "counterexample.json")["gap"], "0.75");
}

TEST_F(CliTest, SvpOutputsAreDeterministicAndReplayable) {
  const std::vector<std::string> base = {"svp", "--sensing", "n=6,r=2,p=400",
                                         "--seed", "3", "--tol", "1e-10",
                                         "--rip-samples", "5", "--rip-refine", "20"};
  auto with_out = [&](const std::string& o) {
    auto a = base;
    a.push_back("--out");
    a.push_back(o);
    return a;
  };
  ASSERT_EQ(invoke(with_out(path("a"))).code, 0);
  ASSERT_EQ(invoke(with_out(path("b"))).code, 0);
  ASSERT_EQ(invoke({"--config", path("a/config.json"), "--out", path("c"), "svp"}).code, 0);
  for (const char* f : {"svp_trace.csv", "svp_contraction.csv", "svp_summary.json", "config.json"}) {
    const std::string ref = slurp(dir_ / "a" / f);
    EXPECT_FALSE(ref.empty());
    EXPECT_EQ(ref, slurp(dir_ / "b" / f)) << f;
    EXPECT_EQ(ref, slurp(dir_ / "c" / f)) << f;
  }
  const std::string csv = slurp(dir_ / "a" / "svp_contraction.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,gap,ratio,bound");
  const json j = load(dir_ / "a" / "svp_summary.json");
  EXPECT_EQ(j["meta"]["seed"], "3");
  EXPECT_EQ(j["status"], "converged");
  // No temporaries left behind by the atomic writes.
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    EXPECT_NE(e.path().extension(), ".tmp");
  }
}

TEST_F(CliTest, ExplicitFlagsOverrideConfig) {
  std::ofstream(dir_ / "cfg.json") << R"({"seed": 5, "rip": {"objective": "rank1", "samples": "3", "refine": 10}})";
  ASSERT_EQ(invoke({"--config", path("cfg.json"), "--out", path("o"), "rip",
                    "--samples", "4"}).code, 0);
  const json j = load(dir_ / "o" / "rip_report.json");
  EXPECT_EQ(j["samples"], "4");
  EXPECT_EQ(j["refine"], "10");
  EXPECT_EQ(j["meta"]["seed"], "5");
  std::ofstream(dir_ / "bad.json") << R"({"rip": {"no-such-option": "1"}})";
  EXPECT_EQ(invoke({"--config", path("bad.json"), "--out", path("p"), "rip",
                    "--objective", "rank1"}).code, 1);
}

TEST_F(CliTest, OutputDirectoryPrecedence) {
  setenv("LRLL_OUTPUT_DIR", path("env").c_str(), 1);
  ASSERT_EQ(invoke({"rip", "--objective", "rank1", "--samples", "2"}).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "rip_report.json"));
  ASSERT_EQ(invoke({"rip", "--objective", "rank1", "--samples", "2", "--out", path("flag")}).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "flag" / "rip_report.json"));
}

TEST_F(CliTest, DescentAndEnsembleReuse) {
  ASSERT_EQ(invoke({"pgd", "--sensing", "n=5,r=1,p=400", "--mu", "0.4", "--step",
                    "0.2", "--f-stop", "1e-9", "--save-ensemble", "--out", path("p")}).code, 0);
  const json j = load(dir_ / "p" / "pgd_summary.json");
  EXPECT_EQ(j["status"], "converged");
  EXPECT_LE(std::stod(j["f_final"].get<std::string>()), 1e-9);
  ASSERT_TRUE(fs::exists(dir_ / "p" / "ensemble.csv"));
  ASSERT_EQ(invoke({"gd", "--ensemble", path("p/ensemble.json"), "--init", "global",
                    "--out", path("g")}).code, 0);
  const json g = load(dir_ / "g" / "gd_summary.json");
  EXPECT_EQ(g["iterations"], "0");
  EXPECT_EQ(g["final_point"]["classification"], "near-global");
  const std::string trace = slurp(dir_ / "p" / "pgd_trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "iter,f,grad_norm,sigma_r,event");
}

TEST_F(CliTest, ScanLiftAndBench) {
  ASSERT_EQ(invoke({"--threads", "2", "strict-saddle", "--objective", "rank1", "--points",
                    "60", "--gd-iters", "300", "--gd-step", "0.1", "--out", path("s")}).code, 0);
  const json s = load(dir_ / "s" / "scan_report.json");
  EXPECT_EQ(s["meta"]["threads"], "2");
  EXPECT_EQ(s["points"], "61");
  EXPECT_FALSE(s["obstructions"].empty());
  ASSERT_EQ(invoke({"lift", "--sensing", "n=4,r=1,p=300", "--rip-samples", "4",
                    "--out", path("l")}).code, 0);
  const json l = load(dir_ / "l" / "lift_report.json");
  EXPECT_LE(std::stod(l["max_rel_error_lifted_loss"].get<std::string>()), 1e-12);
  EXPECT_LE(std::stod(l["max_rel_error_value"].get<std::string>()), 1e-12);
  ASSERT_EQ(invoke({"bench", "--objective", "rankr", "--r", "2", "--repeats", "2",
                    "--out", path("b")}).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "bench.csv"));
}
