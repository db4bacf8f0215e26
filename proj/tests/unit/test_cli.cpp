#include "ddfem/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace ddfem;

TEST(Cli, ExperimentNames) {
  EXPECT_EQ(experiment_names().size(), 6u);
  for (const auto& n : experiment_names()) EXPECT_EQ(experiment_name(parse_experiment(n)), n);
  EXPECT_THROW(parse_experiment("poisson"), std::invalid_argument);
}

TEST(Cli, MethodList) {
  const auto m = parse_method_list("nsddm, Mix0,ddm1");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0], MethodId::NSDDM);
  EXPECT_EQ(m[1], MethodId::Mix0);
  EXPECT_EQ(m[2], MethodId::DDM1);
  EXPECT_THROW(parse_method_list("nsddm,foo"), std::invalid_argument);
}

TEST(Cli, UnknownKeyIsNamed) {
  try {
    parse_config("taylor_green:\n  nu: 0.01\n  bogus: 3\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "taylor_green.bogus");
    EXPECT_NE(std::string(e.what()).find("taylor_green.bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_config("refinments: 3\n"), ConfigError);
}

TEST(Cli, BadValuesAreRejected) {
  try {
    parse_config("refinements: many\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "refinements");
  }
  try {
    parse_config("methods: [nsddm, ddm7]\n");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "methods");
  }
}

TEST(Cli, ParseOverridesBase) {
  RunConfig base;
  base.refinements = 2;
  const RunConfig c = parse_config("experiment: taylor-green\nmethods: mix0\ntaylor_green:\n  h: [0.1, 0.05]\n", base);
  EXPECT_EQ(c.experiment, Experiment::TaylorGreen);
  EXPECT_EQ(c.refinements, 2);
  ASSERT_EQ(c.methods.size(), 1u);
  EXPECT_EQ(c.methods[0], MethodId::Mix0);
  ASSERT_EQ(c.taylor_green.h.size(), 2u);
  EXPECT_EQ(c.taylor_green.h[1], 0.05);
}

TEST(Cli, YamlRoundTrip) {
  RunConfig c;
  c.experiment = Experiment::Cylinder;
  c.methods = {MethodId::Mix0, MethodId::NSDDM};
  c.orders = {2};
  c.seed = 77;
  c.tau = 0.0025;
  c.naive_advection = true;
  c.study.domains = {"circle"};
  c.searchlight.samples = 100;
  c.taylor_green.temporal_taus = {4e-3, 2e-3};
  c.cylinder.smoke = true;
  c.cylinder.resume = "ck.bin";
  const std::string y = to_yaml(c);
  EXPECT_EQ(to_yaml(parse_config(y)), y);
  const RunConfig r = parse_config(y);
  EXPECT_EQ(r.seed, 77u);
  EXPECT_EQ(r.tau, 0.0025);
  EXPECT_TRUE(r.cylinder.smoke);
  EXPECT_EQ(r.cylinder.resume, "ck.bin");
  EXPECT_EQ(r.study.domains, std::vector<std::string>{"circle"});
}

TEST(Cli, RunWritesManifestAndDiagnostics) {
  const auto dir = std::filesystem::temp_directory_path() / "ddfem_cli_run";
  std::filesystem::remove_all(dir);
  RunConfig c;
  c.experiment = Experiment::DiffusionStudy;
  c.output = dir.string();
  c.methods = {MethodId::NSDDM};
  c.orders = {1};
  c.refinements = 1;
  c.study.h0 = 0.2;
  c.study.domains = {"circle"};
  EXPECT_EQ(run(c), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.yaml"));
  EXPECT_TRUE(std::filesystem::exists(dir / "study_circle.csv"));
  // An unknown domain fails inside the experiment.
  c.study.domains = {"square"};
  EXPECT_NE(run(c), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "error.txt"));
  std::filesystem::remove_all(dir);
  c.methods = {MethodId::DDM1};
  c.experiment = Experiment::TaylorGreen;
  EXPECT_THROW(run(c), ConfigError);
}

TEST(Cli, ManifestReproducesCsv) {
  const auto base = std::filesystem::temp_directory_path();
  const auto a = base / "ddfem_cli_a", b = base / "ddfem_cli_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  RunConfig c;
  c.experiment = Experiment::AdvectionStudy;
  c.output = a.string();
  c.methods = {MethodId::Mix0};
  c.orders = {1};
  c.refinements = 2;
  c.study.h0 = 0.2;
  c.study.domains = {"arc"};
  ASSERT_EQ(run(c), 0);
  RunConfig again = load_config((a / "manifest.yaml").string());
  again.output = b.string();
  ASSERT_EQ(run(again), 0);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string first = slurp(a / "study_arc.csv");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(b / "study_arc.csv"));
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}
