#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "../support/instances.hpp"
#include "isodiff/dataset_io.hpp"
#include "isodiff/posterior.hpp"
#include "isodiff/simulate.hpp"
#include "isodiff/trace_io.hpp"

using namespace isodiff;
using testsupport::make_design;

namespace {

ChainOutput small_run(int chains = 2) {
  SimulationSpec spec;
  spec.design = make_design(1, 2, 3, {}, {{2, 2}}, {1});
  spec.de_prob = {0.0, 0.4};
  spec.seed = 23;
  const auto [dataset, truth] = simulate_dataset(spec);
  ChainConfig config;
  config.burn_in = 20;
  config.keep = 30;
  config.thin = 3;
  config.num_chains = chains;
  config.seed = 5;
  return run_chains(dataset, default_hyperparameters(), config);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("isodiff_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("traces round-trip through the file format") {
  const ChainOutput out = small_run();
  TempFile file("traces.csv");
  save_traces(out, file.path);
  const ChainOutput re = read_traces(file.path);

  REQUIRE(re.samples.size() == out.samples.size());
  REQUIRE(re.chain_start == out.chain_start);
  CHECK(re.design.spectra_per_protein == out.design.spectra_per_protein);
  CHECK(re.design.reference_group == out.design.reference_group);
  CHECK(re.config.seed == out.config.seed);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    CHECK(re.samples[i].kappa == out.samples[i].kappa);  // exact: shortest round-trip
    CHECK(re.samples[i].alpha == out.samples[i].alpha);
    CHECK(re.samples[i].beta == out.samples[i].beta);
    CHECK(re.samples[i].gamma == out.samples[i].gamma);
    CHECK(re.samples[i].p == out.samples[i].p);
    CHECK(re.samples[i].sigma() == doctest::Approx(out.samples[i].sigma()).epsilon(1e-15));
  }

  // downstream results agree exactly
  const auto de_a = de_result_table(out);
  const auto de_b = de_result_table(re);
  REQUIRE(de_a.size() == de_b.size());
  for (std::size_t i = 0; i < de_a.size(); ++i) {
    CHECK(de_a[i].prob_de == de_b[i].prob_de);
    CHECK(de_a[i].mean_effect == de_b[i].mean_effect);
  }
}

TEST_CASE("trace writes are byte-identical across repeated runs") {
  const ChainOutput a = small_run();
  const ChainOutput b = small_run();
  std::ostringstream sa, sb;
  write_traces(a, sa);
  write_traces(b, sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("parameter filters restrict the trace file") {
  const ChainOutput out = small_run(1);
  std::ostringstream s;
  TraceWriteOptions options;
  options.params = {"sigma", "beta"};
  write_traces(out, s, options);
  std::istringstream in(s.str());
  std::string line;
  bool saw_sigma = false, saw_beta = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("chain,", 0) == 0) continue;
    CHECK((line.find(",sigma,") != std::string::npos ||
           line.find(",beta[") != std::string::npos));
    saw_sigma |= line.find(",sigma,") != std::string::npos;
    saw_beta |= line.find(",beta[") != std::string::npos;
  }
  CHECK(saw_sigma);
  CHECK(saw_beta);
}

TEST_CASE("read_traces rejects malformed and incomplete files") {
  TempFile file("bad_traces.csv");
  SUBCASE("empty file") {
    std::ofstream(file.path) << "";
    CHECK_THROWS_AS(read_traces(file.path), isodiff::io_error);
  }
  SUBCASE("header only, no states") {
    std::ofstream(file.path) << "chain,iteration,parameter,value\n";
    CHECK_THROWS_AS(read_traces(file.path), isodiff::io_error);
  }
  SUBCASE("missing design echo") {
    std::ofstream(file.path) << "chain,iteration,parameter,value\n1,1,sigma,0.3\n";
    CHECK_THROWS_WITH_AS(read_traces(file.path), doctest::Contains("design"), isodiff::io_error);
  }
  SUBCASE("missing required families") {
    std::ofstream(file.path)
        << "# E = 1\n# G = 2\n# P = 1\n# n_I = 2\n# m = 1\n# n.1 = 1,1\n# g_ref = 1\n"
        << "chain,iteration,parameter,value\n"
        << "1,1,sigma,0.3\n";
    CHECK_THROWS_WITH_AS(read_traces(file.path), doctest::Contains("alpha"), isodiff::io_error);
  }
  SUBCASE("malformed row") {
    std::ofstream(file.path)
        << "# E = 1\n# G = 2\n# P = 1\n# n_I = 2\n# m = 1\n# n.1 = 1,1\n# g_ref = 1\n"
        << "chain,iteration,parameter,value\n"
        << "one,1,sigma,0.3\n";
    CHECK_THROWS_AS(read_traces(file.path), isodiff::io_error);
  }
  SUBCASE("unknown parameter name") {
    std::ofstream(file.path)
        << "# E = 1\n# G = 2\n# P = 1\n# n_I = 2\n# m = 1\n# n.1 = 1,1\n# g_ref = 1\n"
        << "chain,iteration,parameter,value\n"
        << "1,1,zeta[1:1],0.3\n";
    CHECK_THROWS_AS(read_traces(file.path), isodiff::io_error);
  }
}

TEST_CASE("hand-written trace reproduces the counting example") {
  TempFile file("counting.csv");
  std::ofstream out(file.path);
  out << "# E = 1\n# G = 2\n# P = 1\n# n_I = 2\n# m = 1\n# n.1 = 1,1\n# g_ref = 1\n"
      << "chain,iteration,parameter,value\n";
  const int betas[4] = {1, 1, 0, 1};
  for (int i = 0; i < 4; ++i) {
    out << "1," << i + 1 << ",alpha[1:1],10\n";
    out << "1," << i + 1 << ",beta[2:1]," << betas[i] << '\n';
    out << "1," << i + 1 << ",gamma[2:1],0.5\n";
    out << "1," << i + 1 << ",p[2:1],0.05\n";
    out << "1," << i + 1 << ",sigma,0.3\n";
  }
  out.close();

  const ChainOutput re = read_traces(file.path);
  const auto table = de_result_table(re);
  REQUIRE(table.size() == 1);
  CHECK(table[0].prob_de == doctest::Approx(0.75));
  CHECK(table[0].mean_effect == doctest::Approx(0.375));
  CHECK(table[0].classified);
}
