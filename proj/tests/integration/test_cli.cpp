#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// End-to-end checks of the isodiff binary: every subcommand, the documented
// error paths, and manifest-based reproducibility.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string tool = ISODIFF_TOOL_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string log = (fs::temp_directory_path() / "isodiff_cli_log.txt").string();
  const std::string cmd = tool + " " + args + " >" + log + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = raw < 0 ? raw : WEXITSTATUS(raw);
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("isodiff_cli_" + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

constexpr const char* kSmallSim =
    "E = 1\nG = 2\nP = 10\nn_I = 4\nn.1 = 2,2\ng_ref = 1\n"
    "mean_spectra = 3\nalpha_sd = 1.0\nde_prob = 0,0.3\nsigma = 0.3\nseed = 7\n";

constexpr const char* kSmallChain = "burnin = 200\nkeep = 500\nthin = 5\nchains = 2\nseed = 3\n";

}  // namespace

TEST_CASE("simulate writes dataset, truth, config echo and manifest; seeds reproduce") {
  Workspace ws;
  write_file(ws.p("sim.cfg"), kSmallSim);
  const auto r1 = run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("a"));
  REQUIRE(r1.exit_code == 0);
  CHECK(fs::exists(ws.p("a/data.csv")));
  CHECK(fs::exists(ws.p("a/truth.csv")));
  CHECK(fs::exists(ws.p("a/sim_config.cfg")));
  CHECK(fs::exists(ws.p("a/manifest.json")));

  const auto r2 = run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("b"));
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(ws.p("a/data.csv")) == slurp(ws.p("b/data.csv")));
  CHECK(slurp(ws.p("a/truth.csv")) == slurp(ws.p("b/truth.csv")));

  // a different seed gives different data
  const auto r3 = run("simulate --config " + ws.p("sim.cfg") + " --seed 8 --out " + ws.p("c"));
  REQUIRE(r3.exit_code == 0);
  CHECK(slurp(ws.p("a/data.csv")) != slurp(ws.p("c/data.csv")));
}

TEST_CASE("validate accepts good data and reports violations with exit 1") {
  Workspace ws;
  write_file(ws.p("sim.cfg"), kSmallSim);
  REQUIRE(run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("sim")).exit_code == 0);
  const auto ok = run("validate --data " + ws.p("sim/data.csv") + " --config " +
                      ws.p("sim/sim_config.cfg"));
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("ok:") != std::string::npos);

  // duplicating a row violates coordinate uniqueness under any design
  std::string data = slurp(ws.p("sim/data.csv"));
  const auto first_row = data.find('\n') + 1;
  data += data.substr(first_row, data.find('\n', first_row) - first_row + 1);
  write_file(ws.p("bad.csv"), data);
  const auto bad = run("validate --data " + ws.p("bad.csv") + " --config " +
                       ws.p("sim/sim_config.cfg"));
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("duplicate coordinate") != std::string::npos);
}

TEST_CASE("fit -> summarize -> ppc -> baseline pipeline") {
  Workspace ws;
  write_file(ws.p("sim.cfg"), kSmallSim);
  REQUIRE(run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("sim")).exit_code == 0);
  write_file(ws.p("chain.cfg"), std::string("g_ref = 1\n") + kSmallChain);

  const auto fit = run("fit --data " + ws.p("sim/data.csv") + " --config " + ws.p("chain.cfg") +
                       " --out " + ws.p("fit") + " --threads 2");
  REQUIRE(fit.exit_code == 0);
  REQUIRE(fs::exists(ws.p("fit/traces.csv")));
  REQUIRE(fs::exists(ws.p("fit/manifest.json")));

  const auto sum = run("summarize --traces " + ws.p("fit/traces.csv") + " --out " + ws.p("sum"));
  REQUIRE(sum.exit_code == 0);
  const std::string de = slurp(ws.p("sum/de_results.csv"));
  CHECK(de.rfind("group,protein,prob_de,mean_effect,sd_effect,q2.5,q97.5,classified", 0) == 0);
  // one row per (treatment group, protein)
  CHECK(std::count(de.begin(), de.end(), '\n') == 11);
  const std::string diag = slurp(ws.p("sum/diagnostics.csv"));
  CHECK(diag.find("sigma,") != std::string::npos);
  CHECK(diag.find("kappa[1:2:1],") != std::string::npos);

  const auto ppc = run("ppc --traces " + ws.p("fit/traces.csv") + " --data " +
                       ws.p("sim/data.csv") + " --out " + ws.p("ppc") +
                       " --max-obs 20 --coords 1:2:1:1:1 --grid 25 --ma-pair \"1:1:1 1:2:1\"");
  REQUIRE(ppc.exit_code == 0);
  const std::string pred = slurp(ws.p("ppc/predictive.csv"));
  CHECK(pred.rfind("experiment,group,sample,protein,spectrum,observed,lo95,hi95,covered", 0) == 0);
  CHECK(fs::exists(ws.p("ppc/predictive_density.csv")));
  CHECK(fs::exists(ws.p("ppc/ma_plot.csv")));

  const auto base = run("baseline --data " + ws.p("sim/data.csv") + " --config " +
                        ws.p("sim/sim_config.cfg") + " --out " + ws.p("base"));
  REQUIRE(base.exit_code == 0);
  const std::string baseline = slurp(ws.p("base/baseline.csv"));
  CHECK(baseline.rfind("protein,t,df,p,q,significant", 0) == 0);
  CHECK(std::count(baseline.begin(), baseline.end(), '\n') == 11);
}

TEST_CASE("fit reproducibility: same seed byte-identical, manifest re-run identical") {
  Workspace ws;
  write_file(ws.p("sim.cfg"), kSmallSim);
  REQUIRE(run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("sim")).exit_code == 0);
  write_file(ws.p("chain.cfg"), std::string("g_ref = 1\n") + kSmallChain);

  const std::string common = "fit --data " + ws.p("sim/data.csv") + " --config " + ws.p("chain.cfg");
  REQUIRE(run(common + " --out " + ws.p("f1")).exit_code == 0);
  REQUIRE(run(common + " --out " + ws.p("f2")).exit_code == 0);
  CHECK(slurp(ws.p("f1/traces.csv")) == slurp(ws.p("f2/traces.csv")));

  // scheduling independence through the CLI
  REQUIRE(run(common + " --out " + ws.p("f3") + " --threads 2").exit_code == 0);
  CHECK(slurp(ws.p("f1/traces.csv")) == slurp(ws.p("f3/traces.csv")));

  // resume from the manifest alone
  REQUIRE(run("fit --from-manifest " + ws.p("f1/manifest.json") + " --out " + ws.p("f4")).exit_code == 0);
  CHECK(slurp(ws.p("f1/traces.csv")) == slurp(ws.p("f4/traces.csv")));

  // a different seed changes the traces
  REQUIRE(run(common + " --out " + ws.p("f5") + " --seed 99").exit_code == 0);
  CHECK(slurp(ws.p("f1/traces.csv")) != slurp(ws.p("f5/traces.csv")));
}

TEST_CASE("error paths exit nonzero with a line-numbered message") {
  Workspace ws;
  write_file(ws.p("bad.csv"),
             "experiment,group,sample,protein,spectrum,log_intensity\n"
             "1,1,1,1,1,10.0\n"
             "1,0,1,1,1,oops\n");
  write_file(ws.p("cfg"), "g_ref = 1\nburnin = 10\nkeep = 20\nthin = 1\nchains = 1\n");
  const auto fit = run("fit --data " + ws.p("bad.csv") + " --config " + ws.p("cfg") +
                       " --out " + ws.p("out"));
  CHECK(fit.exit_code == 1);
  CHECK(fit.output.find("error:") != std::string::npos);
  CHECK(fit.output.find(":3") != std::string::npos);

  SUBCASE("missing g_ref is a configuration error") {
    write_file(ws.p("good.csv"),
               "experiment,group,sample,protein,spectrum,log_intensity\n"
               "1,1,1,1,1,10.0\n"
               "1,2,1,1,1,10.5\n");
    const auto r = run("fit --data " + ws.p("good.csv") + " --out " + ws.p("out2"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("g_ref") != std::string::npos);
  }
  SUBCASE("empty traces file errors") {
    write_file(ws.p("empty.csv"), "chain,iteration,parameter,value\n");
    const auto r = run("summarize --traces " + ws.p("empty.csv") + " --out " + ws.p("out3"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("no stored states") != std::string::npos);
  }
  SUBCASE("unknown ppc coordinate errors") {
    write_file(ws.p("sim.cfg"), kSmallSim);
    REQUIRE(run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("sim")).exit_code == 0);
    write_file(ws.p("chain.cfg"), std::string("g_ref = 1\n") + kSmallChain);
    REQUIRE(run("fit --data " + ws.p("sim/data.csv") + " --config " + ws.p("chain.cfg") +
                " --out " + ws.p("fit")).exit_code == 0);
    const auto r = run("ppc --traces " + ws.p("fit/traces.csv") + " --data " +
                       ws.p("sim/data.csv") + " --out " + ws.p("ppc") + " --coords 1:2:9:1:1");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("no observation at coordinate") != std::string::npos);
  }
}

TEST_CASE("log-transform ingests raw intensities") {
  Workspace ws;
  write_file(ws.p("raw.csv"),
             "experiment,group,sample,protein,spectrum,log_intensity\n"
             "1,1,1,1,1,22026.465794806718\n"  // e^10
             "1,2,1,1,1,22026.465794806718\n");
  write_file(ws.p("cfg"), "E = 1\nG = 2\nP = 1\nn_I = 2\nm = 1\nn.1 = 1,1\ng_ref = 1\n");
  const auto ok = run("validate --data " + ws.p("raw.csv") + " --config " + ws.p("cfg") +
                      " --log-transform");
  CHECK(ok.exit_code == 0);

  write_file(ws.p("neg.csv"),
             "experiment,group,sample,protein,spectrum,log_intensity\n"
             "1,1,1,1,1,-5.0\n");
  const auto bad = run("validate --data " + ws.p("neg.csv") + " --config " + ws.p("cfg") +
                       " --log-transform");
  CHECK(bad.exit_code == 1);
}

TEST_CASE("--require-complete drops incomplete spectra at ingest") {
  Workspace ws;
  write_file(ws.p("cfg"), "E = 1\nG = 2\nP = 1\nn_I = 2\nm = 2\nn.1 = 1,1\ng_ref = 1\n"
                          "burnin = 10\nkeep = 50\nthin = 1\nchains = 1\n");
  write_file(ws.p("data.csv"),
             "experiment,group,sample,protein,spectrum,log_intensity\n"
             "1,1,1,1,1,10.0\n"
             "1,2,1,1,1,10.5\n"
             "1,1,1,1,2,9.0\n");  // spectrum 2 misses its group-2 reporter
  const auto fit = run("fit --data " + ws.p("data.csv") + " --config " + ws.p("cfg") +
                       " --out " + ws.p("fit") + " --require-complete");
  REQUIRE(fit.exit_code == 0);
  // alpha[1:2] keeps its prior: no observation left after filtering
  const std::string traces = slurp(ws.p("fit/traces.csv"));
  CHECK(traces.find("alpha[1:2]") != std::string::npos);
}

TEST_CASE("--version prints the tool version") {
  const auto r = run("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("isodiff") != std::string::npos);
}

TEST_CASE("simulate without a config uses the built-in 4-group scenario") {
  Workspace ws;
  const auto r = run("simulate --seed 5 --out " + ws.p("sim"));
  REQUIRE(r.exit_code == 0);
  const std::string cfg = slurp(ws.p("sim/sim_config.cfg"));
  CHECK(cfg.find("E = 2") != std::string::npos);
  CHECK(cfg.find("G = 4") != std::string::npos);
  CHECK(cfg.find("P = 300") != std::string::npos);
  CHECK(cfg.find("n.1 = 2,2,2,0") != std::string::npos);
  CHECK(cfg.find("n.2 = 1,1,1,3") != std::string::npos);
  CHECK(cfg.find("de_prob = 0,0.1,0.2,0.3") != std::string::npos);
  const std::string truth = slurp(ws.p("sim/truth.csv"));
  CHECK(truth.find("sigma,,0.3") != std::string::npos);
}

TEST_CASE("unbalanced designs with empty cells survive the whole pipeline") {
  // the built-in scenario's tag pattern: group 4 absent from experiment 1
  Workspace ws;
  write_file(ws.p("sim.cfg"),
             "E = 2\nG = 4\nP = 12\nn_I = 6\nn.1 = 2,2,2,0\nn.2 = 1,1,1,3\ng_ref = 1,1\n"
             "mean_spectra = 3\nalpha_sd = 1.5\nde_prob = 0,0.2,0.2,0.3\nsigma = 0.3\nseed = 77\n");
  REQUIRE(run("simulate --config " + ws.p("sim.cfg") + " --out " + ws.p("sim")).exit_code == 0);

  // sim_config.cfg omits m (it was drawn), so fit infers the design from data
  write_file(ws.p("chain.cfg"), "g_ref = 1,1\nburnin = 300\nkeep = 600\nthin = 6\nchains = 2\nseed = 4\n");
  REQUIRE(run("fit --data " + ws.p("sim/data.csv") + " --config " + ws.p("chain.cfg") +
              " --out " + ws.p("fit")).exit_code == 0);
  REQUIRE(run("summarize --traces " + ws.p("fit/traces.csv") + " --out " + ws.p("sum")).exit_code == 0);

  const std::string de = slurp(ws.p("sum/de_results.csv"));
  CHECK(std::count(de.begin(), de.end(), '\n') == 1 + 3 * 12);  // header + (G-1)*P rows

  REQUIRE(run("ppc --traces " + ws.p("fit/traces.csv") + " --data " + ws.p("sim/data.csv") +
              " --out " + ws.p("ppc") + " --max-obs 15").exit_code == 0);
  REQUIRE(run("baseline --data " + ws.p("sim/data.csv") + " --config " + ws.p("sim/sim_config.cfg") +
              " --out " + ws.p("base") + " --group-b 3").exit_code == 0);
}
