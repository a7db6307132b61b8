// isodiff command line tool: simulate / fit / summarize / ppc / baseline /
// validate, chained through files so that every result is reproducible from
// the manifest written next to it.

#include <array>
#include <chrono>
#include <climits>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isodiff/baselines.hpp"
#include "isodiff/config.hpp"
#include "isodiff/dataset_io.hpp"
#include "isodiff/format.hpp"
#include "isodiff/gibbs.hpp"
#include "isodiff/posterior.hpp"
#include "isodiff/simulate.hpp"
#include "isodiff/trace_io.hpp"
#include "isodiff/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isodiff;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const KeyValueConfig& resolved,
                    const std::map<std::string, std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  json m;
  m["tool"] = "isodiff";
  m["version"] = version;
  m["subcommand"] = subcommand;
  m["config"] = json::object();
  for (const auto& [k, v] : resolved.entries()) m["config"][k] = v;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["wall_seconds"] = wall_seconds;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw io_error("cannot write manifest in " + out_dir.string());
  out << m.dump(2) << '\n';
}

KeyValueConfig config_from_manifest(const std::string& path, std::string& data_path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest: " + path);
  json m = json::parse(in);
  KeyValueConfig cfg;
  for (const auto& [k, v] : m.at("config").items()) cfg.set(k, v.get<std::string>());
  if (m.contains("inputs") && m["inputs"].contains("data"))
    data_path = m["inputs"]["data"].get<std::string>();
  return cfg;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out.empty() ? "." : out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  return dir;
}

// Design from explicit config keys when complete, otherwise inferred from the
// data with an explicit g_ref.
DesignInfo resolve_design(const KeyValueConfig& cfg, const std::string& data_path,
                          bool log_transform) {
  if (config_has_design(cfg) && cfg.has("m")) return design_from_config(cfg);
  if (!cfg.has("g_ref"))
    throw config_error("g_ref is required: give a full design or at least the "
                       "reference groups so the rest can be inferred from the data");
  std::vector<int> g_ref;
  for (const long v : cfg.get_int_list("g_ref")) g_ref.push_back(static_cast<int>(v));
  const ObservationRows rows = read_observation_rows(data_path, log_transform);
  return infer_design(rows.observations, g_ref);
}

struct FitFlags {
  std::string data, config, out = "fit_out", manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> init;
  int threads = 1;
  bool log_transform = false, require_complete = false;
  std::vector<std::string> params;
};

int cmd_fit(const FitFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string data_path = flags.data;
  KeyValueConfig cfg;
  if (!flags.manifest.empty()) {
    cfg = config_from_manifest(flags.manifest, data_path);
    if (!flags.data.empty()) data_path = flags.data;
  } else if (!flags.config.empty()) {
    cfg = KeyValueConfig::parse_file(flags.config);
  }
  if (data_path.empty()) throw config_error("fit needs a data file (--data)");

  const bool log_transform =
      flags.log_transform || cfg.get_int("log_transform", 0) != 0;
  const bool require_complete =
      flags.require_complete || cfg.get_int("require_complete", 0) != 0;

  const DesignInfo design = resolve_design(cfg, data_path, log_transform);
  LoadOptions load_options;
  load_options.log_transform = log_transform;
  load_options.require_complete = require_complete;
  const Dataset dataset = load_dataset(data_path, design, load_options);

  const Hyperparameters hyper = hyperparameters_from_config(cfg);
  ChainConfig chain = chain_config_from_config(cfg);
  if (flags.seed) chain.seed = *flags.seed;
  if (flags.init) chain.init = init_strategy_from_string(*flags.init);
  chain.threads = flags.threads;

  const ChainOutput output = run_chains(dataset, hyper, chain);

  const fs::path out_dir = prepare_out_dir(flags.out);
  TraceWriteOptions trace_options;
  trace_options.params = flags.params;
  save_traces(output, (out_dir / "traces.csv").string(), trace_options);

  KeyValueConfig resolved;
  design_to_config(dataset.design, resolved);
  hyperparameters_to_config(hyper, resolved);
  chain_config_to_config(chain, resolved);
  resolved.set("log_transform", log_transform ? "1" : "0");
  resolved.set("require_complete", require_complete ? "1" : "0");
  write_manifest(out_dir, "fit", resolved, {{"data", data_path}},
                 {(out_dir / "traces.csv").string()}, seconds_since(t0));
  std::cerr << "fit: " << output.samples.size() << " stored states ("
            << chain.num_chains << " chains) in " << output.wall_seconds << "s\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SimulationSpec spec;
  if (!config_path.empty())
    spec = simulation_spec_from_config(KeyValueConfig::parse_file(config_path));
  else
    spec = paper_scenario_spec();
  if (seed) spec.seed = *seed;

  const auto [dataset, truth] = simulate_dataset(spec);
  const fs::path out_dir = prepare_out_dir(out);
  save_dataset(dataset, (out_dir / "data.csv").string());
  save_ground_truth(truth, (out_dir / "truth.csv").string());

  KeyValueConfig echo;
  simulation_spec_to_config(spec, echo);
  {
    std::ofstream cfg_out(out_dir / "sim_config.cfg");
    if (!cfg_out) throw io_error("cannot write sim_config.cfg");
    cfg_out << echo.to_string();
  }
  write_manifest(out_dir, "simulate", echo,
                 config_path.empty() ? std::map<std::string, std::string>{}
                                     : std::map<std::string, std::string>{{"config", config_path}},
                 {(out_dir / "data.csv").string(), (out_dir / "truth.csv").string(),
                  (out_dir / "sim_config.cfg").string()},
                 seconds_since(t0));
  std::cerr << "simulate: " << dataset.observations.size() << " observations, "
            << dataset.design.num_proteins << " proteins\n";
  return 0;
}

void write_de_results(const std::vector<DEResultRow>& table, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << "group,protein,prob_de,mean_effect,sd_effect,q2.5,q97.5,classified\n";
  for (const DEResultRow& row : table)
    out << row.group + 1 << ',' << row.protein + 1 << ',' << format_double(row.prob_de)
        << ',' << format_double(row.mean_effect) << ',' << format_double(row.sd_effect)
        << ',' << format_double(row.q025) << ',' << format_double(row.q975) << ','
        << (row.classified ? 1 : 0) << '\n';
}

int cmd_summarize(const std::string& traces_path, const std::string& out,
                  double threshold, std::vector<std::string> params, int max_lag) {
  const auto t0 = std::chrono::steady_clock::now();
  const ChainOutput output = read_traces(traces_path);
  const fs::path out_dir = prepare_out_dir(out);

  write_de_results(de_result_table(output, threshold), out_dir / "de_results.csv");

  const fs::path diag_path = out_dir / "diagnostics.csv";
  {
    std::ofstream diag(diag_path);
    if (!diag) throw io_error("cannot write " + diag_path.string());
    diag << "parameter,ess,rhat";
    for (int lag = 1; lag <= max_lag; ++lag) diag << ",acf" << lag;
    diag << '\n';
    long min_stored = LONG_MAX;
    for (int c = 0; c < output.num_chains(); ++c)
      min_stored = std::min<long>(
          min_stored, static_cast<long>(output.chain_start[c + 1] - output.chain_start[c]));
    if (min_stored >= 50) {
      if (params.empty()) params = {"sigma", "kappa"};
      const DiagnosticsReport report = diagnostics(output, params, max_lag);
      for (const ParamDiagnostics& d : report.params) {
        diag << d.parameter << ',' << format_double(d.ess) << ','
             << (d.rhat_defined ? format_double(d.rhat) : std::string("na"));
        for (const double a : d.acf) diag << ',' << format_double(a);
        diag << '\n';
      }
    } else {
      std::cerr << "summarize: < 50 stored samples per chain, diagnostics skipped\n";
    }
  }

  KeyValueConfig resolved;
  design_to_config(output.design, resolved);
  chain_config_to_config(output.config, resolved);
  resolved.set("threshold", format_double(threshold));
  write_manifest(out_dir, "summarize", resolved, {{"traces", traces_path}},
                 {(out_dir / "de_results.csv").string(), diag_path.string()},
                 seconds_since(t0));
  return 0;
}

struct PpcFlags {
  std::string traces, data, out = "ppc_out";
  std::uint64_t seed = 0;
  long max_obs = 0;  // 0: all observations
  std::vector<std::string> coords;
  int grid = 0;
  bool log_transform = false, require_complete = false;
  std::string ma_pair;
};

std::array<int, 5> parse_coord(const std::string& text) {
  std::array<int, 5> c{};
  std::string tmp = text;
  for (char& ch : tmp)
    if (ch == ':') ch = ' ';
  std::istringstream in(tmp);
  if (!(in >> c[0] >> c[1] >> c[2] >> c[3] >> c[4]) || !(in >> std::ws).eof())
    throw config_error("bad coordinate `" + text + "`, expected e:g:i:j:k");
  return c;
}

int cmd_ppc(const PpcFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  const ChainOutput output = read_traces(flags.traces);
  LoadOptions load_options;
  load_options.log_transform = flags.log_transform;
  load_options.require_complete = flags.require_complete;
  const Dataset dataset = load_dataset(flags.data, output.design, load_options);
  const fs::path out_dir = prepare_out_dir(flags.out);

  std::vector<int> indices;
  if (!flags.coords.empty()) {
    std::map<std::array<int, 5>, int> by_coord;
    for (int i = 0; i < static_cast<int>(dataset.observations.size()); ++i) {
      const Observation& o = dataset.observations[i];
      by_coord[{o.experiment + 1, o.group + 1, o.sample + 1, o.protein + 1, o.spectrum + 1}] = i;
    }
    for (const std::string& text : flags.coords) {
      const auto c = parse_coord(text);
      const auto it = by_coord.find(c);
      if (it == by_coord.end())
        throw config_error("no observation at coordinate `" + text + "`");
      indices.push_back(it->second);
    }
  } else {
    const long n = static_cast<long>(dataset.observations.size());
    const long take = flags.max_obs > 0 ? std::min(flags.max_obs, n) : n;
    for (long i = 0; i < take; ++i)
      indices.push_back(static_cast<int>(i * n / take));  // evenly spaced
  }

  const auto summaries = posterior_predictive(output, dataset, indices, flags.seed);
  const fs::path pred_path = out_dir / "predictive.csv";
  {
    std::ofstream out(pred_path);
    if (!out) throw io_error("cannot write " + pred_path.string());
    out << "experiment,group,sample,protein,spectrum,observed,lo95,hi95,covered\n";
    for (const PredictiveSummary& s : summaries) {
      const Observation& o = dataset.observations[s.obs_index];
      out << o.experiment + 1 << ',' << o.group + 1 << ',' << o.sample + 1 << ','
          << o.protein + 1 << ',' << o.spectrum + 1 << ',' << format_double(s.observed)
          << ',' << format_double(s.lo95) << ',' << format_double(s.hi95) << ','
          << (s.covered ? 1 : 0) << '\n';
    }
  }
  std::vector<std::string> outputs{pred_path.string()};

  if (flags.grid == 1) throw config_error("--grid needs at least 2 points");
  if (flags.grid > 0 && !flags.coords.empty()) {
    const fs::path dens_path = out_dir / "predictive_density.csv";
    std::ofstream out(dens_path);
    if (!out) throw io_error("cannot write " + dens_path.string());
    out << "experiment,group,sample,protein,spectrum,y,density\n";
    for (std::size_t which = 0; which < indices.size(); ++which) {
      const int idx = indices[which];
      const Observation& o = dataset.observations[idx];
      const PredictiveSummary& s = summaries[which];
      const double span = std::max(s.hi95 - s.lo95, 1e-6);
      std::vector<double> grid(flags.grid);
      for (int i = 0; i < flags.grid; ++i)
        grid[i] = s.lo95 - span + (s.hi95 - s.lo95 + 2 * span) * i / (flags.grid - 1.0);
      const auto density = predictive_density(output, dataset, idx, grid);
      for (int i = 0; i < flags.grid; ++i)
        out << o.experiment + 1 << ',' << o.group + 1 << ',' << o.sample + 1 << ','
            << o.protein + 1 << ',' << o.spectrum + 1 << ',' << format_double(grid[i])
            << ',' << format_double(density[i]) << '\n';
    }
    outputs.push_back(dens_path.string());
  }

  if (!flags.ma_pair.empty()) {
    const auto space = flags.ma_pair.find(' ');
    const auto comma = flags.ma_pair.find(',');
    const auto sep = space != std::string::npos ? space : comma;
    if (sep == std::string::npos)
      throw config_error("--ma-pair expects two samples `e:g:i e:g:i`");
    auto parse_sample = [](std::string text) {
      for (char& ch : text)
        if (ch == ':') ch = ' ';
      std::istringstream in(text);
      DesignLayout::SampleCoord c{};
      if (!(in >> c.experiment >> c.group >> c.index))
        throw config_error("bad sample coordinate, expected e:g:i");
      --c.experiment;
      --c.group;
      --c.index;
      return c;
    };
    const auto points = ma_plot_data(dataset, parse_sample(flags.ma_pair.substr(0, sep)),
                                     parse_sample(flags.ma_pair.substr(sep + 1)));
    const fs::path ma_path = out_dir / "ma_plot.csv";
    std::ofstream out(ma_path);
    if (!out) throw io_error("cannot write " + ma_path.string());
    out << "protein,spectrum,a,m\n";
    for (const MAPoint& p : points)
      out << p.protein + 1 << ',' << p.spectrum + 1 << ',' << format_double(p.a) << ','
          << format_double(p.m) << '\n';
    outputs.push_back(ma_path.string());
  }

  KeyValueConfig resolved;
  design_to_config(output.design, resolved);
  resolved.set("seed", std::to_string(flags.seed));
  write_manifest(out_dir, "ppc", resolved,
                 {{"traces", flags.traces}, {"data", flags.data}}, outputs,
                 seconds_since(t0));
  return 0;
}

struct BaselineFlags {
  std::string data, config, out = "baseline_out";
  int group_a = 1, group_b = 2;  // 1-based
  double alpha = 0.05;
  bool no_normalize = false;
  bool log_transform = false, require_complete = false;
};

int cmd_baseline(const BaselineFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  KeyValueConfig cfg;
  if (!flags.config.empty()) cfg = KeyValueConfig::parse_file(flags.config);
  const DesignInfo design = resolve_design(cfg, flags.data, flags.log_transform);
  LoadOptions load_options;
  load_options.log_transform = flags.log_transform;
  load_options.require_complete = flags.require_complete;
  Dataset dataset = load_dataset(flags.data, design, load_options);
  if (!flags.no_normalize) dataset = mean_normalize(dataset);

  const auto rows = protein_ttest(dataset, flags.group_a - 1, flags.group_b - 1, flags.alpha);
  const fs::path out_dir = prepare_out_dir(flags.out);
  const fs::path path = out_dir / "baseline.csv";
  {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "protein,t,df,p,q,significant\n";
    for (const TTestRow& row : rows)
      out << row.protein + 1 << ',' << format_double(row.t) << ',' << format_double(row.df)
          << ',' << format_double(row.p) << ',' << format_double(row.q) << ','
          << (row.significant ? 1 : 0) << '\n';
  }

  KeyValueConfig resolved;
  design_to_config(design, resolved);
  resolved.set("group_a", std::to_string(flags.group_a));
  resolved.set("group_b", std::to_string(flags.group_b));
  resolved.set("alpha", format_double(flags.alpha));
  resolved.set("normalize", flags.no_normalize ? "0" : "1");
  write_manifest(out_dir, "baseline", resolved, {{"data", flags.data}}, {path.string()},
                 seconds_since(t0));
  return 0;
}

int cmd_validate(const std::string& data_path, const std::string& config_path,
                 bool log_transform, bool require_complete) {
  KeyValueConfig cfg;
  if (!config_path.empty()) cfg = KeyValueConfig::parse_file(config_path);
  const DesignInfo design = resolve_design(cfg, data_path, log_transform);
  const ObservationRows rows = read_observation_rows(data_path, log_transform);
  Dataset dataset{design, rows.observations};
  if (require_complete) {
    const ValidationReport pre = validate(dataset);
    if (pre.ok()) dataset = drop_incomplete_spectra(dataset);
  }
  const ValidationReport report = validate(dataset);
  if (report.ok()) {
    std::cout << "ok: " << dataset.observations.size() << " observations\n";
    return 0;
  }
  for (const Violation& v : report.violations) {
    if (v.observation >= 0 && !require_complete)
      std::cout << data_path << ":" << rows.line_numbers[v.observation] << ": " << v.message
                << '\n';
    else
      std::cout << v.message << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian differential protein expression for isobaric-labelled "
               "MS/MS experiments"};
  app.set_version_flag("--version", std::string("isodiff ") + version);
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out = "sim_out";
  std::optional<std::uint64_t> sim_seed;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset from the model");
  sim->add_option("--config", sim_config, "Simulation config (defaults to the built-in 4-group scenario)");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--seed", sim_seed, "Override the RNG seed");

  // fit
  FitFlags fit;
  auto* fitc = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
  fitc->add_option("--data", fit.data, "Observation table (csv)");
  fitc->add_option("--config", fit.config, "Design/prior/chain config");
  fitc->add_option("--out", fit.out, "Output directory");
  fitc->add_option("--from-manifest", fit.manifest, "Re-run from a fit manifest.json");
  fitc->add_option("--seed", fit.seed, "Override the RNG seed");
  fitc->add_option("--init", fit.init, "Init strategy: neutral, data-driven, random");
  fitc->add_option("--threads", fit.threads, "Chains run concurrently (results unchanged)");
  fitc->add_flag("--log-transform", fit.log_transform, "Log-transform raw intensities on ingest");
  fitc->add_flag("--require-complete", fit.require_complete,
                 "Drop spectra with missing reporters (per experiment)");
  fitc->add_option("--params", fit.params, "Trace only these parameter families/names");

  // summarize
  std::string sum_traces, sum_out = "summary_out";
  double threshold = 0.5;
  std::vector<std::string> sum_params;
  int max_lag = 20;
  auto* sum = app.add_subcommand("summarize", "DE table and convergence diagnostics from traces");
  sum->add_option("--traces", sum_traces, "traces.csv from fit")->required();
  sum->add_option("--out", sum_out, "Output directory");
  sum->add_option("--threshold", threshold, "Classification threshold on P(DE)");
  sum->add_option("--params", sum_params, "Diagnostics parameter selector (default sigma,kappa)");
  sum->add_option("--max-lag", max_lag, "Autocorrelation lags reported");

  // ppc
  PpcFlags ppc;
  auto* ppcc = app.add_subcommand("ppc", "Posterior-predictive checks");
  ppcc->add_option("--traces", ppc.traces, "traces.csv from fit")->required();
  ppcc->add_option("--data", ppc.data, "Observation table used for the fit")->required();
  ppcc->add_option("--out", ppc.out, "Output directory");
  ppcc->add_option("--seed", ppc.seed, "Predictive draw seed");
  ppcc->add_option("--max-obs", ppc.max_obs, "Check only this many (evenly spaced) observations");
  ppcc->add_option("--coords", ppc.coords, "Check specific observations e:g:i:j:k");
  ppcc->add_option("--grid", ppc.grid, "Also export predictive density curves on this many grid points");
  ppcc->add_option("--ma-pair", ppc.ma_pair, "Write MA-plot data for two samples `e:g:i e:g:i`");
  ppcc->add_flag("--log-transform", ppc.log_transform, "Log-transform raw intensities on ingest");
  ppcc->add_flag("--require-complete", ppc.require_complete, "Drop incomplete spectra");

  // baseline
  BaselineFlags base;
  auto* basec = app.add_subcommand("baseline", "Mean-normalisation + Welch t-test + BH");
  basec->add_option("--data", base.data, "Observation table (csv)")->required();
  basec->add_option("--config", base.config, "Design config (else inferred, g_ref required)");
  basec->add_option("--out", base.out, "Output directory");
  basec->add_option("--group-a", base.group_a, "First group (1-based, default control)");
  basec->add_option("--group-b", base.group_b, "Second group (1-based)");
  basec->add_option("--alpha", base.alpha, "BH significance level on q");
  basec->add_flag("--no-normalize", base.no_normalize, "Skip per-sample mean normalisation");
  basec->add_flag("--log-transform", base.log_transform, "Log-transform raw intensities on ingest");
  basec->add_flag("--require-complete", base.require_complete, "Drop incomplete spectra");

  // validate
  std::string val_data, val_config;
  bool val_log_transform = false, val_require_complete = false;
  auto* val = app.add_subcommand("validate", "Check a dataset against its design");
  val->add_option("--data", val_data, "Observation table (csv)")->required();
  val->add_option("--config", val_config, "Design config (else inferred, g_ref required)");
  val->add_flag("--log-transform", val_log_transform, "Log-transform raw intensities on ingest");
  val->add_flag("--require-complete", val_require_complete, "Drop incomplete spectra first");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed);
    if (fitc->parsed()) return cmd_fit(fit);
    if (sum->parsed()) return cmd_summarize(sum_traces, sum_out, threshold, sum_params, max_lag);
    if (ppcc->parsed()) return cmd_ppc(ppc);
    if (basec->parsed()) return cmd_baseline(base);
    if (val->parsed())
      return cmd_validate(val_data, val_config, val_log_transform, val_require_complete);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
