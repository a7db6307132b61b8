#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "isodiff/dataset.hpp"
#include "isodiff/gibbs.hpp"

namespace isodiff {

struct DEProbability {
  int group = 0;    // 0-based treatment group (>= 1)
  int protein = 0;  // 0-based
  double prob = 0.0;
  bool classified = false;  // prob strictly greater than the threshold
};

struct EffectSummary {
  int group = 0;
  int protein = 0;
  // moments and central 95% interval of beta*gamma across stored states
  double mean = 0.0, sd = 0.0, q025 = 0.0, q975 = 0.0;
};

// Joined row matching the de_results table columns.
struct DEResultRow {
  int group = 0;
  int protein = 0;
  double prob_de = 0.0;
  double mean_effect = 0.0, sd_effect = 0.0, q025 = 0.0, q975 = 0.0;
  bool classified = false;
};

std::vector<DEProbability> de_probabilities(const ChainOutput& output,
                                            double threshold = 0.5);
std::vector<EffectSummary> effect_summaries(const ChainOutput& output);
std::vector<DEResultRow> de_result_table(const ChainOutput& output,
                                         double threshold = 0.5);

struct ParamDiagnostics {
  std::string parameter;
  double ess = 0.0;
  double rhat = 0.0;
  bool rhat_defined = false;  // false for (near-)constant chains
  std::vector<double> acf;    // lags 1..L
};

struct DiagnosticsReport {
  std::vector<ParamDiagnostics> params;
};

// Trace extraction by external parameter name: `sigma`, `tau`,
// `kappa[e:g:i]`, `alpha[j:k]`, `beta[g:j]`, `gamma[g:j]`, `p[g:j]`,
// `effect[g:j]` (1-based indices). A bare family name expands to every
// entry of that block.
std::vector<std::string> expand_parameter_selector(const ChainOutput& output,
                                                   const std::vector<std::string>& selector);
std::vector<std::vector<double>> extract_chains(const ChainOutput& output,
                                                const std::string& parameter);

// Resolves a fully indexed parameter name to a ModelState reader; throws on
// unknown families or out-of-design indices.
std::function<double(const ModelState&)> parameter_accessor(const DesignInfo& design,
                                                            const std::string& parameter);

// Sample autocorrelation (lags 1..max_lag averaged over chains), ESS with
// Geyer initial-positive-sequence truncation, and split-chain scale
// reduction. Throws std::invalid_argument below 50 stored samples per chain.
DiagnosticsReport diagnostics(const ChainOutput& output,
                              const std::vector<std::string>& selector,
                              int max_lag = 20);

// Building blocks, exposed for reuse on arbitrary scalar chains.
std::vector<double> autocorrelation(const std::vector<std::vector<double>>& chains, int max_lag);
double effective_sample_size(const std::vector<std::vector<double>>& chains);
std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains);

struct PredictiveSummary {
  int obs_index = 0;  // index into dataset.observations
  double observed = 0.0;
  double lo95 = 0.0, hi95 = 0.0;
  bool covered = false;
};

// One predictive draw per stored state, y* ~ N(kappa+alpha+beta*gamma, sigma),
// per selected observation; deterministic given the seed.
std::vector<PredictiveSummary> posterior_predictive(const ChainOutput& output,
                                                    const Dataset& dataset,
                                                    const std::vector<int>& obs_indices,
                                                    std::uint64_t seed);

// Mixture density (1/N) sum_l phi((y - fit_l)/sigma_l)/sigma_l evaluated on a
// grid, for plot-ready exports.
std::vector<double> predictive_density(const ChainOutput& output, const Dataset& dataset,
                                       int obs_index, const std::vector<double>& grid);

struct MAPoint {
  int protein = 0;
  int spectrum = 0;
  double a = 0.0;  // average log intensity
  double m = 0.0;  // difference (sample_b - sample_a)
};

// Per-spectrum (m, a) pairs for two samples given as (e,g,i); spectra not
// observed in both samples are skipped. Throws if none are shared.
std::vector<MAPoint> ma_plot_data(const Dataset& dataset, DesignLayout::SampleCoord sample_a,
                                  DesignLayout::SampleCoord sample_b);

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace isodiff
