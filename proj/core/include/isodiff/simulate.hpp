#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isodiff/config.hpp"
#include "isodiff/dataset.hpp"
#include "isodiff/model.hpp"

namespace isodiff {

// One forced differential-expression entry: beta_gj = 1 with a fixed
// log-ratio instead of drawing from de_prob/gamma_fold.
struct SpikeEntry {
  int protein = 0;  // 0-based
  int group = 1;    // 0-based, must be >= 1
  double log_ratio = 0.0;
  int min_spectra = 0;  // floor for the drawn m_j (spike-ins are usually abundant)
};

struct SimulationSpec {
  DesignInfo design;           // spectra_per_protein may be empty: drawn geometrically
  double mean_spectra = 6.0;   // mean of the geometric m_j distribution on {1,2,...}
  double alpha_mean = 10.0;
  double alpha_sd = 3.0;
  std::vector<double> de_prob; // per group, entry 0 ignored (control)
  double gamma_fold_min = 1.5; // |gamma| uniform on (log fold_min, log fold_max)
  double gamma_fold_max = 4.0;
  double kappa_sd = 0.1;
  double sigma = 0.3;
  double dropout = 0.0;        // missing-at-random row removal rate
  std::vector<SpikeEntry> spikes;
  std::uint64_t seed = 0;
};

void check(const SimulationSpec& spec);
SimulationSpec simulation_spec_from_config(const KeyValueConfig& config);
void simulation_spec_to_config(const SimulationSpec& spec, KeyValueConfig& config);

// Generating values behind a simulated dataset, plus the realised DE counts.
struct GroundTruth {
  DesignInfo design;
  ModelState state;                 // gamma is 0 wherever beta is 0
  std::vector<int> de_count;        // per group
};

// Draws a dataset from the model: m_j geometric (unless spectra_per_protein is given),
// alpha ~ N(alpha_mean, alpha_sd^2), beta ~ Bern(de_prob_g), |gamma| uniform
// on the two-sided log-fold interval with a fair sign coin, kappa ~
// N(0, kappa_sd^2) with reference entries pinned, y = kappa+alpha+beta*gamma+eps.
// Fully deterministic given spec.seed.
std::pair<Dataset, GroundTruth> simulate_dataset(const SimulationSpec& spec);

// The four-group two-experiment simulation scenario with tag patterns
// (CTL,CTL,TRT1,TRT1,TRT2,TRT2) and (CTL,TRT1,TRT2,TRT3,TRT3,TRT3), P=300.
SimulationSpec paper_scenario_spec();

// Spike-in benchmark: two technical-replicate groups over two experiments
// (n_eg = 3 everywhere), 278 null proteins plus four spiked ones at known
// log-ratios, each pinned to 8 spectra as befits high-abundance spike-ins.
SimulationSpec spike_in_scenario_spec();

void save_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace isodiff
