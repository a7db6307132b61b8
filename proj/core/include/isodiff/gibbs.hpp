#pragma once

#include <cstdint>
#include <vector>

#include "isodiff/config.hpp"
#include "isodiff/dataset.hpp"
#include "isodiff/model.hpp"
#include "isodiff/rng.hpp"

namespace isodiff {

struct ChainConfig {
  long burn_in = 100000;  // discarded sweeps
  long keep = 100000;     // post-burn-in sweeps, of which every thin-th is stored
  long thin = 100;
  int num_chains = 5;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::neutral;
  int threads = 1;  // concurrently running chains; does not affect results

  long stored_per_chain() const { return keep / thin; }
};

void check(const ChainConfig& config);
ChainConfig chain_config_from_config(const KeyValueConfig& config);
void chain_config_to_config(const ChainConfig& chain, KeyValueConfig& config);

struct ChainOutput {
  DesignInfo design;
  std::vector<ModelState> samples;       // chain-major
  std::vector<std::size_t> chain_start;  // length num_chains+1
  ChainConfig config;
  double wall_seconds = 0.0;

  int num_chains() const { return static_cast<int>(chain_start.size()) - 1; }
  int chain_of(std::size_t sample_index) const;
};

// The six full-conditional updates. Sums and counts range over observed
// entries only; entities with no observations fall back to prior draws.

// kappa_egi | . ~ N((a_k b_k + tau * sum(y - alpha - beta*gamma)) / B, 1/B),
// B = b_k + tau * n_k, for every non-reference sample.
void sample_kappa(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng);

// alpha_jk | . ~ N((a_a b_a + tau * sum(y - kappa - beta*gamma)) / D, 1/D),
// D = b_a + tau * n_a.
void sample_alpha(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng);

// Two-point conditional, g != 1:
//   P(beta=0|.) prop (1-p) exp{-tau/2 sum (y-kappa-alpha)^2}
//   P(beta=1|.) prop   p   exp{-tau/2 sum (y-kappa-alpha-gamma)^2}
// computed in log space.
void sample_beta(ModelState& state, const ObservationIndex& index,
                 const Hyperparameters& hyper, Rng& rng);

// p_gj | . ~ Beta(a_p + beta, b_p + 1 - beta), g != 1.
void sample_p(ModelState& state, const Hyperparameters& hyper, Rng& rng);

// gamma_gj | beta=0 ~ prior; gamma_gj | beta=1 ~ N(E, 1/F) with
// F = b_g + tau * n_gj and E = (a_g b_g + tau * sum(y - kappa - alpha)) / F.
void sample_gamma(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng);

// tau | . ~ Ga(a_s + n/2, b_s + ss/2), n the number of observed intensities.
void sample_tau(ModelState& state, const ObservationIndex& index,
                const Hyperparameters& hyper, Rng& rng);

// One fixed-scan sweep in the order kappa, alpha, beta, p, gamma, tau.
void sweep(ModelState& state, const ObservationIndex& index,
           const Hyperparameters& hyper, Rng& rng);

// Runs num_chains independent chains with per-chain derived RNG streams.
// Output is identical for identical (dataset, hyper, config) regardless of
// the threads setting.
ChainOutput run_chains(const Dataset& dataset, const Hyperparameters& hyper,
                       const ChainConfig& config);

}  // namespace isodiff
