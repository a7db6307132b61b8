#include "isodiff/gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace isodiff {

void check(const ChainConfig& c) {
  if (c.burn_in < 0) throw std::invalid_argument("burnin must be >= 0");
  if (c.keep < 1) throw std::invalid_argument("keep must be >= 1");
  if (c.thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (c.num_chains < 1) throw std::invalid_argument("chains must be >= 1");
  if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
}

ChainConfig chain_config_from_config(const KeyValueConfig& config) {
  ChainConfig c;
  c.burn_in = config.get_int("burnin", c.burn_in);
  c.keep = config.get_int("keep", c.keep);
  c.thin = config.get_int("thin", c.thin);
  c.num_chains = static_cast<int>(config.get_int("chains", c.num_chains));
  c.seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
  c.init = init_strategy_from_string(config.get_string("init", "neutral"));
  check(c);
  return c;
}

void chain_config_to_config(const ChainConfig& c, KeyValueConfig& config) {
  config.set("burnin", std::to_string(c.burn_in));
  config.set("keep", std::to_string(c.keep));
  config.set("thin", std::to_string(c.thin));
  config.set("chains", std::to_string(c.num_chains));
  config.set("seed", std::to_string(c.seed));
  config.set("init", to_string(c.init));
}

int ChainOutput::chain_of(std::size_t sample_index) const {
  for (int c = 0; c < num_chains(); ++c)
    if (sample_index < chain_start[c + 1]) return c;
  return num_chains() - 1;
}

void sample_kappa(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng) {
  const DesignLayout& layout = index.layout();
  const double tau = state.tau;
  for (int sid = 0; sid < layout.num_samples(); ++sid) {
    if (layout.is_reference(sid)) continue;
    const auto& obs = index.obs_of_sample(sid);
    double sum = 0.0;
    for (const int i : obs)
      sum += index.y()[i] - state.alpha[index.spectrum_of()[i]] -
             state.effect(index.group_of()[i], index.protein_of()[i]);
    const double prec = hyper.b_kappa + tau * static_cast<double>(obs.size());
    const double mean = (hyper.a_kappa * hyper.b_kappa + tau * sum) / prec;
    state.kappa[sid] = rng.normal(mean, 1.0 / std::sqrt(prec));
  }
}

void sample_alpha(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng) {
  const DesignLayout& layout = index.layout();
  const double tau = state.tau;
  for (int sp = 0; sp < layout.num_spectra(); ++sp) {
    const auto& obs = index.obs_of_spectrum(sp);
    double sum = 0.0;
    for (const int i : obs)
      sum += index.y()[i] - state.kappa[index.sample_of()[i]] -
             state.effect(index.group_of()[i], index.protein_of()[i]);
    const double prec = hyper.b_alpha + tau * static_cast<double>(obs.size());
    const double mean = (hyper.a_alpha * hyper.b_alpha + tau * sum) / prec;
    state.alpha[sp] = rng.normal(mean, 1.0 / std::sqrt(prec));
  }
}

void sample_beta(ModelState& state, const ObservationIndex& index,
                 [[maybe_unused]] const Hyperparameters& hyper, Rng& rng) {
  const double tau = state.tau;
  for (int g = 1; g < state.num_groups; ++g) {
    for (int j = 0; j < state.num_proteins; ++j) {
      const auto idx = state.gp(g, j);
      const double gamma = state.gamma[idx];
      double ss0 = 0.0, ss1 = 0.0;
      for (const int i : index.obs_of_group_protein(g, j)) {
        const double r = index.y()[i] - state.kappa[index.sample_of()[i]] -
                         state.alpha[index.spectrum_of()[i]];
        ss0 += r * r;
        ss1 += (r - gamma) * (r - gamma);
      }
      // log odds of beta=1; monotone logistic keeps this stable for any
      // magnitude of the exponents
      const double log_odds =
          std::log(state.p[idx]) - std::log1p(-state.p[idx]) + 0.5 * tau * (ss0 - ss1);
      const double prob1 = 1.0 / (1.0 + std::exp(-log_odds));
      state.beta[idx] = rng.bernoulli(prob1) ? 1 : 0;
    }
  }
}

void sample_p(ModelState& state, const Hyperparameters& hyper, Rng& rng) {
  for (int g = 1; g < state.num_groups; ++g)
    for (int j = 0; j < state.num_proteins; ++j) {
      const auto idx = state.gp(g, j);
      const double b = state.beta[idx] ? 1.0 : 0.0;
      state.p[idx] = rng.beta(hyper.a_p + b, hyper.b_p + 1.0 - b);
    }
}

void sample_gamma(ModelState& state, const ObservationIndex& index,
                  const Hyperparameters& hyper, Rng& rng) {
  const double tau = state.tau;
  const double prior_sd = 1.0 / std::sqrt(hyper.b_gamma);
  for (int g = 1; g < state.num_groups; ++g) {
    for (int j = 0; j < state.num_proteins; ++j) {
      const auto idx = state.gp(g, j);
      if (!state.beta[idx]) {
        state.gamma[idx] = rng.normal(hyper.a_gamma, prior_sd);
        continue;
      }
      const auto& obs = index.obs_of_group_protein(g, j);
      double sum = 0.0;
      for (const int i : obs)
        sum += index.y()[i] - state.kappa[index.sample_of()[i]] -
               state.alpha[index.spectrum_of()[i]];
      const double prec = hyper.b_gamma + tau * static_cast<double>(obs.size());
      const double mean = (hyper.a_gamma * hyper.b_gamma + tau * sum) / prec;
      state.gamma[idx] = rng.normal(mean, 1.0 / std::sqrt(prec));
    }
  }
}

void sample_tau(ModelState& state, const ObservationIndex& index,
                const Hyperparameters& hyper, Rng& rng) {
  const int n = index.num_observations();
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = index.y()[i] - state.kappa[index.sample_of()[i]] -
                     state.alpha[index.spectrum_of()[i]] -
                     state.effect(index.group_of()[i], index.protein_of()[i]);
    ss += r * r;
  }
  state.tau = rng.gamma(hyper.a_sigma + 0.5 * n, hyper.b_sigma + 0.5 * ss);
  if (!(state.tau > 0.0)) state.tau = 5e-324;  // keep tau > 0 under extreme priors
}

void sweep(ModelState& state, const ObservationIndex& index,
           const Hyperparameters& hyper, Rng& rng) {
  sample_kappa(state, index, hyper, rng);
  sample_alpha(state, index, hyper, rng);
  sample_beta(state, index, hyper, rng);
  sample_p(state, hyper, rng);
  sample_gamma(state, index, hyper, rng);
  sample_tau(state, index, hyper, rng);
}

namespace {

void run_one_chain(const ObservationIndex& index, const Hyperparameters& hyper,
                   const ChainConfig& config, int chain, ModelState* out) {
  Rng rng(config.seed, static_cast<std::uint64_t>(chain) + 1);
  ModelState state = initialize_state(index, hyper, config.init, rng);
  for (long t = 0; t < config.burn_in; ++t) sweep(state, index, hyper, rng);
  long stored = 0;
  for (long t = 0; t < config.keep; ++t) {
    sweep(state, index, hyper, rng);
    if ((t + 1) % config.thin == 0) out[stored++] = state;
  }
}

}  // namespace

ChainOutput run_chains(const Dataset& dataset, const Hyperparameters& hyper,
                       const ChainConfig& config) {
  check(hyper);
  check(config);
  const auto t0 = std::chrono::steady_clock::now();
  const ObservationIndex index(dataset);  // shared read-only across chains

  ChainOutput out;
  out.design = dataset.design;
  out.config = config;
  const long per_chain = config.stored_per_chain();
  out.samples.assign(static_cast<std::size_t>(per_chain) * config.num_chains,
                     make_state(index.layout()));
  out.chain_start.resize(config.num_chains + 1);
  for (int c = 0; c <= config.num_chains; ++c)
    out.chain_start[c] = static_cast<std::size_t>(c) * per_chain;

  if (config.threads <= 1 || config.num_chains == 1) {
    for (int c = 0; c < config.num_chains; ++c)
      run_one_chain(index, hyper, config, c, out.samples.data() + out.chain_start[c]);
  } else {
    // Each chain writes only its own slots, so scheduling cannot change results.
    std::vector<std::thread> pool;
    for (int c = 0; c < config.num_chains; c += config.threads) {
      const int batch_end = std::min(c + config.threads, config.num_chains);
      for (int b = c; b < batch_end; ++b)
        pool.emplace_back(run_one_chain, std::cref(index), std::cref(hyper),
                          std::cref(config), b, out.samples.data() + out.chain_start[b]);
      for (auto& th : pool) th.join();
      pool.clear();
    }
  }

  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace isodiff
