#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "isodiff/config.hpp"
#include "isodiff/dataset.hpp"
#include "isodiff/rng.hpp"

namespace isodiff {

class Rng;

// Prior constants. b_kappa/b_alpha/b_gamma are precisions, (a_p, b_p) are
// Beta shapes, (a_sigma, b_sigma) are the Gamma shape and rate of the noise
// precision tau = sigma^-2. Defaults are the recommended weak choices.
struct Hyperparameters {
  double a_kappa = 0.0;
  double b_kappa = 1.0 / 9.0;
  double a_alpha = 10.0;
  double b_alpha = 1.0 / 9.0;
  double a_p = 1.0;
  double b_p = 19.0;
  double a_gamma = 0.0;
  double b_gamma = 1.0;
  double a_sigma = 1.0 / 1000.0;
  double b_sigma = 1.0 / 1000.0;
};

Hyperparameters default_hyperparameters();

// Throws std::invalid_argument on non-positive precisions/shapes/rates.
void check(const Hyperparameters& hyper);

// Keys a.kappa, b.kappa, a.alpha, b.alpha, a.p, b.p, a.gamma, b.gamma,
// a.sigma, b.sigma; absent keys keep their defaults.
Hyperparameters hyperparameters_from_config(const KeyValueConfig& config);
void hyperparameters_to_config(const Hyperparameters& hyper, KeyValueConfig& config);

// One full parameter assignment. kappa is indexed by DesignLayout sample id
// (reference entries pinned to 0), alpha by spectrum id, and the (g,j) blocks
// are group-major with the whole g=0 row pinned (beta=gamma=0, p unused).
struct ModelState {
  int num_groups = 0;
  int num_proteins = 0;
  std::vector<double> kappa;
  std::vector<double> alpha;
  std::vector<std::uint8_t> beta;
  std::vector<double> gamma;
  std::vector<double> p;
  double tau = 1.0;

  double sigma() const { return 1.0 / std::sqrt(tau); }

  std::size_t gp(int g, int j) const {
    return static_cast<std::size_t>(g) * num_proteins + j;
  }
  // beta * gamma, the log-fold effect actually entering the likelihood.
  double effect(int g, int j) const { return beta[gp(g, j)] ? gamma[gp(g, j)] : 0.0; }
};

ModelState make_state(const DesignLayout& layout);

// Throws std::invalid_argument if identifiability constraints or positivity
// are violated.
void check_constraints(const ModelState& state, const DesignLayout& layout);

// Log posterior density up to the marginal-likelihood constant: all prior
// log densities plus the Gaussian likelihood over observed entries only.
// Invariant to observation storage order.
double log_joint(const ModelState& state, const Dataset& dataset,
                 const Hyperparameters& hyper);
double log_joint(const ModelState& state, const ObservationIndex& index,
                 const Hyperparameters& hyper);

enum class InitStrategy { neutral, data_driven, random };

InitStrategy init_strategy_from_string(const std::string& name);
std::string to_string(InitStrategy strategy);

ModelState initialize_state(const ObservationIndex& index, const Hyperparameters& hyper,
                            InitStrategy strategy, Rng& rng);
ModelState initialize_state(const Dataset& dataset, const Hyperparameters& hyper,
                            InitStrategy strategy, Rng& rng);

}  // namespace isodiff
