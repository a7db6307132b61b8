#include "isodiff/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "isodiff/format.hpp"
#include "isodiff/rng.hpp"

namespace isodiff {

Hyperparameters default_hyperparameters() { return {}; }

void check(const Hyperparameters& h) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("hyperparameter ") + name + " must be > 0");
  };
  positive(h.b_kappa, "b.kappa");
  positive(h.b_alpha, "b.alpha");
  positive(h.a_p, "a.p");
  positive(h.b_p, "b.p");
  positive(h.b_gamma, "b.gamma");
  positive(h.a_sigma, "a.sigma");
  positive(h.b_sigma, "b.sigma");
}

Hyperparameters hyperparameters_from_config(const KeyValueConfig& config) {
  Hyperparameters h;
  h.a_kappa = config.get_real("a.kappa", h.a_kappa);
  h.b_kappa = config.get_real("b.kappa", h.b_kappa);
  h.a_alpha = config.get_real("a.alpha", h.a_alpha);
  h.b_alpha = config.get_real("b.alpha", h.b_alpha);
  h.a_p = config.get_real("a.p", h.a_p);
  h.b_p = config.get_real("b.p", h.b_p);
  h.a_gamma = config.get_real("a.gamma", h.a_gamma);
  h.b_gamma = config.get_real("b.gamma", h.b_gamma);
  h.a_sigma = config.get_real("a.sigma", h.a_sigma);
  h.b_sigma = config.get_real("b.sigma", h.b_sigma);
  check(h);
  return h;
}

void hyperparameters_to_config(const Hyperparameters& h, KeyValueConfig& config) {
  config.set("a.kappa", format_double(h.a_kappa));
  config.set("b.kappa", format_double(h.b_kappa));
  config.set("a.alpha", format_double(h.a_alpha));
  config.set("b.alpha", format_double(h.b_alpha));
  config.set("a.p", format_double(h.a_p));
  config.set("b.p", format_double(h.b_p));
  config.set("a.gamma", format_double(h.a_gamma));
  config.set("b.gamma", format_double(h.b_gamma));
  config.set("a.sigma", format_double(h.a_sigma));
  config.set("b.sigma", format_double(h.b_sigma));
}

ModelState make_state(const DesignLayout& layout) {
  ModelState s;
  s.num_groups = layout.design().num_groups;
  s.num_proteins = layout.design().num_proteins;
  s.kappa.assign(layout.num_samples(), 0.0);
  s.alpha.assign(layout.num_spectra(), 0.0);
  s.beta.assign(static_cast<std::size_t>(s.num_groups) * s.num_proteins, 0);
  s.gamma.assign(s.beta.size(), 0.0);
  s.p.assign(s.beta.size(), 0.0);
  s.tau = 1.0;
  return s;
}

void check_constraints(const ModelState& s, const DesignLayout& layout) {
  if (!(s.tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  for (int e = 0; e < layout.design().num_experiments; ++e)
    if (s.kappa[layout.reference_sample(e)] != 0.0)
      throw std::invalid_argument("reference kappa not pinned to 0 in experiment " +
                                  std::to_string(e + 1));
  for (int j = 0; j < s.num_proteins; ++j) {
    if (s.beta[s.gp(0, j)] != 0 || s.gamma[s.gp(0, j)] != 0.0)
      throw std::invalid_argument("beta/gamma not pinned to 0 in group 1 for protein " +
                                  std::to_string(j + 1));
  }
  for (int g = 1; g < s.num_groups; ++g)
    for (int j = 0; j < s.num_proteins; ++j) {
      const double p = s.p[s.gp(g, j)];
      if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("p must lie in (0,1)");
      if (s.beta[s.gp(g, j)] > 1) throw std::invalid_argument("beta must be 0 or 1");
    }
}

namespace {

constexpr double half_log_2pi = 0.9189385332046727;  // log(2*pi)/2

double log_normal_density(double x, double mean, double precision) {
  const double r = x - mean;
  return 0.5 * std::log(precision) - half_log_2pi - 0.5 * precision * r * r;
}

double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

double log_beta_density(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
         (a - 1.0) * std::log(x) + (b - 1.0) * std::log(1.0 - x);
}

}  // namespace

double log_joint(const ModelState& state, const ObservationIndex& index,
                 const Hyperparameters& hyper) {
  const DesignLayout& layout = index.layout();
  check(hyper);
  check_constraints(state, layout);

  double lp = 0.0;
  for (int s = 0; s < layout.num_samples(); ++s)
    if (!layout.is_reference(s))
      lp += log_normal_density(state.kappa[s], hyper.a_kappa, hyper.b_kappa);
  for (const double a : state.alpha)
    lp += log_normal_density(a, hyper.a_alpha, hyper.b_alpha);
  for (int g = 1; g < state.num_groups; ++g)
    for (int j = 0; j < state.num_proteins; ++j) {
      const auto idx = state.gp(g, j);
      lp += log_beta_density(state.p[idx], hyper.a_p, hyper.b_p);
      lp += state.beta[idx] ? std::log(state.p[idx]) : std::log1p(-state.p[idx]);
      lp += log_normal_density(state.gamma[idx], hyper.a_gamma, hyper.b_gamma);
    }
  lp += log_gamma_density(state.tau, hyper.a_sigma, hyper.b_sigma);

  const int n = index.num_observations();
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fit = state.kappa[index.sample_of()[i]] +
                       state.alpha[index.spectrum_of()[i]] +
                       state.effect(index.group_of()[i], index.protein_of()[i]);
    const double r = index.y()[i] - fit;
    ss += r * r;
  }
  lp += 0.5 * n * std::log(state.tau) - n * half_log_2pi - 0.5 * state.tau * ss;
  return lp;
}

double log_joint(const ModelState& state, const Dataset& dataset,
                 const Hyperparameters& hyper) {
  return log_joint(state, ObservationIndex(dataset), hyper);
}

InitStrategy init_strategy_from_string(const std::string& name) {
  if (name == "neutral") return InitStrategy::neutral;
  if (name == "data-driven" || name == "data_driven") return InitStrategy::data_driven;
  if (name == "random") return InitStrategy::random;
  throw config_error("unknown init strategy `" + name +
                     "` (expected neutral, data-driven or random)");
}

std::string to_string(InitStrategy strategy) {
  switch (strategy) {
    case InitStrategy::neutral: return "neutral";
    case InitStrategy::data_driven: return "data-driven";
    case InitStrategy::random: return "random";
  }
  return "neutral";
}

ModelState initialize_state(const ObservationIndex& index, const Hyperparameters& hyper,
                            InitStrategy strategy, Rng& rng) {
  const DesignLayout& layout = index.layout();
  ModelState s = make_state(layout);
  const double prior_p = hyper.a_p / (hyper.a_p + hyper.b_p);
  for (int g = 1; g < s.num_groups; ++g)
    for (int j = 0; j < s.num_proteins; ++j) s.p[s.gp(g, j)] = prior_p;

  if (strategy == InitStrategy::random) {
    for (int sid = 0; sid < layout.num_samples(); ++sid)
      if (!layout.is_reference(sid))
        s.kappa[sid] = rng.normal(hyper.a_kappa, 1.0 / std::sqrt(hyper.b_kappa));
    for (double& a : s.alpha) a = rng.normal(hyper.a_alpha, 1.0 / std::sqrt(hyper.b_alpha));
    for (int g = 1; g < s.num_groups; ++g)
      for (int j = 0; j < s.num_proteins; ++j) {
        const auto idx = s.gp(g, j);
        s.p[idx] = rng.beta(hyper.a_p, hyper.b_p);
        s.beta[idx] = rng.bernoulli(s.p[idx]) ? 1 : 0;
        s.gamma[idx] = rng.normal(hyper.a_gamma, 1.0 / std::sqrt(hyper.b_gamma));
      }
    s.tau = rng.gamma(hyper.a_sigma, hyper.b_sigma);
    if (!(s.tau > 0.0)) s.tau = 1.0;  // guard subnormal underflow from extreme priors
    return s;
  }

  if (strategy == InitStrategy::data_driven) {
    // per-sample mean offsets relative to the experiment's reference sample
    std::vector<double> sample_mean(layout.num_samples(), 0.0);
    for (int sid = 0; sid < layout.num_samples(); ++sid) {
      const auto& obs = index.obs_of_sample(sid);
      double sum = 0.0;
      for (const int i : obs) sum += index.y()[i];
      sample_mean[sid] = obs.empty() ? 0.0 : sum / static_cast<double>(obs.size());
    }
    for (int sid = 0; sid < layout.num_samples(); ++sid) {
      if (layout.is_reference(sid)) continue;
      const int e = layout.sample_coord(sid).experiment;
      s.kappa[sid] = sample_mean[sid] - sample_mean[layout.reference_sample(e)];
    }
  }

  for (int sp = 0; sp < layout.num_spectra(); ++sp) {
    const auto& obs = index.obs_of_spectrum(sp);
    if (obs.empty()) {
      s.alpha[sp] = hyper.a_alpha;
      continue;
    }
    double sum = 0.0;
    for (const int i : obs) sum += index.y()[i] - s.kappa[index.sample_of()[i]];
    s.alpha[sp] = sum / static_cast<double>(obs.size());
  }

  const int n = index.num_observations();
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = index.y()[i] - s.kappa[index.sample_of()[i]] -
                     s.alpha[index.spectrum_of()[i]];
    ss += r * r;
  }
  const double var = n > 0 ? ss / static_cast<double>(n) : 1.0;
  s.tau = 1.0 / std::max(var, 1e-6);
  return s;
}

ModelState initialize_state(const Dataset& dataset, const Hyperparameters& hyper,
                            InitStrategy strategy, Rng& rng) {
  return initialize_state(ObservationIndex(dataset), hyper, strategy, rng);
}

}  // namespace isodiff
