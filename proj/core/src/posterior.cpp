#include "isodiff/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "isodiff/rng.hpp"

namespace isodiff {

namespace {

void require_samples(const ChainOutput& output) {
  if (output.samples.empty()) throw std::invalid_argument("chain output is empty");
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<DEProbability> de_probabilities(const ChainOutput& output, double threshold) {
  require_samples(output);
  const ModelState& first = output.samples.front();
  std::vector<DEProbability> table;
  table.reserve(static_cast<std::size_t>(first.num_groups - 1) * first.num_proteins);
  for (int g = 1; g < first.num_groups; ++g)
    for (int j = 0; j < first.num_proteins; ++j) {
      long count = 0;
      for (const ModelState& s : output.samples) count += s.beta[s.gp(g, j)];
      DEProbability row;
      row.group = g;
      row.protein = j;
      row.prob = static_cast<double>(count) / static_cast<double>(output.samples.size());
      row.classified = row.prob > threshold;
      table.push_back(row);
    }
  return table;
}

std::vector<EffectSummary> effect_summaries(const ChainOutput& output) {
  require_samples(output);
  const ModelState& first = output.samples.front();
  const std::size_t n = output.samples.size();
  std::vector<EffectSummary> table;
  std::vector<double> effects(n);
  for (int g = 1; g < first.num_groups; ++g)
    for (int j = 0; j < first.num_proteins; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        effects[i] = output.samples[i].effect(g, j);
        sum += effects[i];
      }
      EffectSummary row;
      row.group = g;
      row.protein = j;
      row.mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (const double e : effects) ss += (e - row.mean) * (e - row.mean);
      row.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      row.q025 = quantile(effects, 0.025);
      row.q975 = quantile(effects, 0.975);
      table.push_back(row);
    }
  return table;
}

std::vector<DEResultRow> de_result_table(const ChainOutput& output, double threshold) {
  const auto probs = de_probabilities(output, threshold);
  const auto effects = effect_summaries(output);
  std::vector<DEResultRow> table(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    table[i].group = probs[i].group;
    table[i].protein = probs[i].protein;
    table[i].prob_de = probs[i].prob;
    table[i].classified = probs[i].classified;
    table[i].mean_effect = effects[i].mean;
    table[i].sd_effect = effects[i].sd;
    table[i].q025 = effects[i].q025;
    table[i].q975 = effects[i].q975;
  }
  return table;
}

namespace {

struct ParsedName {
  std::string family;
  std::vector<int> indices;  // 0-based
};

ParsedName parse_parameter_name(const std::string& name) {
  ParsedName out;
  const auto bracket = name.find('[');
  if (bracket == std::string::npos) {
    out.family = name;
    return out;
  }
  if (name.back() != ']')
    throw std::invalid_argument("bad parameter name `" + name + "`");
  out.family = name.substr(0, bracket);
  std::string inside = name.substr(bracket + 1, name.size() - bracket - 2);
  std::replace(inside.begin(), inside.end(), ':', ' ');
  std::istringstream in(inside);
  int v = 0;
  while (in >> v) out.indices.push_back(v - 1);
  if (!in.eof()) throw std::invalid_argument("bad indices in parameter name `" + name + "`");
  return out;
}

int expected_indices(const std::string& family) {
  if (family == "sigma" || family == "tau") return 0;
  if (family == "kappa") return 3;
  if (family == "alpha") return 2;
  return 2;  // beta, gamma, p, effect
}

}  // namespace

std::vector<std::string> expand_parameter_selector(const ChainOutput& output,
                                                   const std::vector<std::string>& selector) {
  require_samples(output);
  const DesignLayout layout(output.design);
  const DesignInfo& d = output.design;
  std::vector<std::string> names;
  for (const std::string& raw : selector) {
    const ParsedName parsed = parse_parameter_name(raw);
    if (!parsed.indices.empty()) {
      names.push_back(raw);
      continue;
    }
    const std::string& f = parsed.family;
    if (f == "sigma" || f == "tau") {
      names.push_back(f);
    } else if (f == "kappa") {
      for (int sid = 0; sid < layout.num_samples(); ++sid) {
        if (layout.is_reference(sid)) continue;
        const auto c = layout.sample_coord(sid);
        names.push_back("kappa[" + std::to_string(c.experiment + 1) + ':' +
                        std::to_string(c.group + 1) + ':' + std::to_string(c.index + 1) + ']');
      }
    } else if (f == "alpha") {
      for (int j = 0; j < d.num_proteins; ++j)
        for (int k = 0; k < d.spectra_per_protein[j]; ++k)
          names.push_back("alpha[" + std::to_string(j + 1) + ':' + std::to_string(k + 1) + ']');
    } else if (f == "beta" || f == "gamma" || f == "p" || f == "effect") {
      for (int g = 1; g < d.num_groups; ++g)
        for (int j = 0; j < d.num_proteins; ++j)
          names.push_back(f + '[' + std::to_string(g + 1) + ':' + std::to_string(j + 1) + ']');
    } else {
      throw std::invalid_argument("unknown parameter family `" + f + "`");
    }
  }
  return names;
}

std::function<double(const ModelState&)> parameter_accessor(const DesignInfo& design,
                                                            const std::string& parameter) {
  const ParsedName parsed = parse_parameter_name(parameter);
  const int want = expected_indices(parsed.family);
  if (static_cast<int>(parsed.indices.size()) != want)
    throw std::invalid_argument("parameter `" + parameter + "` needs " +
                                std::to_string(want) + " indices");
  const std::string& f = parsed.family;
  if (f == "sigma") return [](const ModelState& s) { return s.sigma(); };
  if (f == "tau") return [](const ModelState& s) { return s.tau; };
  if (f == "kappa") {
    const auto& ix = parsed.indices;
    if (ix[0] < 0 || ix[0] >= design.num_experiments || ix[1] < 0 ||
        ix[1] >= design.num_groups || ix[2] < 0 ||
        ix[2] >= design.samples_per_cell[ix[0]][ix[1]])
      throw std::invalid_argument("parameter `" + parameter + "` out of design range");
    const int flat = DesignLayout(design).sample_id(ix[0], ix[1], ix[2]);
    return [flat](const ModelState& s) { return s.kappa[flat]; };
  }
  if (f == "alpha") {
    const auto& ix = parsed.indices;
    if (ix[0] < 0 || ix[0] >= design.num_proteins || ix[1] < 0 ||
        ix[1] >= design.spectra_per_protein[ix[0]])
      throw std::invalid_argument("parameter `" + parameter + "` out of design range");
    const int flat = DesignLayout(design).spectrum_id(ix[0], ix[1]);
    return [flat](const ModelState& s) { return s.alpha[flat]; };
  }
  const int g = parsed.indices[0];
  const int j = parsed.indices[1];
  if (g < 1 || g >= design.num_groups || j < 0 || j >= design.num_proteins)
    throw std::invalid_argument("parameter `" + parameter + "` out of design range");
  if (f == "beta") return [g, j](const ModelState& s) { return double(s.beta[s.gp(g, j)]); };
  if (f == "gamma") return [g, j](const ModelState& s) { return s.gamma[s.gp(g, j)]; };
  if (f == "p") return [g, j](const ModelState& s) { return s.p[s.gp(g, j)]; };
  if (f == "effect") return [g, j](const ModelState& s) { return s.effect(g, j); };
  throw std::invalid_argument("unknown parameter family `" + f + "`");
}

std::vector<std::vector<double>> extract_chains(const ChainOutput& output,
                                                const std::string& parameter) {
  require_samples(output);
  const auto get = parameter_accessor(output.design, parameter);
  std::vector<std::vector<double>> chains(output.num_chains());
  for (int c = 0; c < output.num_chains(); ++c) {
    auto& chain = chains[c];
    chain.reserve(output.chain_start[c + 1] - output.chain_start[c]);
    for (std::size_t i = output.chain_start[c]; i < output.chain_start[c + 1]; ++i)
      chain.push_back(get(output.samples[i]));
  }
  return chains;
}

std::vector<double> autocorrelation(const std::vector<std::vector<double>>& chains,
                                    int max_lag) {
  std::vector<double> acf(max_lag, 0.0);
  int used = 0;
  for (const auto& chain : chains) {
    const std::size_t n = chain.size();
    if (n < 2) continue;
    const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / n;
    double var = 0.0;
    for (const double x : chain) var += (x - mean) * (x - mean);
    if (var == 0.0) continue;
    ++used;
    for (int lag = 1; lag <= max_lag; ++lag) {
      double cov = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i)
        cov += (chain[i] - mean) * (chain[i + lag] - mean);
      acf[lag - 1] += cov / var;
    }
  }
  if (used > 0)
    for (double& a : acf) a /= used;
  return acf;
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  std::size_t total = 0;
  std::size_t shortest = SIZE_MAX;
  for (const auto& chain : chains) {
    total += chain.size();
    shortest = std::min(shortest, chain.size());
  }
  if (total == 0) return 0.0;
  if (shortest < 4) return static_cast<double>(total);

  struct Moments {
    double mean, var;
  };
  std::vector<Moments> moments;
  std::vector<const std::vector<double>*> usable;
  for (const auto& chain : chains) {
    const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / chain.size();
    double var = 0.0;
    for (const double x : chain) var += (x - mean) * (x - mean);
    if (var > 0.0) {
      moments.push_back({mean, var});
      usable.push_back(&chain);
    }
  }
  if (usable.empty()) return static_cast<double>(total);  // constant chains

  auto rho = [&](int lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < usable.size(); ++c) {
      const auto& chain = *usable[c];
      double cov = 0.0;
      for (std::size_t i = 0; i + lag < chain.size(); ++i)
        cov += (chain[i] - moments[c].mean) * (chain[i + lag] - moments[c].mean);
      acc += cov / moments[c].var;
    }
    return acc / static_cast<double>(usable.size());
  };

  // Geyer initial positive sequence: tau = -1 + 2 * sum of pair sums
  // Gamma_k = rho(2k) + rho(2k+1), truncated at the first non-positive pair.
  const int max_lag = static_cast<int>(shortest) - 2;
  double pair_sum = 0.0;
  for (int k = 0; 2 * k + 1 <= max_lag; ++k) {
    const double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair_sum += pair;
  }
  const double tau_int = std::max(1.0, -1.0 + 2.0 * pair_sum);
  return std::min(static_cast<double>(total), static_cast<double>(total) / tau_int);
}

std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& chain : chains) {
    for (const double x : chain) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const std::size_t n = chain.size() / 2;
    if (n < 2) continue;
    halves.emplace_back(chain.begin(), chain.begin() + n);
    halves.emplace_back(chain.begin() + n, chain.begin() + 2 * n);
  }
  if (halves.size() < 2) return std::nullopt;
  if (lo == hi) return std::nullopt;  // constant chains: undefined
  const std::size_t n = halves.front().size();
  const std::size_t m = halves.size();

  std::vector<double> means(m);
  double grand = 0.0, w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = std::accumulate(halves[c].begin(), halves[c].end(), 0.0) / n;
    grand += means[c];
    double s2 = 0.0;
    for (const double x : halves[c]) s2 += (x - means[c]) * (x - means[c]);
    w += s2 / static_cast<double>(n - 1);
  }
  grand /= m;
  w /= m;
  double b = 0.0;
  for (const double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  if (w <= 0.0) return std::nullopt;
  const double var_plus = (static_cast<double>(n - 1) / n) * w + b / n;
  return std::sqrt(var_plus / w);
}

DiagnosticsReport diagnostics(const ChainOutput& output,
                              const std::vector<std::string>& selector, int max_lag) {
  require_samples(output);
  for (int c = 0; c < output.num_chains(); ++c)
    if (output.chain_start[c + 1] - output.chain_start[c] < 50)
      throw std::invalid_argument("diagnostics need >= 50 stored samples per chain");

  DiagnosticsReport report;
  for (const std::string& name : expand_parameter_selector(output, selector)) {
    const auto chains = extract_chains(output, name);
    ParamDiagnostics d;
    d.parameter = name;
    d.acf = autocorrelation(chains, max_lag);
    d.ess = effective_sample_size(chains);
    const auto rhat = split_rhat(chains);
    d.rhat_defined = rhat.has_value();
    d.rhat = rhat.value_or(0.0);
    report.params.push_back(std::move(d));
  }
  return report;
}

std::vector<PredictiveSummary> posterior_predictive(const ChainOutput& output,
                                                    const Dataset& dataset,
                                                    const std::vector<int>& obs_indices,
                                                    std::uint64_t seed) {
  require_samples(output);
  const DesignLayout layout(dataset.design);
  Rng rng(seed);
  std::vector<PredictiveSummary> out;
  out.reserve(obs_indices.size());
  std::vector<double> draws(output.samples.size());
  for (const int idx : obs_indices) {
    if (idx < 0 || idx >= static_cast<int>(dataset.observations.size()))
      throw std::invalid_argument("unknown observation index " + std::to_string(idx));
    const Observation& o = dataset.observations[idx];
    const int sid = layout.sample_id(o.experiment, o.group, o.sample);
    const int sp = layout.spectrum_id(o.protein, o.spectrum);
    for (std::size_t l = 0; l < output.samples.size(); ++l) {
      const ModelState& s = output.samples[l];
      const double fit = s.kappa[sid] + s.alpha[sp] + s.effect(o.group, o.protein);
      draws[l] = rng.normal(fit, s.sigma());
    }
    PredictiveSummary summary;
    summary.obs_index = idx;
    summary.observed = o.log_intensity;
    summary.lo95 = quantile(draws, 0.025);
    summary.hi95 = quantile(draws, 0.975);
    summary.covered = summary.lo95 <= o.log_intensity && o.log_intensity <= summary.hi95;
    out.push_back(summary);
  }
  return out;
}

std::vector<double> predictive_density(const ChainOutput& output, const Dataset& dataset,
                                       int obs_index, const std::vector<double>& grid) {
  require_samples(output);
  if (obs_index < 0 || obs_index >= static_cast<int>(dataset.observations.size()))
    throw std::invalid_argument("unknown observation index " + std::to_string(obs_index));
  const DesignLayout layout(dataset.design);
  const Observation& o = dataset.observations[obs_index];
  const int sid = layout.sample_id(o.experiment, o.group, o.sample);
  const int sp = layout.spectrum_id(o.protein, o.spectrum);
  constexpr double inv_sqrt_2pi = 0.3989422804014327;

  std::vector<double> density(grid.size(), 0.0);
  for (const ModelState& s : output.samples) {
    const double fit = s.kappa[sid] + s.alpha[sp] + s.effect(o.group, o.protein);
    const double sigma = s.sigma();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double z = (grid[i] - fit) / sigma;
      density[i] += inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
    }
  }
  for (double& d : density) d /= static_cast<double>(output.samples.size());
  return density;
}

std::vector<MAPoint> ma_plot_data(const Dataset& dataset, DesignLayout::SampleCoord sample_a,
                                  DesignLayout::SampleCoord sample_b) {
  const DesignLayout layout(dataset.design);
  auto resolve = [&](DesignLayout::SampleCoord c) {
    const DesignInfo& d = dataset.design;
    if (c.experiment < 0 || c.experiment >= d.num_experiments || c.group < 0 ||
        c.group >= d.num_groups || c.index < 0 ||
        c.index >= d.samples_per_cell[c.experiment][c.group])
      throw std::invalid_argument("sample coordinate out of design range");
    return layout.sample_id(c.experiment, c.group, c.index);
  };
  const int sid_a = resolve(sample_a);
  const int sid_b = resolve(sample_b);

  std::vector<double> ya(layout.num_spectra()), yb(layout.num_spectra());
  std::vector<char> has_a(layout.num_spectra(), 0), has_b(layout.num_spectra(), 0);
  for (const Observation& o : dataset.observations) {
    const int sid = layout.sample_id(o.experiment, o.group, o.sample);
    const int sp = layout.spectrum_id(o.protein, o.spectrum);
    if (sid == sid_a) ya[sp] = o.log_intensity, has_a[sp] = 1;
    if (sid == sid_b) yb[sp] = o.log_intensity, has_b[sp] = 1;
  }

  std::vector<MAPoint> points;
  for (int sp = 0; sp < layout.num_spectra(); ++sp) {
    if (!has_a[sp] || !has_b[sp]) continue;
    MAPoint pt;
    pt.protein = layout.spectrum_protein(sp);
    pt.spectrum = layout.spectrum_k(sp);
    pt.m = yb[sp] - ya[sp];
    pt.a = 0.5 * (ya[sp] + yb[sp]);
    points.push_back(pt);
  }
  if (points.empty())
    throw std::invalid_argument("the two samples share no observed spectra");
  return points;
}

}  // namespace isodiff
