#include "isodiff/simulate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "isodiff/dataset_io.hpp"
#include "isodiff/format.hpp"
#include "isodiff/rng.hpp"

namespace isodiff {

void check(const SimulationSpec& spec) {
  DesignInfo d = spec.design;
  if (d.spectra_per_protein.empty())
    d.spectra_per_protein.assign(d.num_proteins, 1);  // placeholder, drawn later
  const ValidationReport report = validate(d);
  if (!report.ok())
    throw std::invalid_argument("simulation design invalid:\n" + report.to_string());

  if (!(spec.mean_spectra >= 1.0))
    throw std::invalid_argument("mean_spectra must be >= 1");
  if (!(spec.alpha_sd >= 0.0) || !(spec.kappa_sd >= 0.0) || !(spec.sigma >= 0.0))
    throw std::invalid_argument("alpha_sd, kappa_sd and sigma must be >= 0");
  if (!(spec.gamma_fold_min > 1.0) || !(spec.gamma_fold_max >= spec.gamma_fold_min))
    throw std::invalid_argument("fold bounds must satisfy 1 < fold_min <= fold_max");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0))
    throw std::invalid_argument("dropout must lie in [0,1)");
  if (!spec.de_prob.empty() && static_cast<int>(spec.de_prob.size()) != d.num_groups)
    throw std::invalid_argument("de_prob must have one entry per group");
  for (const double p : spec.de_prob)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("de_prob entries must lie in [0,1]");
  for (const SpikeEntry& s : spec.spikes) {
    if (s.protein < 0 || s.protein >= d.num_proteins)
      throw std::invalid_argument("spike protein index out of range");
    if (s.group < 1 || s.group >= d.num_groups)
      throw std::invalid_argument("spike group must be a treatment group (>= 2)");
  }
}

std::pair<Dataset, GroundTruth> simulate_dataset(const SimulationSpec& spec) {
  check(spec);
  Rng rng(spec.seed);

  DesignInfo design = spec.design;
  if (design.spectra_per_protein.empty()) {
    // geometric on {1,2,...} with mean mean_spectra, i.e. success prob 1/mean
    const double q = 1.0 / spec.mean_spectra;
    design.spectra_per_protein.resize(design.num_proteins);
    for (int j = 0; j < design.num_proteins; ++j) {
      const double u = rng.uniform01();
      design.spectra_per_protein[j] =
          q >= 1.0 ? 1 : 1 + static_cast<int>(std::log1p(-u) / std::log1p(-q));
    }
  }
  for (const SpikeEntry& s : spec.spikes)
    design.spectra_per_protein[s.protein] =
        std::max(design.spectra_per_protein[s.protein], std::max(s.min_spectra, 1));

  const DesignLayout layout(design);
  GroundTruth truth;
  truth.design = design;
  truth.state = make_state(layout);
  truth.de_count.assign(design.num_groups, 0);
  ModelState& st = truth.state;

  for (double& a : st.alpha) a = rng.normal(spec.alpha_mean, spec.alpha_sd);

  std::vector<char> spiked(st.beta.size(), 0);
  for (const SpikeEntry& s : spec.spikes) {
    const auto idx = st.gp(s.group, s.protein);
    spiked[idx] = 1;
    st.beta[idx] = 1;
    st.gamma[idx] = s.log_ratio;
  }
  const double lo = std::log(spec.gamma_fold_min);
  const double hi = std::log(spec.gamma_fold_max);
  for (int g = 1; g < design.num_groups; ++g) {
    const double de_prob = spec.de_prob.empty() ? 0.0 : spec.de_prob[g];
    for (int j = 0; j < design.num_proteins; ++j) {
      const auto idx = st.gp(g, j);
      if (!spiked[idx]) {
        st.beta[idx] = rng.bernoulli(de_prob) ? 1 : 0;
        if (st.beta[idx]) {
          const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
          st.gamma[idx] = sign * (lo + (hi - lo) * rng.uniform01());
        }
      }
      if (st.beta[idx]) ++truth.de_count[g];
      // p is not a generating quantity; keep the state constraint-valid
      st.p[idx] = 0.5;
    }
  }

  for (int sid = 0; sid < layout.num_samples(); ++sid)
    if (!layout.is_reference(sid)) st.kappa[sid] = rng.normal(0.0, spec.kappa_sd);

  st.tau = spec.sigma > 0.0 ? 1.0 / (spec.sigma * spec.sigma)
                            : std::numeric_limits<double>::infinity();

  Dataset dataset;
  dataset.design = design;
  for (int e = 0; e < design.num_experiments; ++e)
    for (int g = 0; g < design.num_groups; ++g)
      for (int i = 0; i < design.samples_per_cell[e][g]; ++i) {
        const int sid = layout.sample_id(e, g, i);
        for (int j = 0; j < design.num_proteins; ++j)
          for (int k = 0; k < design.spectra_per_protein[j]; ++k) {
            Observation o;
            o.experiment = e;
            o.group = g;
            o.sample = i;
            o.protein = j;
            o.spectrum = k;
            o.log_intensity = st.kappa[sid] + st.alpha[layout.spectrum_id(j, k)] +
                              st.effect(g, j) + spec.sigma * rng.std_normal();
            dataset.observations.push_back(o);
          }
      }

  if (spec.dropout > 0.0) {
    std::vector<Observation> kept;
    kept.reserve(dataset.observations.size());
    for (const Observation& o : dataset.observations)
      if (!rng.bernoulli(spec.dropout)) kept.push_back(o);
    dataset.observations = std::move(kept);
  }
  return {std::move(dataset), std::move(truth)};
}

SimulationSpec paper_scenario_spec() {
  SimulationSpec spec;
  spec.design.num_experiments = 2;
  spec.design.num_groups = 4;
  spec.design.num_proteins = 300;
  spec.design.tags_per_experiment = 6;
  // tag patterns (CTL,CTL,TRT1,TRT1,TRT2,TRT2) and (CTL,TRT1,TRT2,TRT3,TRT3,TRT3)
  spec.design.samples_per_cell = {{2, 2, 2, 0}, {1, 1, 1, 3}};
  spec.design.reference_group = {0, 0};
  spec.mean_spectra = 6.0;
  spec.alpha_mean = 10.0;
  spec.alpha_sd = 3.0;
  spec.de_prob = {0.0, 0.1, 0.2, 0.3};
  spec.gamma_fold_min = 1.5;
  spec.gamma_fold_max = 4.0;
  spec.kappa_sd = 0.1;
  spec.sigma = 0.3;
  return spec;
}

SimulationSpec spike_in_scenario_spec() {
  SimulationSpec spec;
  spec.design.num_experiments = 2;
  spec.design.num_groups = 2;
  spec.design.num_proteins = 282;
  spec.design.tags_per_experiment = 6;
  spec.design.samples_per_cell = {{3, 3}, {3, 3}};
  spec.design.reference_group = {0, 0};
  spec.mean_spectra = 6.0;
  spec.alpha_mean = 10.0;
  // kept small so that a spectrum-pooling t-test baseline remains comparable;
  // the Bayesian fit models alpha per spectrum and is insensitive to this
  spec.alpha_sd = 0.1;
  spec.de_prob = {0.0, 0.0};
  spec.kappa_sd = 0.1;
  spec.sigma = 0.3;
  spec.spikes = {
      {0, 1, 0.4055, 8},   // 1.50-fold up
      {1, 1, -0.9676, 8},  // 0.38-fold
      {2, 1, -0.6931, 8},  // 0.50-fold
      {3, 1, 1.6094, 8},   // 5.00-fold up
  };
  return spec;
}

SimulationSpec simulation_spec_from_config(const KeyValueConfig& config) {
  SimulationSpec spec;
  DesignInfo d;
  d.num_experiments = static_cast<int>(config.get_int("E"));
  d.num_groups = static_cast<int>(config.get_int("G"));
  d.num_proteins = static_cast<int>(config.get_int("P"));
  d.tags_per_experiment = static_cast<int>(config.get_int("n_I"));
  if (config.has("m"))
    for (const long v : config.get_int_list("m")) d.spectra_per_protein.push_back(static_cast<int>(v));
  for (int e = 1; e <= d.num_experiments; ++e)
    {
      std::vector<int> row;
      for (const long v : config.get_int_list("n." + std::to_string(e)))
        row.push_back(static_cast<int>(v));
      d.samples_per_cell.push_back(std::move(row));
    }
  for (const long v : config.get_int_list("g_ref")) d.reference_group.push_back(static_cast<int>(v - 1));
  if (d.reference_group.size() == 1 && d.num_experiments > 1)
    d.reference_group.assign(d.num_experiments, d.reference_group[0]);
  spec.design = std::move(d);

  spec.mean_spectra = config.get_real("mean_spectra", spec.mean_spectra);
  spec.alpha_mean = config.get_real("alpha_mean", spec.alpha_mean);
  spec.alpha_sd = config.get_real("alpha_sd", spec.alpha_sd);
  if (config.has("de_prob")) spec.de_prob = config.get_real_list("de_prob");
  spec.gamma_fold_min = config.get_real("fold_min", spec.gamma_fold_min);
  spec.gamma_fold_max = config.get_real("fold_max", spec.gamma_fold_max);
  spec.kappa_sd = config.get_real("kappa_sd", spec.kappa_sd);
  spec.sigma = config.get_real("sigma", spec.sigma);
  spec.dropout = config.get_real("dropout", spec.dropout);
  spec.seed = static_cast<std::uint64_t>(config.get_int("seed", 0));

  if (config.has("spikes")) {
    // protein:group:log_ratio[:min_spectra], 1-based indices, space separated
    std::istringstream in(config.get_string("spikes"));
    std::string token;
    while (in >> token) {
      SpikeEntry s;
      std::replace(token.begin(), token.end(), ':', ' ');
      std::istringstream fields(token);
      int protein1 = 0, group1 = 0;
      if (!(fields >> protein1 >> group1 >> s.log_ratio))
        throw config_error("bad spike entry, expected protein:group:log_ratio[:min_spectra]");
      fields >> s.min_spectra;
      s.protein = protein1 - 1;
      s.group = group1 - 1;
      spec.spikes.push_back(s);
    }
  }
  check(spec);
  return spec;
}

void simulation_spec_to_config(const SimulationSpec& spec, KeyValueConfig& config) {
  auto join = [](const std::vector<int>& v, int shift) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(v[i] + shift);
    }
    return out;
  };
  const DesignInfo& d = spec.design;
  config.set("E", std::to_string(d.num_experiments));
  config.set("G", std::to_string(d.num_groups));
  config.set("P", std::to_string(d.num_proteins));
  config.set("n_I", std::to_string(d.tags_per_experiment));
  if (!d.spectra_per_protein.empty()) config.set("m", join(d.spectra_per_protein, 0));
  for (int e = 0; e < d.num_experiments; ++e)
    config.set("n." + std::to_string(e + 1), join(d.samples_per_cell[e], 0));
  config.set("g_ref", join(d.reference_group, 1));
  config.set("mean_spectra", format_double(spec.mean_spectra));
  config.set("alpha_mean", format_double(spec.alpha_mean));
  config.set("alpha_sd", format_double(spec.alpha_sd));
  if (!spec.de_prob.empty()) {
    std::string list;
    for (std::size_t g = 0; g < spec.de_prob.size(); ++g) {
      if (g) list += ',';
      list += format_double(spec.de_prob[g]);
    }
    config.set("de_prob", list);
  }
  config.set("fold_min", format_double(spec.gamma_fold_min));
  config.set("fold_max", format_double(spec.gamma_fold_max));
  config.set("kappa_sd", format_double(spec.kappa_sd));
  config.set("sigma", format_double(spec.sigma));
  config.set("dropout", format_double(spec.dropout));
  config.set("seed", std::to_string(spec.seed));
  if (!spec.spikes.empty()) {
    std::string list;
    for (std::size_t i = 0; i < spec.spikes.size(); ++i) {
      const SpikeEntry& s = spec.spikes[i];
      if (i) list += ' ';
      list += std::to_string(s.protein + 1) + ':' + std::to_string(s.group + 1) + ':' +
              format_double(s.log_ratio);
      if (s.min_spectra > 0) list += ':' + std::to_string(s.min_spectra);
    }
    config.set("spikes", list);
  }
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  KeyValueConfig design_echo;
  design_to_config(truth.design, design_echo);
  for (const auto& [k, v] : design_echo.entries()) out << "# " << k << " = " << v << '\n';

  out << "parameter,indices,value\n";
  const DesignLayout layout(truth.design);
  const ModelState& st = truth.state;
  for (int j = 0; j < truth.design.num_proteins; ++j)
    out << "m," << j + 1 << ',' << truth.design.spectra_per_protein[j] << '\n';
  for (int j = 0; j < truth.design.num_proteins; ++j)
    for (int k = 0; k < truth.design.spectra_per_protein[j]; ++k)
      out << "alpha," << j + 1 << ':' << k + 1 << ','
          << format_double(st.alpha[layout.spectrum_id(j, k)]) << '\n';
  for (int sid = 0; sid < layout.num_samples(); ++sid) {
    const auto c = layout.sample_coord(sid);
    out << "kappa," << c.experiment + 1 << ':' << c.group + 1 << ':' << c.index + 1 << ','
        << format_double(st.kappa[sid]) << '\n';
  }
  for (int g = 1; g < truth.design.num_groups; ++g)
    for (int j = 0; j < truth.design.num_proteins; ++j) {
      out << "beta," << g + 1 << ':' << j + 1 << ',' << int(st.beta[st.gp(g, j)]) << '\n';
      out << "gamma," << g + 1 << ':' << j + 1 << ',' << format_double(st.gamma[st.gp(g, j)])
          << '\n';
    }
  out << "sigma,," << format_double(st.sigma()) << '\n';
  for (int g = 1; g < truth.design.num_groups; ++g)
    out << "de_count," << g + 1 << ',' << truth.de_count[g] << '\n';
  if (!out) throw io_error("write failed: " + path);
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open ground-truth file: " + path);

  std::string design_text;
  std::vector<std::array<std::string, 3>> rows;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      design_text += line.substr(1);
      design_text += '\n';
      continue;
    }
    if (!header_seen) {
      if (line != "parameter,indices,value")
        throw io_error(path + ":" + std::to_string(lineno) + ": expected ground-truth header");
      header_seen = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw io_error(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    rows.push_back({line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1)});
  }

  GroundTruth truth;
  truth.design = design_from_config(KeyValueConfig::parse_string(design_text, path));
  const ValidationReport report = validate(truth.design);
  if (!report.ok()) throw io_error(path + ": bad design echo:\n" + report.to_string());
  const DesignLayout layout(truth.design);
  truth.state = make_state(layout);
  truth.de_count.assign(truth.design.num_groups, 0);
  for (int g = 1; g < truth.design.num_groups; ++g)
    for (int j = 0; j < truth.design.num_proteins; ++j)
      truth.state.p[truth.state.gp(g, j)] = 0.5;

  auto parse_ints = [](const std::string& s) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in2(s);
    while (std::getline(in2, tok, ':')) out.push_back(std::stoi(tok));
    return out;
  };
  for (const auto& [name, indices, value] : rows) {
    const double v = std::stod(value);
    const auto ix = indices.empty() ? std::vector<int>{} : parse_ints(indices);
    if (name == "alpha")
      truth.state.alpha[layout.spectrum_id(ix[0] - 1, ix[1] - 1)] = v;
    else if (name == "kappa")
      truth.state.kappa[layout.sample_id(ix[0] - 1, ix[1] - 1, ix[2] - 1)] = v;
    else if (name == "beta")
      truth.state.beta[truth.state.gp(ix[0] - 1, ix[1] - 1)] = v != 0.0;
    else if (name == "gamma")
      truth.state.gamma[truth.state.gp(ix[0] - 1, ix[1] - 1)] = v;
    else if (name == "sigma")
      truth.state.tau = v > 0.0 ? 1.0 / (v * v) : std::numeric_limits<double>::infinity();
    else if (name == "de_count")
      truth.de_count[ix[0] - 1] = static_cast<int>(v);
    else if (name != "m")
      throw io_error(path + ": unknown ground-truth parameter `" + name + "`");
  }
  return truth;
}

}  // namespace isodiff
