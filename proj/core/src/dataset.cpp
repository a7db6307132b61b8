#include "isodiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace isodiff {

std::string ValidationReport::to_string() const {
  if (ok()) return "ok\n";
  std::ostringstream out;
  for (const auto& v : violations) {
    if (v.observation >= 0) out << "observation " << v.observation << ": ";
    out << v.message << '\n';
  }
  return out.str();
}

namespace {

void validate_design(const DesignInfo& d, ValidationReport& report) {
  auto fail = [&](std::string msg) { report.violations.push_back({std::move(msg), -1}); };

  if (d.num_experiments < 1) fail("design: E must be >= 1");
  if (d.num_groups < 1) fail("design: G must be >= 1");
  if (d.num_proteins < 1) fail("design: P must be >= 1");
  if (d.tags_per_experiment < 1) fail("design: n_I must be >= 1");

  if (static_cast<int>(d.spectra_per_protein.size()) != d.num_proteins)
    fail("design: m list has length " + std::to_string(d.spectra_per_protein.size()) +
         ", expected P = " + std::to_string(d.num_proteins));
  for (std::size_t j = 0; j < d.spectra_per_protein.size(); ++j)
    if (d.spectra_per_protein[j] < 1)
      fail("design: m_j must be >= 1 for protein " + std::to_string(j + 1));

  if (static_cast<int>(d.samples_per_cell.size()) != d.num_experiments)
    fail("design: n table has " + std::to_string(d.samples_per_cell.size()) +
         " rows, expected E = " + std::to_string(d.num_experiments));
  if (static_cast<int>(d.reference_group.size()) != d.num_experiments)
    fail("design: g_ref has length " + std::to_string(d.reference_group.size()) +
         ", expected E = " + std::to_string(d.num_experiments));

  for (int e = 0; e < static_cast<int>(d.samples_per_cell.size()); ++e) {
    const auto& row = d.samples_per_cell[e];
    if (static_cast<int>(row.size()) != d.num_groups) {
      fail("design: n row for experiment " + std::to_string(e + 1) + " has " +
           std::to_string(row.size()) + " entries, expected G = " + std::to_string(d.num_groups));
      continue;
    }
    int total = 0;
    for (int g = 0; g < d.num_groups; ++g) {
      if (row[g] < 0) fail("design: negative n_eg in experiment " + std::to_string(e + 1));
      total += row[g];
    }
    if (total != d.tags_per_experiment)
      fail("design: tag count mismatch in experiment " + std::to_string(e + 1) +
           ": sum of n_eg is " + std::to_string(total) + ", n_I is " +
           std::to_string(d.tags_per_experiment));
    if (e < static_cast<int>(d.reference_group.size())) {
      const int gr = d.reference_group[e];
      if (gr < 0 || gr >= d.num_groups)
        fail("design: reference group out of range in experiment " + std::to_string(e + 1));
      else if (row[gr] < 1)
        fail("design: reference sample missing, experiment " + std::to_string(e + 1) +
             " has no sample in group " + std::to_string(gr + 1));
    }
  }
}

}  // namespace

ValidationReport validate(const DesignInfo& design) {
  ValidationReport report;
  validate_design(design, report);
  return report;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  const DesignInfo& d = dataset.design;
  validate_design(d, report);
  if (!report.ok()) return report;  // observation bounds need a sane design

  auto fail = [&](int idx, std::string msg) { report.violations.push_back({std::move(msg), idx}); };

  std::vector<std::tuple<int, int, int, int, int, int>> coords;
  coords.reserve(dataset.observations.size());
  for (int idx = 0; idx < static_cast<int>(dataset.observations.size()); ++idx) {
    const Observation& o = dataset.observations[idx];
    bool in_bounds = true;
    auto bound = [&](int v, int lo, int hi, const char* what) {
      if (v < lo || v >= hi) {
        std::ostringstream msg;
        msg << what << " index " << v + 1 << " out of range [1," << hi << "]";
        fail(idx, msg.str());
        in_bounds = false;
      }
    };
    bound(o.experiment, 0, d.num_experiments, "experiment");
    bound(o.group, 0, d.num_groups, "group");
    bound(o.protein, 0, d.num_proteins, "protein");
    if (o.experiment >= 0 && o.experiment < d.num_experiments && o.group >= 0 &&
        o.group < d.num_groups)
      bound(o.sample, 0, d.samples_per_cell[o.experiment][o.group], "sample");
    if (o.protein >= 0 && o.protein < d.num_proteins)
      bound(o.spectrum, 0, d.spectra_per_protein[o.protein], "spectrum");
    if (!std::isfinite(o.log_intensity)) fail(idx, "log_intensity is not finite");
    if (in_bounds)
      coords.emplace_back(o.experiment, o.group, o.protein, o.spectrum, o.sample, idx);
  }

  std::sort(coords.begin(), coords.end());
  for (std::size_t i = 1; i < coords.size(); ++i) {
    const auto& [e, g, j, k, s, idx] = coords[i];
    const auto& prev = coords[i - 1];
    if (std::get<0>(prev) == e && std::get<1>(prev) == g && std::get<2>(prev) == j &&
        std::get<3>(prev) == k && std::get<4>(prev) == s) {
      std::ostringstream msg;
      msg << "duplicate coordinate (" << e + 1 << "," << g + 1 << "," << j + 1 << ","
          << k + 1 << "," << s + 1 << "), first seen at observation " << std::get<5>(prev);
      fail(idx, msg.str());
    }
  }
  return report;
}

DesignLayout::DesignLayout(const DesignInfo& design) : design_(design) {
  const int P = design_.num_proteins;
  const int E = design_.num_experiments;
  const int G = design_.num_groups;

  spectrum_offset_.assign(P + 1, 0);
  for (int j = 0; j < P; ++j)
    spectrum_offset_[j + 1] = spectrum_offset_[j] + design_.spectra_per_protein[j];
  spectrum_protein_.resize(spectrum_offset_[P]);
  for (int j = 0; j < P; ++j)
    for (int s = spectrum_offset_[j]; s < spectrum_offset_[j + 1]; ++s)
      spectrum_protein_[s] = j;

  cell_offset_.assign(E, std::vector<int>(G, 0));
  sample_offset_.assign(E + 1, 0);
  int next = 0;
  for (int e = 0; e < E; ++e) {
    for (int g = 0; g < G; ++g) {
      cell_offset_[e][g] = next;
      next += design_.samples_per_cell[e][g];
    }
    sample_offset_[e + 1] = next;
  }
  sample_coord_.resize(next);
  is_reference_.assign(next, 0);
  reference_sample_.resize(E);
  for (int e = 0; e < E; ++e) {
    for (int g = 0; g < G; ++g)
      for (int i = 0; i < design_.samples_per_cell[e][g]; ++i)
        sample_coord_[cell_offset_[e][g] + i] = {e, g, i};
    reference_sample_[e] = cell_offset_[e][design_.reference_group[e]];
    is_reference_[reference_sample_[e]] = 1;
  }
}

int DesignLayout::spectrum_k(int spectrum_id) const {
  return spectrum_id - spectrum_offset_[spectrum_protein_[spectrum_id]];
}

ObservationIndex::ObservationIndex(const Dataset& dataset) : layout_(dataset.design) {
  const int n = static_cast<int>(dataset.observations.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& obs = dataset.observations;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Observation& x = obs[a];
    const Observation& y = obs[b];
    return std::tie(x.experiment, x.group, x.protein, x.spectrum, x.sample) <
           std::tie(y.experiment, y.group, y.protein, y.spectrum, y.sample);
  });

  y_.resize(n);
  sample_of_.resize(n);
  spectrum_of_.resize(n);
  group_of_.resize(n);
  protein_of_.resize(n);
  source_row_.resize(n);
  by_sample_.assign(layout_.num_samples(), {});
  by_spectrum_.assign(layout_.num_spectra(), {});
  by_group_protein_.assign(static_cast<std::size_t>(dataset.design.num_groups) *
                               dataset.design.num_proteins,
                           {});

  for (int i = 0; i < n; ++i) {
    const Observation& o = obs[order[i]];
    y_[i] = o.log_intensity;
    sample_of_[i] = layout_.sample_id(o.experiment, o.group, o.sample);
    spectrum_of_[i] = layout_.spectrum_id(o.protein, o.spectrum);
    group_of_[i] = o.group;
    protein_of_[i] = o.protein;
    source_row_[i] = order[i];
    by_sample_[sample_of_[i]].push_back(i);
    by_spectrum_[spectrum_of_[i]].push_back(i);
    by_group_protein_[static_cast<std::size_t>(o.group) * dataset.design.num_proteins +
                      o.protein]
        .push_back(i);
  }
}

}  // namespace isodiff
