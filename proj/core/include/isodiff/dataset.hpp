#pragma once

#include <string>
#include <vector>

namespace isodiff {

// One observed reporter-ion log intensity. Indices are 0-based in memory;
// the file format (see dataset_io) is 1-based.
struct Observation {
  int experiment = 0;  // e, 0..E-1
  int group = 0;       // g, 0..G-1
  int sample = 0;      // i within (e,g), 0..n_eg-1
  int protein = 0;     // j, 0..P-1
  int spectrum = 0;    // k within protein, 0..m_j-1
  double log_intensity = 0.0;
};

struct DesignInfo {
  int num_experiments = 0;                     // E
  int num_groups = 0;                          // G
  int num_proteins = 0;                        // P
  int tags_per_experiment = 0;                 // n_I
  std::vector<int> spectra_per_protein;        // m_j, length P
  std::vector<std::vector<int>> samples_per_cell;  // n[e][g]
  std::vector<int> reference_group;            // g_e per experiment; its sample 0 is the reference
};

// Ragged table: only observed entries are stored, missing reporter ions are
// simply absent rows. Every coordinate appears at most once.
struct Dataset {
  DesignInfo design;
  std::vector<Observation> observations;
};

struct Violation {
  std::string message;
  int observation = -1;  // index into observations, -1 for design-level issues
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks every design and observation invariant; violations are data, not
// exceptions.
ValidationReport validate(const Dataset& dataset);
ValidationReport validate(const DesignInfo& design);

// Flat id assignment for the ragged (e,g,i) sample and (j,k) spectrum
// structure. Sample ids run experiment-major in (g,i) order; spectrum ids are
// protein-major.
class DesignLayout {
 public:
  DesignLayout() = default;
  explicit DesignLayout(const DesignInfo& design);

  const DesignInfo& design() const { return design_; }

  int num_spectra() const { return static_cast<int>(spectrum_offset_.back()); }
  int num_samples() const { return static_cast<int>(sample_offset_.back()); }

  int spectrum_id(int protein, int k) const { return spectrum_offset_[protein] + k; }
  int sample_id(int e, int g, int i) const { return cell_offset_[e][g] + i; }

  int spectrum_protein(int spectrum_id) const { return spectrum_protein_[spectrum_id]; }
  int spectrum_k(int spectrum_id) const;

  struct SampleCoord {
    int experiment, group, index;
  };
  SampleCoord sample_coord(int sample_id) const { return sample_coord_[sample_id]; }

  int reference_sample(int e) const { return reference_sample_[e]; }
  bool is_reference(int sample_id) const { return is_reference_[sample_id]; }

 private:
  DesignInfo design_;
  std::vector<int> spectrum_offset_;            // P+1
  std::vector<std::vector<int>> cell_offset_;   // [e][g] -> first sample id
  std::vector<int> sample_offset_;              // E+1 (total samples boundary)
  std::vector<int> spectrum_protein_;
  std::vector<SampleCoord> sample_coord_;
  std::vector<int> reference_sample_;
  std::vector<char> is_reference_;
};

// Precomputed observation index lists, built once per dataset: a canonically
// ordered flat view of the observations plus, for every sample, spectrum and
// (group, protein) pair, the list of observations contributing to its
// conditional update. Canonical (e,g,j,k,i) ordering makes every downstream
// sum independent of the row order in the input file.
class ObservationIndex {
 public:
  explicit ObservationIndex(const Dataset& dataset);

  const DesignLayout& layout() const { return layout_; }
  int num_observations() const { return static_cast<int>(y_.size()); }

  const std::vector<double>& y() const { return y_; }
  const std::vector<int>& sample_of() const { return sample_of_; }
  const std::vector<int>& spectrum_of() const { return spectrum_of_; }
  const std::vector<int>& group_of() const { return group_of_; }
  const std::vector<int>& protein_of() const { return protein_of_; }

  const std::vector<int>& obs_of_sample(int sample_id) const { return by_sample_[sample_id]; }
  const std::vector<int>& obs_of_spectrum(int spectrum_id) const { return by_spectrum_[spectrum_id]; }
  const std::vector<int>& obs_of_group_protein(int g, int j) const {
    return by_group_protein_[static_cast<std::size_t>(g) * layout_.design().num_proteins + j];
  }

  // Index into the original dataset.observations vector.
  int source_row(int obs) const { return source_row_[obs]; }

 private:
  DesignLayout layout_;
  std::vector<double> y_;
  std::vector<int> sample_of_, spectrum_of_, group_of_, protein_of_, source_row_;
  std::vector<std::vector<int>> by_sample_, by_spectrum_, by_group_protein_;
};

}  // namespace isodiff
