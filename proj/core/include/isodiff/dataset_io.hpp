#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isodiff/config.hpp"
#include "isodiff/dataset.hpp"

namespace isodiff {

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  bool log_transform = false;    // take the natural log of the intensity column
  bool require_complete = false; // drop spectra lacking any of the n_I reporters in an experiment
};

// Reads the delimited observation table. Header row
// `experiment,group,sample,protein,spectrum,log_intensity`, 1-based indices,
// `#` comment lines ignored. Parse and validation errors name the offending
// line.
Dataset load_dataset(const std::string& path, const DesignInfo& design,
                     const LoadOptions& options = {});

void save_dataset(const Dataset& dataset, const std::string& path);
void write_dataset(const Dataset& dataset, std::ostream& out);

// Raw rows with their file line numbers, before any design is known.
struct ObservationRows {
  std::vector<Observation> observations;
  std::vector<int> line_numbers;
};
ObservationRows read_observation_rows(const std::string& path, bool log_transform = false);

// Design from config keys E, G, P, n_I, g_ref, m, n.<e>; `m` may be omitted
// when `infer_m_from` rows are supplied.
DesignInfo design_from_config(const KeyValueConfig& config);
void design_to_config(const DesignInfo& design, KeyValueConfig& config);
bool config_has_design(const KeyValueConfig& config);

// Infers E, G, P, m and the n table from observed index ranges. The reference
// groups cannot be inferred and must be given explicitly (1-based, length E or
// a single value broadcast to all experiments).
DesignInfo infer_design(const std::vector<Observation>& observations,
                        const std::vector<int>& reference_group_1based);

// Removes, per experiment, every spectrum that is missing one or more of the
// n_I reporter values in that experiment.
Dataset drop_incomplete_spectra(const Dataset& dataset);

}  // namespace isodiff
