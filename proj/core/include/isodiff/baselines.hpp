#pragma once

#include <vector>

#include "isodiff/dataset.hpp"

namespace isodiff {

// Subtracts each sample's mean log intensity from all of its observations.
// Idempotent; throws std::invalid_argument if a design sample has no
// observations at all.
Dataset mean_normalize(const Dataset& dataset);

struct TTestRow {
  int protein = 0;
  bool testable = false;  // needs >= 2 observations in each group
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double q = 1.0;
  bool significant = false;
};

// Welch two-sample t on a pair of observation vectors; p two-sided.
struct WelchResult {
  double t = 0.0, df = 0.0, p = 1.0;
};
WelchResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Per-protein Welch test on pooled per-spectrum log intensities between the
// two groups (all experiments and samples), then Benjamini-Hochberg across
// the testable proteins. Call on a mean-normalized dataset.
std::vector<TTestRow> protein_ttest(const Dataset& dataset, int group_a, int group_b,
                                    double q_threshold = 0.05);

// Step-up BH adjustment; order-preserving, clipped to 1.
std::vector<double> bh_adjust(const std::vector<double>& pvalues);

}  // namespace isodiff
