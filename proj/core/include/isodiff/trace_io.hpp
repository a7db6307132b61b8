#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isodiff/gibbs.hpp"

namespace isodiff {

// Chain trace file: `#`-comment header echoing the design and chain settings,
// then `chain,iteration,parameter,value` rows, one per stored state per
// scalar parameter. Iteration is the 1-based stored-state ordinal within its
// chain; parameter names follow the posterior-analysis grammar
// (kappa[e:g:i], alpha[j:k], beta[g:j], gamma[g:j], p[g:j], sigma).
// Reference kappa entries are pinned to zero and not written.

struct TraceWriteOptions {
  // Empty writes everything; otherwise a parameter selector (family names
  // and/or fully indexed names).
  std::vector<std::string> params;
};

void write_traces(const ChainOutput& output, std::ostream& out,
                  const TraceWriteOptions& options = {});
void save_traces(const ChainOutput& output, const std::string& path,
                 const TraceWriteOptions& options = {});

// Rebuilds a ChainOutput from a trace file. Requires the design header echo
// and a full parameter set (no family filter at write time); sigma rows
// reconstruct tau as 1/sigma^2.
ChainOutput read_traces(const std::string& path);

}  // namespace isodiff
