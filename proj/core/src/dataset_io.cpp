#include "isodiff/dataset_io.hpp"

#include "isodiff/format.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace isodiff {

namespace {

constexpr const char* kHeader = "experiment,group,sample,protein,spectrum,log_intensity";

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw io_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

ObservationRows read_observation_rows(const std::string& path, bool log_transform) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open data file: " + path);

  ObservationRows rows;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader)
        parse_fail(path, lineno, "expected header `" + std::string(kHeader) + "`");
      header_seen = true;
      continue;
    }

    std::array<std::string_view, 6> fields;
    std::string_view rest = line;
    for (int f = 0; f < 6; ++f) {
      const auto comma = rest.find(',');
      if (f < 5 && comma == std::string_view::npos)
        parse_fail(path, lineno, "expected 6 comma-separated fields");
      fields[f] = f < 5 ? rest.substr(0, comma) : rest;
      if (f < 5) rest = rest.substr(comma + 1);
    }
    if (fields[5].find(',') != std::string_view::npos)
      parse_fail(path, lineno, "expected 6 comma-separated fields");

    Observation o;
    auto read_index = [&](std::string_view sv, int& out, const char* what) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (ec != std::errc{} || ptr != sv.data() + sv.size())
        parse_fail(path, lineno, std::string(what) + ": `" + std::string(sv) + "` is not an integer");
      if (v < 1)
        parse_fail(path, lineno, std::string(what) + " index must be >= 1, got " + std::to_string(v));
      out = v - 1;
    };
    read_index(fields[0], o.experiment, "experiment");
    read_index(fields[1], o.group, "group");
    read_index(fields[2], o.sample, "sample");
    read_index(fields[3], o.protein, "protein");
    read_index(fields[4], o.spectrum, "spectrum");

    double y = 0;
    const auto [ptr, ec] = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), y);
    if (ec != std::errc{} || ptr != fields[5].data() + fields[5].size())
      parse_fail(path, lineno, "log_intensity: `" + std::string(fields[5]) + "` is not a number");
    if (log_transform) {
      if (y <= 0.0)
        parse_fail(path, lineno, "cannot log-transform non-positive intensity " + format_double(y));
      y = std::log(y);
    }
    if (!std::isfinite(y)) parse_fail(path, lineno, "log_intensity is not finite");
    o.log_intensity = y;

    rows.observations.push_back(o);
    rows.line_numbers.push_back(lineno);
  }
  if (!header_seen) parse_fail(path, lineno + 1, "empty file, header row required");
  return rows;
}

Dataset load_dataset(const std::string& path, const DesignInfo& design,
                     const LoadOptions& options) {
  const ObservationRows rows = read_observation_rows(path, options.log_transform);
  Dataset dataset{design, rows.observations};
  const ValidationReport report = validate(dataset);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << path << ": invalid dataset:\n";
    for (const auto& v : report.violations) {
      if (v.observation >= 0)
        msg << path << ":" << rows.line_numbers[v.observation] << ": " << v.message << '\n';
      else
        msg << path << ": " << v.message << '\n';
    }
    throw io_error(msg.str());
  }
  if (options.require_complete) dataset = drop_incomplete_spectra(dataset);
  return dataset;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  out << kHeader << '\n';
  for (const Observation& o : dataset.observations) {
    out << o.experiment + 1 << ',' << o.group + 1 << ',' << o.sample + 1 << ','
        << o.protein + 1 << ',' << o.spectrum + 1 << ',' << format_double(o.log_intensity)
        << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  write_dataset(dataset, out);
  if (!out) throw io_error("write failed: " + path);
}

bool config_has_design(const KeyValueConfig& config) {
  return config.has("E") && config.has("G") && config.has("P") && config.has("n_I");
}

DesignInfo design_from_config(const KeyValueConfig& config) {
  DesignInfo d;
  d.num_experiments = static_cast<int>(config.get_int("E"));
  d.num_groups = static_cast<int>(config.get_int("G"));
  d.num_proteins = static_cast<int>(config.get_int("P"));
  d.tags_per_experiment = static_cast<int>(config.get_int("n_I"));

  for (const long v : config.get_int_list("m"))
    d.spectra_per_protein.push_back(static_cast<int>(v));

  for (int e = 1; e <= d.num_experiments; ++e) {
    const std::string key = "n." + std::to_string(e);
    std::vector<int> row;
    for (const long v : config.get_int_list(key)) row.push_back(static_cast<int>(v));
    d.samples_per_cell.push_back(std::move(row));
  }

  for (const long v : config.get_int_list("g_ref")) {
    if (v < 1) throw config_error("g_ref entries are 1-based group indices, got " + std::to_string(v));
    d.reference_group.push_back(static_cast<int>(v - 1));
  }
  if (d.reference_group.size() == 1 && d.num_experiments > 1)
    d.reference_group.assign(d.num_experiments, d.reference_group[0]);
  return d;
}

void design_to_config(const DesignInfo& design, KeyValueConfig& config) {
  auto join = [](const std::vector<int>& v, int shift) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(v[i] + shift);
    }
    return out;
  };
  config.set("E", std::to_string(design.num_experiments));
  config.set("G", std::to_string(design.num_groups));
  config.set("P", std::to_string(design.num_proteins));
  config.set("n_I", std::to_string(design.tags_per_experiment));
  config.set("m", join(design.spectra_per_protein, 0));
  for (int e = 0; e < design.num_experiments; ++e)
    config.set("n." + std::to_string(e + 1), join(design.samples_per_cell[e], 0));
  config.set("g_ref", join(design.reference_group, 1));
}

DesignInfo infer_design(const std::vector<Observation>& observations,
                        const std::vector<int>& reference_group_1based) {
  if (observations.empty()) throw io_error("cannot infer a design from zero observations");
  DesignInfo d;
  for (const Observation& o : observations) {
    d.num_experiments = std::max(d.num_experiments, o.experiment + 1);
    d.num_groups = std::max(d.num_groups, o.group + 1);
    d.num_proteins = std::max(d.num_proteins, o.protein + 1);
  }
  d.spectra_per_protein.assign(d.num_proteins, 1);
  d.samples_per_cell.assign(d.num_experiments, std::vector<int>(d.num_groups, 0));
  for (const Observation& o : observations) {
    auto& m = d.spectra_per_protein[o.protein];
    m = std::max(m, o.spectrum + 1);
    auto& n = d.samples_per_cell[o.experiment][o.group];
    n = std::max(n, o.sample + 1);
  }
  d.tags_per_experiment = 0;
  for (const int n : d.samples_per_cell[0]) d.tags_per_experiment += n;

  if (reference_group_1based.empty())
    throw config_error("design inference requires an explicit g_ref");
  for (const int g : reference_group_1based) {
    if (g < 1 || g > d.num_groups)
      throw config_error("g_ref entry " + std::to_string(g) + " out of range [1," +
                         std::to_string(d.num_groups) + "]");
    d.reference_group.push_back(g - 1);
  }
  if (d.reference_group.size() == 1 && d.num_experiments > 1)
    d.reference_group.assign(d.num_experiments, d.reference_group[0]);
  if (static_cast<int>(d.reference_group.size()) != d.num_experiments)
    throw config_error("g_ref has " + std::to_string(d.reference_group.size()) +
                       " entries, expected E = " + std::to_string(d.num_experiments));
  return d;
}

Dataset drop_incomplete_spectra(const Dataset& dataset) {
  // count reporters per (experiment, protein, spectrum)
  std::map<std::tuple<int, int, int>, int> counts;
  for (const Observation& o : dataset.observations)
    ++counts[{o.experiment, o.protein, o.spectrum}];

  Dataset out;
  out.design = dataset.design;
  const int full = dataset.design.tags_per_experiment;
  for (const Observation& o : dataset.observations)
    if (counts[{o.experiment, o.protein, o.spectrum}] == full) out.observations.push_back(o);
  return out;
}

}  // namespace isodiff
