#include "isodiff/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "isodiff/dataset_io.hpp"
#include "isodiff/posterior.hpp"

namespace isodiff {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

void write_traces(const ChainOutput& output, std::ostream& out,
                  const TraceWriteOptions& options) {
  KeyValueConfig echo;
  design_to_config(output.design, echo);
  chain_config_to_config(output.config, echo);
  for (const auto& [k, v] : echo.entries()) out << "# " << k << " = " << v << '\n';
  out << "chain,iteration,parameter,value\n";

  std::vector<std::string> selector = options.params;
  if (selector.empty()) selector = {"kappa", "alpha", "beta", "gamma", "p", "sigma"};
  const std::vector<std::string> names = expand_parameter_selector(output, selector);
  std::vector<std::function<double(const ModelState&)>> accessors;
  accessors.reserve(names.size());
  for (const auto& name : names)
    accessors.push_back(parameter_accessor(output.design, name));

  std::string line;
  for (int c = 0; c < output.num_chains(); ++c) {
    long iteration = 0;
    for (std::size_t i = output.chain_start[c]; i < output.chain_start[c + 1]; ++i) {
      ++iteration;
      const ModelState& s = output.samples[i];
      for (std::size_t k = 0; k < names.size(); ++k) {
        line.clear();
        line += std::to_string(c + 1);
        line += ',';
        line += std::to_string(iteration);
        line += ',';
        line += names[k];
        line += ',';
        append_double(line, accessors[k](s));
        line += '\n';
        out << line;
      }
    }
  }
}

void save_traces(const ChainOutput& output, const std::string& path,
                 const TraceWriteOptions& options) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  write_traces(output, out, options);
  if (!out) throw io_error("write failed: " + path);
}

namespace {

// Setter counterpart of parameter_accessor, for reconstruction.
std::function<void(ModelState&, double)> parameter_setter(const DesignInfo& design,
                                                          const DesignLayout& layout,
                                                          const std::string& name) {
  const auto bracket = name.find('[');
  const std::string family = name.substr(0, bracket == std::string::npos ? name.size() : bracket);
  std::vector<int> ix;
  if (bracket != std::string::npos) {
    std::string inside = name.substr(bracket + 1, name.size() - bracket - 2);
    for (char& ch : inside)
      if (ch == ':') ch = ' ';
    std::istringstream in(inside);
    int v = 0;
    while (in >> v) ix.push_back(v - 1);
  }
  auto bad = [&]() -> std::function<void(ModelState&, double)> {
    throw io_error("bad trace parameter `" + name + "`");
  };
  if (family == "sigma") {
    if (!ix.empty()) return bad();
    return [](ModelState& s, double v) { s.tau = 1.0 / (v * v); };
  }
  if (family == "tau") {
    if (!ix.empty()) return bad();
    return [](ModelState& s, double v) { s.tau = v; };
  }
  if (family == "kappa") {
    if (ix.size() != 3 || ix[0] < 0 || ix[0] >= design.num_experiments || ix[1] < 0 ||
        ix[1] >= design.num_groups || ix[2] < 0 ||
        ix[2] >= design.samples_per_cell[ix[0]][ix[1]])
      return bad();
    const int flat = layout.sample_id(ix[0], ix[1], ix[2]);
    return [flat](ModelState& s, double v) { s.kappa[flat] = v; };
  }
  if (family == "alpha") {
    if (ix.size() != 2 || ix[0] < 0 || ix[0] >= design.num_proteins || ix[1] < 0 ||
        ix[1] >= design.spectra_per_protein[ix[0]])
      return bad();
    const int flat = layout.spectrum_id(ix[0], ix[1]);
    return [flat](ModelState& s, double v) { s.alpha[flat] = v; };
  }
  if (ix.size() != 2 || ix[0] < 1 || ix[0] >= design.num_groups || ix[1] < 0 ||
      ix[1] >= design.num_proteins)
    return bad();
  const int g = ix[0], j = ix[1];
  if (family == "beta")
    return [g, j](ModelState& s, double v) { s.beta[s.gp(g, j)] = v != 0.0; };
  if (family == "gamma")
    return [g, j](ModelState& s, double v) { s.gamma[s.gp(g, j)] = v; };
  if (family == "p")
    return [g, j](ModelState& s, double v) { s.p[s.gp(g, j)] = v; };
  return bad();
}

}  // namespace

ChainOutput read_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open trace file: " + path);

  // Streamed single pass: states are created on demand per (chain,
  // iteration) key and values applied immediately, so memory stays at the
  // size of the reconstructed states rather than the row count.
  std::string design_text;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  bool design_ready = false;
  DesignInfo design;
  DesignLayout layout;
  KeyValueConfig echo;

  std::vector<ModelState> states;
  std::map<std::pair<int, long>, std::size_t> slot_of;
  std::map<std::string, std::function<void(ModelState&, double)>, std::less<>> setters;
  std::set<std::string> families;

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
      if (line != "chain,iteration,parameter,value")
        throw io_error(path + ":" + std::to_string(lineno) +
                       ": expected header `chain,iteration,parameter,value`");
      header_seen = true;
      continue;
    }
    if (!design_ready) {
      echo = KeyValueConfig::parse_string(design_text, path);
      if (!config_has_design(echo))
        throw io_error(path + ": trace file lacks the design header echo");
      design = design_from_config(echo);
      const ValidationReport report = validate(design);
      if (!report.ok()) throw io_error(path + ": bad design echo:\n" + report.to_string());
      layout = DesignLayout(design);
      design_ready = true;
    }

    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos)
      throw io_error(path + ":" + std::to_string(lineno) + ": expected 4 fields");
    int chain = 0;
    long iteration = 0;
    double value = 0.0;
    try {
      chain = std::stoi(line.substr(0, c1));
      iteration = std::stol(line.substr(c1 + 1, c2 - c1 - 1));
      value = std::stod(line.substr(c3 + 1));
    } catch (const std::exception&) {
      throw io_error(path + ":" + std::to_string(lineno) + ": malformed trace row");
    }
    if (chain < 1 || iteration < 1)
      throw io_error(path + ":" + std::to_string(lineno) + ": chain and iteration are 1-based");
    const std::string parameter = line.substr(c2 + 1, c3 - c2 - 1);

    const auto [slot_it, inserted] = slot_of.try_emplace({chain, iteration}, states.size());
    if (inserted) states.push_back(make_state(layout));
    auto setter_it = setters.find(parameter);
    if (setter_it == setters.end())
      setter_it = setters.emplace(parameter, parameter_setter(design, layout, parameter)).first;
    setter_it->second(states[slot_it->second], value);
    families.insert(parameter.substr(0, parameter.find('[')));
  }
  if (!header_seen) throw io_error(path + ": empty trace file");
  if (states.empty()) throw io_error(path + ": trace file has no stored states");

  ChainOutput out;
  out.design = design;
  out.config = chain_config_from_config(echo);

  // reorder arrival-ordered states chain-major (slot_of iterates sorted)
  out.samples.reserve(states.size());
  int max_chain = 0;
  for (const auto& [key, slot] : slot_of) {
    out.samples.push_back(std::move(states[slot]));
    max_chain = std::max(max_chain, key.first);
  }
  out.chain_start.assign(max_chain + 1, 0);
  {
    std::size_t position = 0;
    for (const auto& [key, slot] : slot_of) out.chain_start[key.first] = ++position;
  }
  for (int c = 1; c <= max_chain; ++c)
    out.chain_start[c] = std::max(out.chain_start[c], out.chain_start[c - 1]);

  std::vector<const char*> required = {"alpha", "sigma"};
  if (design.num_groups > 1) {
    required.push_back("beta");
    required.push_back("gamma");
  }
  for (const char* family : required)
    if (!families.count(family) && !(families.count("tau") && std::string(family) == "sigma"))
      throw io_error(path + ": trace file lacks `" + std::string(family) +
                     "` rows; summaries need full traces");
  return out;
}

}  // namespace isodiff
