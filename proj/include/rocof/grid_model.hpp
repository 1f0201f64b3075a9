#pragma once

// Network data model for the augmented DC power-flow description: load buses
// joined by lines, and generator internal nodes each hanging off exactly one
// load bus (its terminal) through the generator's internal susceptance.

#include <rocof/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rocof {

struct BusId {
  std::string value;

  BusId() = default;
  BusId(std::string v) : value(std::move(v)) {}
  BusId(const char* v) : value(v) {}

  bool empty() const noexcept { return value.empty(); }
  const std::string& str() const noexcept { return value; }

  friend auto operator<=>(const BusId&, const BusId&) = default;
  friend bool operator==(const BusId&, const BusId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BusId& id) { return os << id.value; }

struct GeneratorSpec {
  BusId bus;       // internal EMF node of the machine
  BusId terminal;  // load bus the internal branch attaches to
  double h0_mws = 0.0;
  double h_max_mws = 0.0;
  double internal_susceptance_pu = 0.0;
  double cost_per_mws = 0.0;

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct LineSpec {
  BusId from;
  BusId to;
  double susceptance_pu = 0.0;

  friend bool operator==(const LineSpec&, const LineSpec&) = default;
};

struct GridModel {
  double f0_hz = 50.0;
  double s_base_mva = 100.0;
  std::vector<BusId> load_buses;
  std::vector<GeneratorSpec> generators;
  std::vector<LineSpec> lines;

  std::size_t num_generators() const noexcept { return generators.size(); }
  std::size_t num_loads() const noexcept { return load_buses.size(); }

  /// Index of a load bus, or npos.
  std::size_t load_index(const BusId& id) const {
    auto it = std::find(load_buses.begin(), load_buses.end(), id);
    return it == load_buses.end() ? npos : static_cast<std::size_t>(it - load_buses.begin());
  }

  std::size_t generator_index(const BusId& id) const {
    auto it = std::find_if(generators.begin(), generators.end(),
                           [&](const GeneratorSpec& g) { return g.bus == id; });
    return it == generators.end() ? npos : static_cast<std::size_t>(it - generators.begin());
  }

  bool is_load_bus(const BusId& id) const { return load_index(id) != npos; }
  bool is_generator_bus(const BusId& id) const { return generator_index(id) != npos; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const GridModel&, const GridModel&) = default;
};

enum class Severity { warning, error };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string message;
  std::string offending_id;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  void add(Severity s, std::string message, std::string id = {}) {
    if (s == Severity::error) ok = false;
    issues.push_back({s, std::move(message), std::move(id)});
  }

  bool has_error_containing(std::string_view text) const {
    return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) {
      return i.severity == Severity::error && i.message.find(text) != std::string::npos;
    });
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& i : issues) {
      os << (i.severity == Severity::error ? "error: " : "warning: ") << i.message;
      if (!i.offending_id.empty()) os << " [" << i.offending_id << "]";
      os << '\n';
    }
    return os.str();
  }
};

namespace detail {

// Plain union-find over dense indices.
class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
  std::vector<std::size_t> parent_;
};

inline bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace detail

/// Structural checks on a grid value: positivity, uniqueness, id
/// resolution, isolated buses and connectivity. Never throws.
inline ValidationReport validate_grid(const GridModel& grid) {
  ValidationReport report;

  if (!detail::finite_positive(grid.f0_hz)) report.add(Severity::error, "nominal frequency must be positive");
  if (!detail::finite_positive(grid.s_base_mva)) report.add(Severity::error, "MVA base must be positive");
  if (grid.generators.empty()) report.add(Severity::error, "grid has no generators");
  if (grid.load_buses.empty()) report.add(Severity::error, "grid has no load buses");

  std::set<BusId> seen;
  auto check_id = [&](const BusId& id) {
    if (id.empty()) {
      report.add(Severity::error, "empty bus id");
      return;
    }
    if (!seen.insert(id).second) report.add(Severity::error, "duplicate bus id", id.value);
  };
  for (const auto& l : grid.load_buses) check_id(l);
  for (const auto& g : grid.generators) check_id(g.bus);

  const std::size_t m = grid.load_buses.size();
  const std::size_t n = grid.generators.size();
  std::vector<std::size_t> degree(m, 0);
  // Nodes 0..m-1 are load buses, m..m+n-1 generator internal nodes.
  detail::DisjointSets sets(m + n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = grid.generators[i];
    if (!(std::isfinite(g.h0_mws) && g.h0_mws >= 0.0))
      report.add(Severity::error, "synchronous inertia must be non-negative", g.bus.value);
    if (!std::isfinite(g.h_max_mws) || g.h0_mws > g.h_max_mws)
      report.add(Severity::error, "h0 exceeds h_max", g.bus.value);
    if (!detail::finite_positive(g.internal_susceptance_pu))
      report.add(Severity::error, "non-positive internal susceptance", g.bus.value);
    if (!(std::isfinite(g.cost_per_mws) && g.cost_per_mws >= 0.0))
      report.add(Severity::error, "cost coefficient must be non-negative", g.bus.value);
    const auto t = grid.load_index(g.terminal);
    if (t == GridModel::npos) {
      report.add(Severity::error, "generator terminal is not a load bus", g.bus.value);
      continue;
    }
    ++degree[t];
    sets.unite(m + i, t);
  }

  std::set<std::pair<BusId, BusId>> pairs;
  for (const auto& line : grid.lines) {
    const std::string label = line.from.value + "-" + line.to.value;
    if (!detail::finite_positive(line.susceptance_pu))
      report.add(Severity::error, "non-positive line susceptance", label);
    if (line.from == line.to) {
      report.add(Severity::error, "line connects a bus to itself", label);
      continue;
    }
    const auto a = grid.load_index(line.from);
    const auto b = grid.load_index(line.to);
    if (a == GridModel::npos || b == GridModel::npos) {
      report.add(Severity::error, "line endpoint is not a load bus", label);
      continue;
    }
    auto key = std::minmax(line.from, line.to);
    if (!pairs.insert({key.first, key.second}).second)
      report.add(Severity::warning, "parallel lines aggregated", label);
    ++degree[a];
    ++degree[b];
    sets.unite(a, b);
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (degree[j] == 0) report.add(Severity::error, "isolated bus", grid.load_buses[j].value);
  }
  std::set<std::size_t> roots;
  for (std::size_t k = 0; k < m + n; ++k) roots.insert(sets.find(k));
  if (roots.size() > 1)
    report.add(Severity::error, "graph disconnected (" + std::to_string(roots.size()) + " islands)");
  return report;
}

/// Throws InvalidGridError unless validate_grid(grid).ok.
inline void require_valid(const GridModel& grid) {
  auto report = validate_grid(grid);
  if (!report.ok) throw InvalidGridError("invalid grid:\n" + report.summary());
}

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw GridParseError("unknown key '" + key + "' in " + std::string(where));
  }
}

inline const json& require_field(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw GridParseError("missing required field '" + std::string(key) + "' in " + std::string(where));
  return *it;
}

inline double number_field(const json& obj, const char* key, std::string_view where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_number())
    throw GridParseError("field '" + std::string(key) + "' in " + std::string(where) + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    throw GridParseError("field '" + std::string(key) + "' in " + std::string(where) + " is not finite");
  return x;
}

inline std::string string_field(const json& obj, const char* key, std::string_view where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string())
    throw GridParseError("field '" + std::string(key) + "' in " + std::string(where) + " must be a string");
  auto s = v.get<std::string>();
  if (s.empty()) throw GridParseError("empty id in field '" + std::string(key) + "' of " + std::string(where));
  return s;
}

inline const json& array_field(const json& obj, const char* key, std::string_view where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_array())
    throw GridParseError("field '" + std::string(key) + "' in " + std::string(where) + " must be an array");
  return v;
}

}  // namespace detail

/// Parses the JSON grid format. Per-field problems throw GridParseError;
/// connectivity is left to validate_grid.
inline GridModel parse_grid(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw GridParseError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const json::out_of_range& e) {
    throw GridParseError(std::string("number out of range: ") + e.what());
  }
  if (!doc.is_object()) throw GridParseError("grid document must be a JSON object");
  detail::reject_unknown_keys(doc, {"f0_hz", "s_base_mva", "load_buses", "generators", "lines"}, "grid");

  GridModel grid;
  grid.f0_hz = detail::number_field(doc, "f0_hz", "grid");
  grid.s_base_mva = detail::number_field(doc, "s_base_mva", "grid");
  if (grid.f0_hz <= 0.0) throw GridParseError("f0_hz must be positive");
  if (grid.s_base_mva <= 0.0) throw GridParseError("s_base_mva must be positive");

  std::set<std::string> ids;
  auto claim = [&](const std::string& id) {
    if (!ids.insert(id).second) throw GridParseError("duplicate bus id '" + id + "'", id);
  };

  for (const auto& v : detail::array_field(doc, "load_buses", "grid")) {
    if (!v.is_string() || v.get<std::string>().empty())
      throw GridParseError("load bus ids must be non-empty strings");
    claim(v.get<std::string>());
    grid.load_buses.emplace_back(v.get<std::string>());
  }

  for (const auto& g : detail::array_field(doc, "generators", "grid")) {
    if (!g.is_object()) throw GridParseError("generator entries must be objects");
    detail::reject_unknown_keys(g, {"id", "terminal", "h0_mws", "h_max_mws", "b_internal_pu", "cost_per_mws"},
                                "generator");
    GeneratorSpec spec;
    spec.bus = detail::string_field(g, "id", "generator");
    const std::string where = "generator '" + spec.bus.value + "'";
    spec.terminal = detail::string_field(g, "terminal", where);
    spec.h0_mws = detail::number_field(g, "h0_mws", where);
    spec.h_max_mws = detail::number_field(g, "h_max_mws", where);
    spec.internal_susceptance_pu = detail::number_field(g, "b_internal_pu", where);
    spec.cost_per_mws = detail::number_field(g, "cost_per_mws", where);
    claim(spec.bus.value);
    if (spec.internal_susceptance_pu <= 0.0)
      throw GridParseError("non-positive susceptance on " + where, spec.bus.value);
    if (spec.h0_mws < 0.0) throw GridParseError("negative h0 on " + where, spec.bus.value);
    if (spec.h0_mws > spec.h_max_mws) throw GridParseError("h0 exceeds h_max on " + where, spec.bus.value);
    if (spec.cost_per_mws < 0.0) throw GridParseError("negative cost on " + where, spec.bus.value);
    grid.generators.push_back(std::move(spec));
  }

  for (const auto& l : detail::array_field(doc, "lines", "grid")) {
    if (!l.is_object()) throw GridParseError("line entries must be objects");
    detail::reject_unknown_keys(l, {"from", "to", "b_pu"}, "line");
    LineSpec line;
    line.from = detail::string_field(l, "from", "line");
    line.to = detail::string_field(l, "to", "line");
    line.susceptance_pu = detail::number_field(l, "b_pu", "line");
    const std::string label = line.from.value + "-" + line.to.value;
    if (line.susceptance_pu <= 0.0) throw GridParseError("non-positive susceptance on line " + label, label);
    if (line.from == line.to) throw GridParseError("line " + label + " connects a bus to itself", label);
    grid.lines.push_back(std::move(line));
  }

  for (const auto& g : grid.generators) {
    if (!grid.is_load_bus(g.terminal))
      throw GridParseError("terminal '" + g.terminal.value + "' of generator '" + g.bus.value +
                               "' is not a load bus",
                           g.terminal.value);
  }
  for (const auto& l : grid.lines) {
    for (const auto* end : {&l.from, &l.to}) {
      if (!grid.is_load_bus(*end))
        throw GridParseError("line endpoint '" + end->value + "' is not a load bus", end->value);
    }
  }
  return grid;
}

inline std::string serialize_grid(const GridModel& grid) {
  nlohmann::ordered_json doc;
  doc["f0_hz"] = grid.f0_hz;
  doc["s_base_mva"] = grid.s_base_mva;
  doc["load_buses"] = nlohmann::ordered_json::array();
  for (const auto& l : grid.load_buses) doc["load_buses"].push_back(l.value);
  doc["generators"] = nlohmann::ordered_json::array();
  for (const auto& g : grid.generators) {
    doc["generators"].push_back({{"id", g.bus.value},
                                 {"terminal", g.terminal.value},
                                 {"h0_mws", g.h0_mws},
                                 {"h_max_mws", g.h_max_mws},
                                 {"b_internal_pu", g.internal_susceptance_pu},
                                 {"cost_per_mws", g.cost_per_mws}});
  }
  doc["lines"] = nlohmann::ordered_json::array();
  for (const auto& l : grid.lines)
    doc["lines"].push_back({{"from", l.from.value}, {"to", l.to.value}, {"b_pu", l.susceptance_pu}});
  return doc.dump(2) + "\n";
}

inline GridModel load_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridParseError("cannot open grid file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid(buf.str());
}

}  // namespace rocof
