#include "lfo/grid_case.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lfo {

using nlohmann::json;

int GridCase::bus_index(int id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  throw ConfigError("unknown bus id " + std::to_string(id));
}

int GridCase::slack_index() const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].kind == BusKind::Slack) return static_cast<int>(i);
  throw ConfigError("case has no slack bus");
}

void GridCase::validate() const {
  if (system_base <= 0) throw ConfigError("system_base must be positive");
  if (nominal_freq <= 0) throw ConfigError("nominal_freq must be positive");
  if (buses.empty()) throw ConfigError("case has no buses");

  std::set<int> ids;
  int slacks = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second)
      throw ConfigError("duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::Slack) ++slacks;
    if (b.v_setpoint <= 0)
      throw ConfigError("bus " + std::to_string(b.id) + ": V_setpoint must be positive");
  }
  if (slacks != 1)
    throw ConfigError("case must have exactly one slack bus, found " + std::to_string(slacks));

  for (const auto& ln : lines) {
    bus_index(ln.from_bus);
    bus_index(ln.to_bus);
    if (ln.from_bus == ln.to_bus)
      throw ConfigError("line connects bus " + std::to_string(ln.from_bus) + " to itself");
    if (ln.r == 0.0 && ln.x == 0.0)
      throw ConfigError("line " + std::to_string(ln.from_bus) + "-" +
                        std::to_string(ln.to_bus) + " has zero impedance");
  }

  if (generators.empty()) throw ConfigError("case has no generators");
  for (const auto& g : generators) {
    int bi = bus_index(g.bus);
    if (buses[bi].kind == BusKind::PQ)
      throw ConfigError("generator at PQ bus " + std::to_string(g.bus));
    if (g.rating <= 0) throw ConfigError("generator rating must be positive");
    if (g.h <= 0) throw ConfigError("generator H must be positive");
    if (g.xd_prime <= 0 || g.xd < g.xd_prime)
      throw ConfigError("generator at bus " + std::to_string(g.bus) +
                        ": need Xd >= Xd_prime > 0");
    if (g.td0_prime <= 0) throw ConfigError("Td0_prime must be positive");
    if (g.ta <= 0) throw ConfigError("Ta must be positive");
    if (g.efd_max <= g.efd_min) throw ConfigError("Efd limits inverted");
  }
  // one machine per bus keeps the internal-node bookkeeping simple
  std::set<int> gen_buses;
  for (const auto& g : generators)
    if (!gen_buses.insert(g.bus).second)
      throw ConfigError("multiple generators at bus " + std::to_string(g.bus));

  for (const auto& p : pv_units) {
    bus_index(p.bus);
    if (p.rated < 0) throw ConfigError("pv unit rated must be non-negative");
  }
}

namespace {

double num_field(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(ctx + ": missing field '" + key + "'");
  if (!it->is_number())
    throw ConfigError(ctx + ": field '" + key + "' must be a number");
  return it->get<double>();
}

double num_field_or(const json& j, const char* key, double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

BusKind parse_kind(const std::string& s, const std::string& ctx) {
  if (s == "slack") return BusKind::Slack;
  if (s == "PV") return BusKind::PV;
  if (s == "PQ") return BusKind::PQ;
  throw ConfigError(ctx + ": unknown bus kind '" + s + "'");
}

}  // namespace

GridCase parse_grid_case(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("case file is not valid JSON: ") + e.what());
  }

  GridCase gc;
  gc.system_base = num_field_or(j, "system_base", 100.0);
  gc.nominal_freq = num_field_or(j, "nominal_freq", 60.0);

  if (!j.contains("buses") || !j["buses"].is_array())
    throw ConfigError("case file: missing 'buses' array");
  for (const auto& jb : j["buses"]) {
    Bus b;
    b.id = static_cast<int>(num_field(jb, "id", "bus"));
    std::string ctx = "bus " + std::to_string(b.id);
    if (!jb.contains("kind") || !jb["kind"].is_string())
      throw ConfigError(ctx + ": missing field 'kind'");
    b.kind = parse_kind(jb["kind"].get<std::string>(), ctx);
    b.v_setpoint = num_field_or(jb, "V_setpoint", 1.0);
    b.p_load = num_field_or(jb, "P_load", 0.0);
    b.q_load = num_field_or(jb, "Q_load", 0.0);
    gc.buses.push_back(b);
  }

  if (!j.contains("lines") || !j["lines"].is_array())
    throw ConfigError("case file: missing 'lines' array");
  for (const auto& jl : j["lines"]) {
    Line ln;
    ln.from_bus = static_cast<int>(num_field(jl, "from_bus", "line"));
    ln.to_bus = static_cast<int>(num_field(jl, "to_bus", "line"));
    std::string ctx = "line " + std::to_string(ln.from_bus) + "-" + std::to_string(ln.to_bus);
    ln.r = num_field(jl, "r", ctx);
    ln.x = num_field(jl, "x", ctx);
    ln.b_shunt = num_field_or(jl, "b_shunt", 0.0);
    ln.in_service = jl.value("in_service", true);
    gc.lines.push_back(ln);
  }

  if (!j.contains("generators") || !j["generators"].is_array())
    throw ConfigError("case file: missing 'generators' array");
  for (const auto& jg : j["generators"]) {
    Generator g;
    g.bus = static_cast<int>(num_field(jg, "bus", "generator"));
    std::string ctx = "generator at bus " + std::to_string(g.bus);
    g.rating = num_field(jg, "rating", ctx);
    g.h = num_field(jg, "H", ctx);
    g.d = num_field_or(jg, "D", 0.0);
    g.xd = num_field(jg, "Xd", ctx);
    g.xd_prime = num_field(jg, "Xd_prime", ctx);
    g.td0_prime = num_field(jg, "Td0_prime", ctx);
    g.ka = num_field_or(jg, "Ka", 200.0);
    g.ta = num_field_or(jg, "Ta", 0.01);
    g.efd_min = num_field_or(jg, "Efd_min", -6.0);
    g.efd_max = num_field_or(jg, "Efd_max", 6.0);
    g.p_dispatch = num_field_or(jg, "P_dispatch", 0.0);
    gc.generators.push_back(g);
  }

  if (j.contains("pv_units")) {
    if (!j["pv_units"].is_array()) throw ConfigError("'pv_units' must be an array");
    for (const auto& jp : j["pv_units"]) {
      PvUnit p;
      p.bus = static_cast<int>(num_field(jp, "bus", "pv unit"));
      p.rated = num_field(jp, "rated", "pv unit");
      gc.pv_units.push_back(p);
    }
  }

  gc.validate();
  return gc;
}

GridCase load_grid_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_case(ss.str());
}

}  // namespace lfo
