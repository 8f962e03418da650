#include "rqhj/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "rqhj/errors.hpp"

namespace rqhj::cli {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& node, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : node.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

const json& require(const json& node, const std::string& key, const std::string& where) {
  if (!node.is_object() || !node.contains(key)) {
    throw ConfigError("missing key '" + key + "' in " + where);
  }
  return node.at(key);
}

double number(const json& node, const std::string& key, const std::string& where) {
  const auto& v = require(node, key, where);
  if (!v.is_number()) {
    throw ConfigError(where + "." + key + " must be a number");
  }
  return v.get<double>();
}

double number_or(const json& node, const std::string& key, double fallback, const std::string& where) {
  return node.contains(key) ? number(node, key, where) : fallback;
}

std::vector<double> number_list(const json& node, const std::string& key, const std::string& where) {
  const auto& v = require(node, key, where);
  if (!v.is_array()) {
    throw ConfigError(where + "." + key + " must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& item : v) {
    if (!item.is_number()) {
      throw ConfigError(where + "." + key + " must be an array of numbers");
    }
    out.push_back(item.get<double>());
  }
  return out;
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::string pointer;
  std::stringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (part.empty()) {
      throw ConfigError("empty component in override key " + key);
    }
    pointer += "/" + part;
  }
  doc[json::json_pointer(pointer)] = value;
}

PotentialSpec<double> parse_potential(const json& node) {
  const std::string where = "potential";
  reject_unknown_keys(node, {"family", "params"}, where);
  const auto& family_node = require(node, "family", where);
  if (!family_node.is_string()) {
    throw ConfigError("potential.family must be a string");
  }
  const auto family = family_node.get<std::string>();
  const json params = node.value("params", json::object());
  const std::string pw = "potential.params";
  if (family == "constant") {
    reject_unknown_keys(params, {"V0"}, pw);
    return ConstantPotential<double>{number_or(params, "V0", 0.0, pw)};
  }
  if (family == "linear") {
    reject_unknown_keys(params, {"lambda"}, pw);
    return LinearPotential<double>{number(params, "lambda", pw)};
  }
  if (family == "harmonic") {
    reject_unknown_keys(params, {"k", "x_c"}, pw);
    return HarmonicPotential<double>{number(params, "k", pw), number_or(params, "x_c", 0.0, pw)};
  }
  if (family == "tabulated") {
    reject_unknown_keys(params, {"x", "V"}, pw);
    try {
      return TabulatedPotential<double>{CubicSpline<double>(number_list(params, "x", pw), number_list(params, "V", pw))};
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown potential family '" + family + "'");
}

ScenarioConfig parse_config(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  reject_unknown_keys(doc, {"schema_version", "setup", "potential", "grid", "mixing", "run", "tolerances", "nonrel",
                            "output"},
                      "config");
  const auto& version = require(doc, "schema_version", "config");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  ScenarioConfig cfg;
  cfg.source = doc;

  const json setup = doc.value("setup", json::object());
  reject_unknown_keys(setup, {"hbar", "c", "m0", "E"}, "setup");
  cfg.setup.hbar = number_or(setup, "hbar", 1.0, "setup");
  cfg.setup.c = number_or(setup, "c", 1.0, "setup");
  cfg.setup.m0 = number_or(setup, "m0", 1.0, "setup");
  cfg.setup.energy = number(setup, "E", "setup");
  try {
    cfg.setup.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  cfg.potential = parse_potential(require(doc, "potential", "config"));

  const auto& grid = require(doc, "grid", "config");
  reject_unknown_keys(grid, {"x_start", "x_end", "n_points"}, "grid");
  cfg.grid.x_start = number(grid, "x_start", "grid");
  cfg.grid.x_end = number(grid, "x_end", "grid");
  const auto& n = require(grid, "n_points", "grid");
  if (!n.is_number_integer()) {
    throw ConfigError("grid.n_points must be an integer");
  }
  cfg.grid.n_points = n.get<Index>();
  try {
    cfg.grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  const json mixing = doc.value("mixing", json::object());
  reject_unknown_keys(mixing, {"a", "b", "d", "e", "alpha_plus", "alpha_minus", "beta_plus", "beta_minus", "k1", "k2"},
                      "mixing");
  auto& m = cfg.mixing;
  m.a = number_or(mixing, "a", m.a, "mixing");
  m.b = number_or(mixing, "b", m.b, "mixing");
  m.d = number_or(mixing, "d", m.d, "mixing");
  m.e = number_or(mixing, "e", m.e, "mixing");
  m.alpha_plus = number_or(mixing, "alpha_plus", m.alpha_plus, "mixing");
  m.alpha_minus = number_or(mixing, "alpha_minus", m.alpha_minus, "mixing");
  m.beta_plus = number_or(mixing, "beta_plus", m.beta_plus, "mixing");
  m.beta_minus = number_or(mixing, "beta_minus", m.beta_minus, "mixing");
  m.k1 = number_or(mixing, "k1", m.k1, "mixing");
  m.k2 = number_or(mixing, "k2", m.k2, "mixing");

  const auto& run = require(doc, "run", "config");
  if (!run.is_array() || run.empty()) {
    throw ConfigError("run must be a non-empty array of report names");
  }
  for (const auto& item : run) {
    const auto id = item.is_string() ? parse_equation_id(item.get<std::string>()) : std::nullopt;
    if (!id) {
      throw ConfigError("unknown report name in run: " + item.dump());
    }
    if (std::find(cfg.run.begin(), cfg.run.end(), *id) == cfg.run.end()) {
      cfg.run.push_back(*id);
    }
  }

  const json tol = doc.value("tolerances", json::object());
  reject_unknown_keys(tol, {"eps_sing", "rel_tol", "residual"}, "tolerances");
  cfg.tolerances.eps_sing = number_or(tol, "eps_sing", 1e-6 * cfg.setup.rest_energy(), "tolerances");
  cfg.tolerances.rel_tol = number_or(tol, "rel_tol", cfg.tolerances.rel_tol, "tolerances");
  cfg.tolerances.residual = number_or(tol, "residual", cfg.tolerances.residual, "tolerances");
  if (!(cfg.tolerances.eps_sing > 0) || !(cfg.tolerances.rel_tol > 0) || !(cfg.tolerances.residual > 0)) {
    throw ConfigError("tolerances must be positive");
  }

  const bool wants_nonrel = std::any_of(cfg.run.begin(), cfg.run.end(), [](EquationId id) {
    return id == EquationId::nonrel_34 || id == EquationId::nonrel_35;
  });
  if (doc.contains("nonrel")) {
    const auto& nr = doc.at("nonrel");
    reject_unknown_keys(nr, {"E_prime", "c_values"}, "nonrel");
    cfg.nonrel.e_prime = number(nr, "E_prime", "nonrel");
    cfg.nonrel.c_values = number_list(nr, "c_values", "nonrel");
  }
  if (wants_nonrel) {
    if (cfg.nonrel.c_values.size() < 2) {
      throw ConfigError("nonrel reports need nonrel.E_prime and at least two nonrel.c_values");
    }
    for (double c : cfg.nonrel.c_values) {
      if (!(c > 0)) {
        throw ConfigError("nonrel.c_values must be positive");
      }
    }
  }

  const json out = doc.value("output", json::object());
  reject_unknown_keys(out, {"format", "path"}, "output");
  const std::string format = out.value("format", std::string("csv"));
  if (format == "csv") {
    cfg.format = OutputFormat::csv;
  } else if (format == "json") {
    cfg.format = OutputFormat::json;
  } else {
    throw ConfigError("output.format must be csv or json");
  }
  cfg.path = out.value("path", std::string());
  return cfg;
}

}  // namespace rqhj::cli
