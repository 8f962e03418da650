#include "rqhj/cli/catalog.hpp"

namespace rqhj::cli {

using nlohmann::json;

const std::vector<FamilyInfo>& potential_catalog() {
  static const std::vector<FamilyInfo> families = {
      {"constant", "V(x) = V0", {{"V0", "number", false, "potential level (default 0)"}}},
      {"linear", "V(x) = lambda * x", {{"lambda", "number", true, "slope dV/dx"}}},
      {"harmonic",
       "V(x) = k * (x - x_c)^2 / 2",
       {{"k", "number", true, "stiffness"}, {"x_c", "number", false, "centre (default 0)"}}},
      {"tabulated",
       "not-a-knot cubic spline through (x_i, V_i), C2 on [x_0, x_n]",
       {{"x", "number[]", true, "strictly increasing abscissae, at least 4"},
        {"V", "number[]", true, "potential samples, same length as x"}}},
  };
  return families;
}

std::string render_catalog_text() {
  std::string out;
  for (const auto& f : potential_catalog()) {
    out += f.name + "    " + f.formula + "\n";
    for (const auto& p : f.params) {
      out += "    " + p.name + " (" + p.type + (p.required ? ", required" : ", optional") + ")  " + p.description + "\n";
    }
  }
  return out;
}

json catalog_schema() {
  json variants = json::array();
  for (const auto& f : potential_catalog()) {
    json props = json::object();
    json required = json::array();
    for (const auto& p : f.params) {
      props[p.name] = p.type == "number" ? json{{"type", "number"}, {"description", p.description}}
                                         : json{{"type", "array"},
                                                {"items", {{"type", "number"}}},
                                                {"minItems", 4},
                                                {"description", p.description}};
      if (p.required) {
        required.push_back(p.name);
      }
    }
    json params = {{"type", "object"}, {"properties", props}, {"additionalProperties", false}};
    if (!required.empty()) {
      params["required"] = required;
    }
    variants.push_back({{"title", f.name},
                        {"description", f.formula},
                        {"type", "object"},
                        {"properties", {{"family", {{"const", f.name}}}, {"params", params}}},
                        {"required", f.name == "constant" ? json::array({"family"}) : json::array({"family", "params"})},
                        {"additionalProperties", false}});
  }
  return {{"$schema", "https://json-schema.org/draft/2020-12/schema"},
          {"title", "potential"},
          {"oneOf", variants}};
}

}  // namespace rqhj::cli
