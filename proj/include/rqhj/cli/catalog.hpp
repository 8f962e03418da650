#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace rqhj::cli {

struct ParameterInfo {
  std::string name;
  std::string type;  // "number" or "number[]"
  bool required;
  std::string description;
};

struct FamilyInfo {
  std::string name;
  std::string formula;
  std::vector<ParameterInfo> params;
};

const std::vector<FamilyInfo>& potential_catalog();

std::string render_catalog_text();

/// JSON schema (draft 2020-12) of the "potential" config section.
nlohmann::json catalog_schema();

}  // namespace rqhj::cli
