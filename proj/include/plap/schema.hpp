#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace plap {

/// Validator for the JSON Schema subset used by the shipped schemas: type, enum, const,
/// properties, required, additionalProperties (boolean), items, minItems, maxItems,
/// minLength, minimum, maximum, exclusiveMinimum, exclusiveMaximum, oneOf, anyOf, and
/// local "$ref": "#/$defs/<name>". Unknown keywords are ignored.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema);

  /// One message per violation, each prefixed with a JSON pointer to the offending value.
  std::vector<std::string> errors(const nlohmann::json& doc) const;
  bool valid(const nlohmann::json& doc) const { return errors(doc).empty(); }

 private:
  nlohmann::json root_;

  void check(const nlohmann::json& schema, const nlohmann::json& doc, const std::string& path,
             std::vector<std::string>& out) const;
  const nlohmann::json& resolve(const nlohmann::json& schema) const;
};

/// The schemas shipped in schemas/, embedded at build time.
const nlohmann::json& config_schema();
const nlohmann::json& report_schema();

}  // namespace plap
