#include "plap/schema.hpp"

#include <cmath>

#include "plap/error.hpp"

namespace plap {
namespace {

using nlohmann::json;

bool has_type(const json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  if (type == "number") return doc.is_number();
  if (type == "integer") {
    if (doc.is_number_integer()) return true;
    if (!doc.is_number_float()) return false;
    const double v = doc.get<double>();
    return std::isfinite(v) && v == std::floor(v);
  }
  return false;
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }

}  // namespace

SchemaValidator::SchemaValidator(json schema) : root_(std::move(schema)) {}

std::vector<std::string> SchemaValidator::errors(const json& doc) const {
  std::vector<std::string> out;
  check(root_, doc, "", out);
  return out;
}

const json& SchemaValidator::resolve(const json& schema) const {
  const std::string ref = schema.at("$ref").get<std::string>();
  const std::string prefix = "#/$defs/";
  if (ref.rfind(prefix, 0) != 0) throw ValidationError("unsupported $ref " + ref);
  return root_.at("$defs").at(ref.substr(prefix.size()));
}

void SchemaValidator::check(const json& schema, const json& doc, const std::string& path,
                            std::vector<std::string>& out) const {
  const std::string where = path.empty() ? "/" : path;
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) out.push_back(where + ": not allowed");
    return;
  }
  if (schema.contains("$ref")) {
    check(resolve(schema), doc, path, out);
    return;
  }
  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = has_type(doc, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || has_type(doc, t.get<std::string>());
    }
    if (!ok) {
      out.push_back(where + ": expected type " + it->dump());
      return;
    }
  }
  if (auto it = schema.find("const"); it != schema.end() && doc != *it)
    out.push_back(where + ": must equal " + it->dump());
  if (auto it = schema.find("enum"); it != schema.end()) {
    bool found = false;
    for (const auto& v : *it) found = found || doc == v;
    if (!found) out.push_back(where + ": must be one of " + it->dump());
  }
  if (doc.is_number()) {
    const double v = doc.get<double>();
    if (auto it = schema.find("minimum"); it != schema.end() && !(v >= it->get<double>()))
      out.push_back(where + ": must be >= " + it->dump());
    if (auto it = schema.find("maximum"); it != schema.end() && !(v <= it->get<double>()))
      out.push_back(where + ": must be <= " + it->dump());
    if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && !(v > it->get<double>()))
      out.push_back(where + ": must be > " + it->dump());
    if (auto it = schema.find("exclusiveMaximum"); it != schema.end() && !(v < it->get<double>()))
      out.push_back(where + ": must be < " + it->dump());
  }
  if (doc.is_string()) {
    if (auto it = schema.find("minLength");
        it != schema.end() && doc.get<std::string>().size() < it->get<std::size_t>())
      out.push_back(where + ": string too short");
  }
  if (doc.is_array()) {
    if (auto it = schema.find("minItems"); it != schema.end() && doc.size() < it->get<std::size_t>())
      out.push_back(where + ": needs at least " + it->dump() + " items");
    if (auto it = schema.find("maxItems"); it != schema.end() && doc.size() > it->get<std::size_t>())
      out.push_back(where + ": allows at most " + it->dump() + " items");
    if (auto it = schema.find("items"); it != schema.end())
      for (std::size_t i = 0; i < doc.size(); ++i)
        check(*it, doc[i], child(path, std::to_string(i)), out);
  }
  if (doc.is_object()) {
    if (auto it = schema.find("required"); it != schema.end())
      for (const auto& key : *it)
        if (!doc.contains(key.get<std::string>()))
          out.push_back(where + ": missing required key \"" + key.get<std::string>() + "\"");
    const auto props = schema.find("properties");
    const auto additional = schema.find("additionalProperties");
    for (const auto& [key, value] : doc.items()) {
      if (props != schema.end() && props->contains(key)) {
        check(props->at(key), value, child(path, key), out);
      } else if (additional != schema.end()) {
        if (additional->is_boolean() && !additional->get<bool>())
          out.push_back(child(path, key) + ": unknown key");
        else if (additional->is_object())
          check(*additional, value, child(path, key), out);
      }
    }
  }
  if (auto it = schema.find("oneOf"); it != schema.end()) {
    int matches = 0;
    std::vector<std::string> best;
    for (const auto& sub : *it) {
      std::vector<std::string> e;
      check(sub, doc, path, e);
      if (e.empty()) {
        ++matches;
      } else if (best.empty() || e.size() < best.size()) {
        best = std::move(e);
      }
    }
    if (matches == 0) {
      out.push_back(where + ": matches none of the alternatives");
      out.insert(out.end(), best.begin(), best.end());
    } else if (matches > 1) {
      out.push_back(where + ": matches more than one alternative");
    }
  }
  if (auto it = schema.find("anyOf"); it != schema.end()) {
    bool any = false;
    for (const auto& sub : *it) {
      std::vector<std::string> e;
      check(sub, doc, path, e);
      any = any || e.empty();
    }
    if (!any) out.push_back(where + ": matches none of the alternatives");
  }
}

namespace {
#include "schemas_embedded.inc"
}  // namespace

const json& config_schema() {
  static const json schema = json::parse(kConfigSchema);
  return schema;
}

const json& report_schema() {
  static const json schema = json::parse(kReportSchema);
  return schema;
}

}  // namespace plap
