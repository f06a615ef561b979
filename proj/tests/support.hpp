#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrcc/netmodel.hpp"

namespace nrcc::test {

inline std::filesystem::path data_dir() { return NRCC_TEST_DATA; }
inline std::filesystem::path toy6_dir() { return data_dir() / "toy6"; }
inline std::filesystem::path schema_path() { return std::filesystem::path(NRCC_SCHEMA_DIR) / "menu.schema.json"; }

inline const Case& toy6() {
  static const Case c = load_case_dir(toy6_dir());
  return c;
}

inline bool close(double a, double b, double rel = 1e-6) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("nrcc_test_" + tag + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Validator for the JSON-schema keywords used by the bundled schema: type,
/// enum, minimum, required, properties, additionalProperties, items, oneOf,
/// anyOf and local $ref.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

  std::vector<std::string> validate(const nlohmann::json& doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "$", errors);
    return errors;
  }

 private:
  const nlohmann::json& resolve(const nlohmann::json& s) const {
    if (!s.is_object() || !s.contains("$ref")) return s;
    const auto ref = s.at("$ref").get<std::string>();
    if (ref.rfind("#/", 0) != 0) throw std::runtime_error("unsupported $ref " + ref);
    return resolve(root_.at(nlohmann::json::json_pointer(ref.substr(1))));
  }

  static bool type_matches(const std::string& t, const nlohmann::json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (t == "number") return v.is_number();
    return false;
  }

  void check(const nlohmann::json& schema_in, const nlohmann::json& v, const std::string& path,
             std::vector<std::string>& errors) const {
    const auto& s = resolve(schema_in);
    if (s.contains("type")) {
      const auto& t = s.at("type");
      bool ok = false;
      if (t.is_string()) ok = type_matches(t.get<std::string>(), v);
      else
        for (const auto& x : t) ok = ok || type_matches(x.get<std::string>(), v);
      if (!ok) {
        errors.push_back(path + ": type mismatch, expected " + t.dump());
        return;
      }
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == v;
      if (!found) errors.push_back(path + ": value " + v.dump() + " not in enum");
    }
    if (s.contains("minimum") && v.is_number() && v.get<double>() < s.at("minimum").get<double>())
      errors.push_back(path + ": below minimum");
    for (const char* key : {"oneOf", "anyOf"}) {
      if (!s.contains(key)) continue;
      int matches = 0;
      for (const auto& alt : s.at(key)) {
        std::vector<std::string> sub;
        check(alt, v, path, sub);
        matches += sub.empty();
      }
      const bool ok = std::string(key) == "oneOf" ? matches == 1 : matches >= 1;
      if (!ok) errors.push_back(path + ": " + key + " matched " + std::to_string(matches) + " alternatives");
    }
    if (v.is_object()) {
      if (s.contains("required"))
        for (const auto& r : s.at("required"))
          if (!v.contains(r.get<std::string>())) errors.push_back(path + ": missing " + r.get<std::string>());
      const auto props = s.value("properties", nlohmann::json::object());
      for (const auto& [k, child] : v.items()) {
        if (props.contains(k)) check(props.at(k), child, path + "." + k, errors);
        else if (s.contains("additionalProperties")) {
          const auto& ap = s.at("additionalProperties");
          if (ap.is_boolean()) {
            if (!ap.get<bool>()) errors.push_back(path + ": unexpected key " + k);
          } else {
            check(ap, child, path + "." + k, errors);
          }
        }
      }
    }
    if (v.is_array() && s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(s.at("items"), v[i], path + "[" + std::to_string(i) + "]", errors);
  }

  nlohmann::json root_;
};

}  // namespace nrcc::test
