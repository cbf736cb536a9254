#include "json_util.h"

#include <cmath>
#include <fstream>

#include "moralframe/error.h"

namespace moralframe::json_util {

nlohmann::json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

void write_file(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

void check_schema(const nlohmann::json& doc, const std::string& kind,
                  int version) {
  if (!doc.is_object()) throw DataError(kind + ": document is not an object");
  if (!doc.contains("kind") || doc["kind"] != kind) {
    throw DataError("expected a '" + kind + "' document");
  }
  if (!doc.contains("schema_version") ||
      !doc["schema_version"].is_number_integer()) {
    throw DataError(kind + ": missing integer 'schema_version'");
  }
  int found = doc["schema_version"].get<int>();
  if (found != version) {
    throw SchemaVersionError(kind + ": schema version " +
                                 std::to_string(found) +
                                 " is not supported (this build reads " +
                                 std::to_string(version) + ")",
                             found, version);
  }
}

const nlohmann::json& get_array(const nlohmann::json& obj,
                                const std::string& key,
                                const std::string& what) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_array()) {
    throw DataError(what + ": '" + key + "' must be an array");
  }
  return obj.at(key);
}

std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& what) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
    throw DataError(what + ": '" + key + "' must be a string");
  }
  return obj.at(key).get<std::string>();
}

std::size_t get_size(const nlohmann::json& obj, const std::string& key,
                     const std::string& what) {
  if (!obj.is_object() || !obj.contains(key) ||
      !obj.at(key).is_number_unsigned()) {
    throw DataError(what + ": '" + key + "' must be a nonnegative integer");
  }
  return obj.at(key).get<std::size_t>();
}

double as_finite(const nlohmann::json& value, const std::string& what) {
  if (!value.is_number()) throw DataError(what + ": expected a number");
  double x = value.get<double>();
  if (!std::isfinite(x)) throw DataError(what + ": value is not finite");
  return x;
}

double get_double(const nlohmann::json& obj, const std::string& key,
                  const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(what + ": missing '" + key + "'");
  }
  return as_finite(obj.at(key), what + "." + key);
}

std::vector<double> get_doubles(const nlohmann::json& obj,
                                const std::string& key,
                                const std::string& what) {
  std::vector<double> out;
  for (const auto& v : get_array(obj, key, what)) {
    out.push_back(as_finite(v, what + "." + key));
  }
  return out;
}

std::vector<std::string> get_strings(const nlohmann::json& obj,
                                     const std::string& key,
                                     const std::string& what) {
  std::vector<std::string> out;
  for (const auto& v : get_array(obj, key, what)) {
    if (!v.is_string()) throw DataError(what + ": '" + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace moralframe::json_util
