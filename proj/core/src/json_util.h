#ifndef MORALFRAME_SRC_JSON_UTIL_H_
#define MORALFRAME_SRC_JSON_UTIL_H_

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace moralframe::json_util {

nlohmann::json read_file(const std::string& path);
void write_file(const nlohmann::json& doc, const std::string& path);

// Throws DataError unless doc["kind"] == kind, and SchemaVersionError unless
// doc["schema_version"] == version.
void check_schema(const nlohmann::json& doc, const std::string& kind,
                  int version);

const nlohmann::json& get_array(const nlohmann::json& obj,
                                const std::string& key,
                                const std::string& what);
std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& what);
std::size_t get_size(const nlohmann::json& obj, const std::string& key,
                     const std::string& what);
double get_double(const nlohmann::json& obj, const std::string& key,
                  const std::string& what);
std::vector<double> get_doubles(const nlohmann::json& obj,
                                const std::string& key,
                                const std::string& what);
std::vector<std::string> get_strings(const nlohmann::json& obj,
                                     const std::string& key,
                                     const std::string& what);
double as_finite(const nlohmann::json& value, const std::string& what);

}  // namespace moralframe::json_util

#endif  // MORALFRAME_SRC_JSON_UTIL_H_
