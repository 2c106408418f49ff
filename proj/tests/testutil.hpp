#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace testutil {

inline double rel_err(double got, double want) {
  double denom = std::max(std::abs(want), 1e-12);
  return std::abs(got - want) / denom;
}

// Runs a command, captures combined stdout+stderr and the exit code.
struct RunResult {
  int exit_code = -1;
  std::string output;
};

inline RunResult run_command(const std::string& cmd) {
  RunResult r;
  std::string full = cmd + " 2>&1";
  FILE* p = popen(full.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  int st = pclose(p);
  r.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& name = "") const {
    return name.empty() ? path.string() : (path / name).string();
  }
};

// Minimal JSON-schema checker covering the subset report.schema.json uses:
// type, properties, required, additionalProperties (bool or schema), enum,
// minimum. Returns an empty string when the instance conforms, else the
// first violation.
inline std::string schema_check(const nlohmann::json& schema, const nlohmann::json& value,
                                const std::string& where = "$") {
  using nlohmann::json;
  if (schema.contains("type")) {
    const std::string t = schema["type"].get<std::string>();
    bool ok = (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
              (t == "string" && value.is_string()) || (t == "boolean" && value.is_boolean()) ||
              (t == "integer" && value.is_number_integer()) ||
              (t == "number" && value.is_number());
    if (!ok) return where + ": expected type " + t;
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || e == value;
    if (!ok) return where + ": not in enum";
  }
  if (schema.contains("minimum") && value.is_number() &&
      value.get<double>() < schema["minimum"].get<double>())
    return where + ": below minimum";
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& k : schema["required"])
        if (!value.contains(k.get<std::string>()))
          return where + ": missing required key " + k.get<std::string>();
    const json props =
        schema.contains("properties") ? schema["properties"] : json::object();
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (props.contains(it.key())) {
        std::string err = schema_check(props[it.key()], it.value(), where + "." + it.key());
        if (!err.empty()) return err;
      } else if (schema.contains("additionalProperties")) {
        const json& ap = schema["additionalProperties"];
        if (ap.is_boolean() && !ap.get<bool>())
          return where + ": unexpected key " + it.key();
        if (ap.is_object()) {
          std::string err = schema_check(ap, it.value(), where + "." + it.key());
          if (!err.empty()) return err;
        }
      }
    }
  }
  return "";
}

}  // namespace testutil
