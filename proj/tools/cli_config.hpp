#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace gpcli {

// Thrown by CLI code paths; code doubles as the process exit code
// (2 usage, 3 validation, 4 numeric, 5 io).
struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Key-value run configuration. Files use INI syntax: [section] headers,
// key = value lines, blank lines, and # or ; comments. Keys are stored
// flattened as "section.key"; keys before any header have no prefix.
struct ConfigFile {
  std::map<std::string, std::string> kv;
  std::string path;

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
};

ConfigFile load_config(const std::string& path);

}  // namespace gpcli
