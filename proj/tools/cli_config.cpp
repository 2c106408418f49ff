#include "cli_config.hpp"

#include <cstdlib>
#include <fstream>

namespace gpcli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const ConfigFile& cfg, const std::string& key,
                            const std::string& raw, const char* want) {
  throw CliError(2, cfg.path + ": key '" + key + "': '" + raw + "' is not " + want);
}

}  // namespace

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  char* end = nullptr;
  double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') bad_value(*this, key, it->second, "a number");
  return v;
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  char* end = nullptr;
  long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    bad_value(*this, key, it->second, "an integer");
  return static_cast<int>(v);
}

uint64_t ConfigFile::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    bad_value(*this, key, it->second, "an unsigned integer");
  return static_cast<uint64_t>(v);
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(5, "cannot open config file '" + path + "'");
  ConfigFile cfg;
  cfg.path = path;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw CliError(2, path + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(2, path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw CliError(2, path + ":" + std::to_string(lineno) + ": empty key");
    cfg.kv[section.empty() ? key : section + "." + key] = val;
  }
  return cfg;
}

}  // namespace gpcli
