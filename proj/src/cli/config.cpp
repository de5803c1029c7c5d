#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "bsup/cli.hpp"
#include "bsup/errors.hpp"

namespace bsup::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigEntries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  ConfigEntries entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    for (char& c : key)
      if (c == '_') c = '-';
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second) throw ConfigError(path.string() + ": key '" + key + "' given twice");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

void apply_config(CLI::App& command, const ConfigEntries& entries) {
  for (const auto& [key, value] : entries) {
    CLI::Option* opt = key == "config" || key == "help" ? nullptr : command.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key '" + key + "' for command '" + command.get_name() + "'");
    if (opt->count() > 0) continue;  // the command line wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const Error*>(&e)) return kExitUsage;
  if (dynamic_cast<const CLI::Error*>(&e)) return kExitUsage;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitUsage;
  return 1;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bsup::cli
