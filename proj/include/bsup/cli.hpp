#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace CLI {
class App;
}

namespace bsup::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Runs the `bsup` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Plain-text `key = value` lines; blank lines and lines starting with '#'
/// are ignored. Keys use the long flag spelling without dashes ('_' is
/// accepted for '-'). Throws ConfigError on malformed or repeated keys.
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Feeds file values to the options of `command` that were not given on the
/// command line. Throws ConfigError for keys that name no option.
void apply_config(CLI::App& command, const ConfigEntries& entries);

/// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Writes `content` through a temporary sibling renamed into place.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bsup::cli
