#pragma once

#include "randbc/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace randbc::cli {

/// Resolved run parameters: every known key with its effective value.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> values;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
    int threads = 1;

    const std::string& text(const std::string& key) const;
    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    Point point(const std::string& key) const;
    std::vector<int> int_list(const std::string& key) const;
    std::vector<double> number_list(const std::string& key) const;
};

const std::vector<std::string>& commands();
std::vector<std::string> valid_keys();

/// Parses a flat `key = value` document. `#` starts a comment; blank lines are
/// ignored; later duplicates win.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Merges defaults, the file's key/values and `overrides` (highest precedence),
/// then validates. Throws ConfigError naming the offending key.
RunConfig parse_config(std::string_view file_text, const std::map<std::string, std::string>& overrides);

/// Config recorded in a manifest.json, with `overrides` applied on top.
RunConfig config_from_manifest(const std::filesystem::path& manifest,
                               const std::map<std::string, std::string>& overrides);

struct ExecuteResult {
    int status = 0;  // 0 ok, 1 domain error, 2 config error
    std::vector<std::filesystem::path> files;
    std::string message;
};

/// Runs the command, writing CSV artifacts and manifest.json into out_dir.
/// On failure, files written by this run are removed.
ExecuteResult execute(const RunConfig& cfg);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

} // namespace randbc::cli
