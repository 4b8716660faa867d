#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kraichnan::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInvariantFailure = 1, kConfigError = 2, kComputeError = 3 };

const json& schema();

// structural errors of an instance against the shipped schema (subset of draft 2020-12)
std::vector<std::string> schema_errors(const json& instance, const json& schema_node, const std::string& where = "");

json load_config(const std::filesystem::path& path);

// parameter ranges first (their messages name the violated interval), then the schema,
// then defaults filled in; throws ConfigError
json resolve(const json& config);

struct RunResult {
  int exit_code = kOk;
  json summary;
  std::vector<std::string> files;
};

// runs a resolved config and writes CSVs, summary.json and manifest.json into out_dir
RunResult run_experiment(const json& resolved, const std::filesystem::path& out_dir);

int run_command(const std::filesystem::path& config_path, const std::optional<std::string>& output_dir,
                std::ostream& out, std::ostream& err);
int validate_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

}  // namespace kraichnan::cli
