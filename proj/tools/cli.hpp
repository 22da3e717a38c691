#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sobcomp::cli {

struct ParamSpec {
  std::string name;
  nlohmann::json default_value;  // also fixes the type; arrays take repeated flags
  std::string help;
};

struct RunContext {
  std::string command;
  nlohmann::json params;  // resolved: defaults < --config < flags
  std::filesystem::path out;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<std::string> outputs;  // file names written, relative to `out`

  std::filesystem::path file(const std::string& name);
  void write_sidecar(const std::string& name, const nlohmann::json& body);
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<ParamSpec> params;
  std::function<void(RunContext&)> run;
};

// The single table of subcommands and their defaults.
const std::vector<CommandSpec>& commands();

// Entry point: 0 success, 1 validation error, 2 numerical error.
int run(int argc, char** argv);

}  // namespace sobcomp::cli
