// Copyright 2026 The nerprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment drivers behind the command-line subcommands.
//
// Each driver writes its result files and a manifest.json into the run's
// output directory. Result files depend only on the config and the backend;
// the manifest adds timestamps. Per-item failures are logged in the manifest
// and never stop a run.

#ifndef NERPROBE_COMMANDS_HPP_
#define NERPROBE_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerprobe/config.hpp"

namespace nerprobe {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitBackendUnreachable = 2,
  kExitTooManyFailures = 3,
};

// Share of failed items above which a run exits with kExitTooManyFailures.
inline constexpr double kFailureTolerance = 0.10;

struct CommandResult {
  int exit_code = kExitOk;
  std::size_t items = 0;
  std::vector<ItemFailure> failures;
  std::vector<std::string> outputs;  // file names inside output_dir
  nlohmann::ordered_json summary;
  std::string summary_text;
};

CommandResult cmd_net(const RunConfig& config, const LanguageModel& lm);
CommandResult cmd_exposure(const RunConfig& config, const LanguageModel& lm);
CommandResult cmd_profile(const RunConfig& config, const LanguageModel& lm);
CommandResult cmd_ner(const RunConfig& config, const LanguageModel& lm);

// Dispatches on config.experiment and writes the manifest.
CommandResult run_experiment(const RunConfig& config, const LanguageModel& lm);

// Whole command: load config, build the backend, run, print the summary.
// Returns the process exit code.
int run_cli(Experiment experiment, const std::filesystem::path& config_path, const ConfigOverrides& overrides,
            std::ostream& out, std::ostream& err);

// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Mentions named by the config: listed files first, then corpus mentions,
// restricted to config.types when that is non-empty.
std::vector<TypedMention> load_configured_mentions(const RunConfig& config);

}  // namespace nerprobe

#endif  // NERPROBE_COMMANDS_HPP_
