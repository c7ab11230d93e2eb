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

// Run configuration.
//
// One JSON file describes a run; command-line flags overwrite keys of that
// document before it is validated, so the effective document is the single
// record of what ran. Relative paths resolve against the config file's
// directory. Recognised keys:
//
//   backend          {"reference_table": path} | {"replay_script": path} |
//                    {"url": "http://host:port", "timeout_ms", "max_attempts"}
//   seeds            non-empty list of unsigned integers
//   output_dir       path
//   workers          worker threads per batch (default 1)
//   types            canonical type names
//   mentions         [{"path", "type", "drop_one_word", "source"}]
//   datasets         {"train", "dev", "test", "merge_map", "bio_mode"}
//   keyword_sets     {"person": ["person", "character"], ...}
//   aggregation      "min" | "mean"
//   groups           subset of ["all", "memorized", "unmemorized"]
//   policy           stock policy name or {"metric", "memorized_min", "unmemorized_max"}
//   carlini          {"enabled", "query_prefix"}
//   ner              {"shots", "positive_shots", "max_new_tokens", "calibrate",
//                     "modes", "resample_ratio", "seen_pool", "word_list",
//                     "dump_prompts"}

#ifndef NERPROBE_CONFIG_HPP_
#define NERPROBE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerprobe/datasets.hpp"
#include "nerprobe/evaluation.hpp"
#include "nerprobe/exposure.hpp"
#include "nerprobe/lm_backend.hpp"
#include "nerprobe/net_zero_shot.hpp"

namespace nerprobe {

enum class Experiment { kNet, kExposure, kProfile, kNer };

const char* to_string(Experiment e);

struct BackendSpec {
  enum class Kind { kReferenceTable, kReplayScript, kRemote };
  Kind kind = Kind::kReferenceTable;
  std::string location;  // path or URL
  int timeout_ms = 30000;
  int max_attempts = 3;
};

struct MentionSource {
  std::filesystem::path path;
  NeType type = NeType::kPerson;
  bool drop_one_word = false;
  std::string source;
};

struct DatasetPaths {
  std::optional<std::filesystem::path> train, dev, test, merge_map;
  BioMode bio_mode = BioMode::kStrict;
};

struct NerSettings {
  std::size_t shots = 16;
  std::size_t positive_shots = 9;
  std::size_t max_new_tokens = 15;
  bool calibrate = true;
  std::vector<SubstitutionMode> modes{SubstitutionMode::kAsIs};
  double resample_ratio = 2.0;
  bool resample = true;
  std::optional<std::filesystem::path> seen_pool;
  std::optional<std::filesystem::path> word_list;
  bool dump_prompts = false;
};

struct RunConfig {
  Experiment experiment = Experiment::kNet;
  BackendSpec backend;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  std::size_t workers = 1;
  std::vector<NeType> types;
  std::vector<MentionSource> mentions;
  DatasetPaths datasets;
  std::vector<TypeKeywordSet> keyword_sets;
  Aggregation aggregation = Aggregation::kMin;
  std::vector<std::string> groups{"all"};
  std::optional<ThresholdPolicy> policy;
  bool carlini = false;
  std::string carlini_query_prefix;
  NerSettings ner;

  nlohmann::json document;  // effective config after overrides
  std::string hash;         // of `document`, independent of key order
};

// Flag values that replace config keys when present.
struct ConfigOverrides {
  std::optional<std::string> backend_url;
  std::vector<std::uint64_t> seeds;
  bool dump_prompts = false;
  std::optional<std::string> groups;  // comma separated
  std::optional<std::string> mode;
  std::optional<std::string> out;
};

void apply_overrides(nlohmann::json& doc, const ConfigOverrides& overrides);

// Validates and resolves. Throws Error(kConfig) on any problem.
RunConfig parse_run_config(nlohmann::json doc, Experiment experiment, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path, Experiment experiment,
                          const ConfigOverrides& overrides = {});

// 64-bit FNV-1a over the compact dump of the key-sorted document, as 16 hex
// digits.
std::string config_hash(const nlohmann::json& doc);

std::unique_ptr<LanguageModel> make_backend(const BackendSpec& spec);

}  // namespace nerprobe

#endif  // NERPROBE_CONFIG_HPP_
