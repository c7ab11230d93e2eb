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

// Scoring of extracted answers and test-set manipulation.
//
// A prediction for a sentence with gold answers G is matched in this order:
//   1. case-insensitive exact match with some g in G            -> TP
//   2. lev(lower(p), lower(g)) / |g| < 0.2 for some g (code points) -> TP
//   3. no match: "none" or empty                                 -> FN
//                anything else                                   -> FP
// For a sentence with no gold answer:
//   "none", or no whitespace word shared with the sentence       -> TN
//   anything else                                                -> FP

#ifndef NERPROBE_EVALUATION_HPP_
#define NERPROBE_EVALUATION_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "nerprobe/datasets.hpp"

namespace nerprobe {

inline constexpr double kLevenshteinThreshold = 0.2;

enum class MatchVerdict { kTruePositive, kFalsePositive, kFalseNegative, kTrueNegative };
enum class MatchRule { kExact, kLevenshtein, kNoneToken, kGarbageAsNone, kNoMatch };

const char* to_string(MatchVerdict v);
const char* to_string(MatchRule r);

struct MatchResult {
  MatchVerdict verdict = MatchVerdict::kFalsePositive;
  MatchRule rule = MatchRule::kNoMatch;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Edit distance over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

MatchResult match(std::string_view prediction, std::span<const std::string> gold, std::string_view sentence);

struct EvalRecord {
  std::string sentence_id;
  std::vector<std::string> gold;
  std::string prediction;
  MatchResult result;
};

EvalRecord evaluate_prediction(const NerInstance& instance, NeType type, std::string_view prediction);

struct PrfScores {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators give 0.
PrfScores f1(std::span<const EvalRecord> records);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;

  // "mean±std" with two decimals.
  std::string format() const;
};

Aggregate aggregate(std::span<const double> values);

enum class SubstitutionMode { kAsIs, kSeen, kUnseen };

const char* to_string(SubstitutionMode m);
SubstitutionMode parse_substitution_mode(std::string_view text);

struct SubstitutionSpec {
  SubstitutionMode mode = SubstitutionMode::kAsIs;
  // kSeen: replacement pool per type.
  std::map<NeType, std::vector<std::string>> seen_pool;
  // kUnseen: candidate strings found here are rejected.
  const std::unordered_set<std::string>* dictionary = nullptr;
};

inline constexpr std::size_t kUnseenLength = 8;

// Eight lowercase letters not in the dictionary.
std::string random_unseen_string(SeededRng& rng, const std::unordered_set<std::string>& dictionary);

// Replaces every gold entity whose type is in `types` (all types when empty)
// and rewrites offsets. Text outside replaced spans is kept byte for byte.
// Deterministic for a seed. Throws kConfig when a needed pool is empty.
std::vector<NerInstance> substitute(std::span<const NerInstance> instances, const SubstitutionSpec& spec,
                                    std::uint64_t seed, std::span<const NeType> types = {});

// Keeps every sentence with a `type` entity plus ceil(positives / ratio)
// random others, in the original order.
std::vector<NerInstance> resample_test(std::span<const NerInstance> instances, NeType type, double ratio,
                                       std::uint64_t seed);

// Lines of "<type>\t<surface>"; '#' lines are comments.
std::map<NeType, std::vector<std::string>> parse_seen_pool(std::string_view text);
std::map<NeType, std::vector<std::string>> load_seen_pool(const std::filesystem::path& path);

// One lowercase word per line; '#' lines are comments.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const EvalRecord& r);
nlohmann::ordered_json to_json(const PrfScores& s);

}  // namespace nerprobe

#endif  // NERPROBE_EVALUATION_HPP_
