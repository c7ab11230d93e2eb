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

// Memorization signals for named entities.
//
// Both token-level metrics read probabilities from a sequence scored with the
// unknown-token prefix:
//
//   word exposure        product over words of 1 (single-token word) or the
//                        probability of the word's last token (split word)
//   transition exposure  minimum probability over the first tokens of words
//                        2..k; undefined for one-word mentions
//
// Rank exposure compares a target against a candidate set sharing one query
// prefix: log2 |S| - log2 rank, rank 1 being the lowest perplexity. It is a
// diagnostic only and never drives a verdict.

#ifndef NERPROBE_EXPOSURE_HPP_
#define NERPROBE_EXPOSURE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

double word_exposure(const TokenizedSequence& seq);
std::optional<double> transition_exposure(const TokenizedSequence& seq);

// Pure form of rank exposure.
double rank_exposure(std::size_t rank, std::size_t set_size);
// 1 + number of perplexities strictly below the target's, so ties share the
// lowest rank of their group.
std::size_t rank_of(double target_ppl, std::span<const double> all_ppls);

// Scores "<query_prefix> <candidate>" for every candidate (just the
// candidate when the prefix is empty) and returns the target's rank exposure.
double carlini_exposure(const TypedMention& target, std::span<const TypedMention> candidates,
                        const LanguageModel& lm, std::string_view query_prefix = "");

enum class ExposureMetric { kWord, kTransition };
enum class Verdict { kMemorized, kUnmemorized, kUnclassified };

const char* to_string(ExposureMetric m);
const char* to_string(Verdict v);
ExposureMetric parse_exposure_metric(std::string_view text);

struct ThresholdPolicy {
  ExposureMetric metric = ExposureMetric::kWord;
  double memorized_min = 1.0;
  double unmemorized_max = 0.0;

  // Throws kConfig unless unmemorized_max < memorized_min.
  void validate() const;
  // A missing metric value (transition exposure of a one-word mention) is
  // unclassified.
  Verdict decide(std::optional<double> value) const;
};

// Stock policies: "dbpedia-word", "dbpedia-transition", "conll-word",
// "mitmovie-transition". Throws kConfig for any other name.
ThresholdPolicy named_policy(std::string_view name);

// Slack on the memorized threshold so that a threshold of exactly 1 admits
// word exposures that are 1 up to rounding.
inline constexpr double kThresholdSlack = 1e-12;

struct ExposureReport {
  TypedMention mention;
  double word = 0.0;
  std::optional<double> transition;
  std::optional<double> carlini;
  Verdict verdict = Verdict::kUnclassified;
};

ExposureReport exposure_report(const TypedMention& mention, const ThresholdPolicy& policy,
                               const LanguageModel& lm);

struct Partition {
  std::vector<ExposureReport> memorized;
  std::vector<ExposureReport> unmemorized;
  std::vector<ExposureReport> unclassified;
  std::vector<ItemFailure> failures;
};

// Splits mentions by verdict, preserving input order within each list.
// Mentions whose scoring fails are recorded in `failures` and appear in no
// list.
Partition partition(std::span<const TypedMention> mentions, const ThresholdPolicy& policy,
                    const LanguageModel& lm, std::size_t workers = 1);

nlohmann::ordered_json to_json(const ExposureReport& r);

}  // namespace nerprobe

#endif  // NERPROBE_EXPOSURE_HPP_
