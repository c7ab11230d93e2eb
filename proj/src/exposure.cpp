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

#include "nerprobe/exposure.hpp"

#include <algorithm>
#include <cmath>

#include "nerprobe/scoring.hpp"

namespace nerprobe {

namespace {

void require_scored(const TokenizedSequence& seq, const char* what) {
  if (!seq.scored()) throw Error(ErrorKind::kUnscored, std::string(what) + ": sequence has not been scored");
}

}  // namespace

double word_exposure(const TokenizedSequence& seq) {
  require_scored(seq, "word_exposure");
  if (seq.word_spans.empty()) throw Error(ErrorKind::kPrecondition, "word_exposure: no words");
  double product = 1.0;
  for (const auto& span : seq.word_spans) {
    if (span.start < span.end) product *= seq.prob(span.end);
  }
  return product;
}

std::optional<double> transition_exposure(const TokenizedSequence& seq) {
  require_scored(seq, "transition_exposure");
  if (seq.transition_indices.empty()) return std::nullopt;
  double lowest = 1.0;
  for (std::size_t i : seq.transition_indices) lowest = std::min(lowest, seq.prob(i));
  return lowest;
}

double rank_exposure(std::size_t rank, std::size_t set_size) {
  if (set_size < 2) throw Error(ErrorKind::kPrecondition, "rank exposure needs at least two candidates");
  if (rank < 1 || rank > set_size) throw Error(ErrorKind::kPrecondition, "rank outside [1, |S|]");
  return std::log2(static_cast<double>(set_size)) - std::log2(static_cast<double>(rank));
}

std::size_t rank_of(double target_ppl, std::span<const double> all_ppls) {
  return 1 + static_cast<std::size_t>(
                 std::count_if(all_ppls.begin(), all_ppls.end(), [&](double p) { return p < target_ppl; }));
}

double carlini_exposure(const TypedMention& target, std::span<const TypedMention> candidates,
                        const LanguageModel& lm, std::string_view query_prefix) {
  if (candidates.size() < 2) throw Error(ErrorKind::kPrecondition, "carlini_exposure: fewer than two candidates");
  auto target_it = std::find_if(candidates.begin(), candidates.end(),
                                [&](const TypedMention& c) { return c.surface == target.surface; });
  if (target_it == candidates.end()) {
    throw Error(ErrorKind::kPrecondition, "carlini_exposure: target '" + target.surface + "' not in candidate set");
  }
  std::vector<double> ppls;
  ppls.reserve(candidates.size());
  for (const auto& c : candidates) {
    const std::string text = query_prefix.empty() ? c.surface : std::string(query_prefix) + " " + c.surface;
    ppls.push_back(perplexity(tokenize_and_score(lm, text, false), false).value);
  }
  const double target_ppl = ppls[static_cast<std::size_t>(target_it - candidates.begin())];
  return rank_exposure(rank_of(target_ppl, ppls), candidates.size());
}

const char* to_string(ExposureMetric m) { return m == ExposureMetric::kWord ? "word" : "transition"; }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kMemorized: return "memorized";
    case Verdict::kUnmemorized: return "unmemorized";
    case Verdict::kUnclassified: return "unclassified";
  }
  return "unclassified";
}

ExposureMetric parse_exposure_metric(std::string_view text) {
  const std::string key = ascii_lower(trim(text));
  if (key == "word") return ExposureMetric::kWord;
  if (key == "transition" || key == "trans") return ExposureMetric::kTransition;
  throw Error(ErrorKind::kConfig, "unknown exposure metric '" + std::string(text) + "'");
}

void ThresholdPolicy::validate() const {
  if (!(unmemorized_max < memorized_min)) {
    throw Error(ErrorKind::kConfig, "threshold policy: unmemorized_max (" + std::to_string(unmemorized_max) +
                                        ") must be below memorized_min (" + std::to_string(memorized_min) + ")");
  }
}

Verdict ThresholdPolicy::decide(std::optional<double> value) const {
  if (!value) return Verdict::kUnclassified;
  if (*value >= memorized_min - kThresholdSlack) return Verdict::kMemorized;
  if (*value <= unmemorized_max) return Verdict::kUnmemorized;
  return Verdict::kUnclassified;
}

ThresholdPolicy named_policy(std::string_view name) {
  if (name == "dbpedia-word") return {ExposureMetric::kWord, 1.0, 1e-06};
  if (name == "dbpedia-transition") return {ExposureMetric::kTransition, 0.01, 1e-06};
  if (name == "conll-word") return {ExposureMetric::kWord, 0.8, 1e-04};
  if (name == "mitmovie-transition") return {ExposureMetric::kTransition, 0.001, 1e-05};
  throw Error(ErrorKind::kConfig, "unknown threshold policy '" + std::string(name) + "'");
}

ExposureReport exposure_report(const TypedMention& mention, const ThresholdPolicy& policy,
                               const LanguageModel& lm) {
  const auto seq = tokenize_and_score(lm, mention.surface, /*prefix_with_unknown=*/true);
  ExposureReport r;
  r.mention = mention;
  r.word = word_exposure(seq);
  r.transition = transition_exposure(seq);
  r.verdict = policy.decide(policy.metric == ExposureMetric::kWord ? std::optional<double>(r.word) : r.transition);
  return r;
}

Partition partition(std::span<const TypedMention> mentions, const ThresholdPolicy& policy,
                    const LanguageModel& lm, std::size_t workers) {
  policy.validate();
  const auto outcomes = parallel_map<ExposureReport>(
      mentions.size(), workers, [&](std::size_t i) { return exposure_report(mentions[i], policy, lm); });
  Partition out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok()) {
      out.failures.push_back(ItemFailure{i, mentions[i].surface, outcomes[i].error, outcomes[i].error_kind});
      continue;
    }
    const auto& r = *outcomes[i].value;
    switch (r.verdict) {
      case Verdict::kMemorized: out.memorized.push_back(r); break;
      case Verdict::kUnmemorized: out.unmemorized.push_back(r); break;
      case Verdict::kUnclassified: out.unclassified.push_back(r); break;
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const ExposureReport& r) {
  nlohmann::ordered_json j = {{"mention", r.mention.surface},
                              {"type", to_string(r.mention.type)},
                              {"source", r.mention.source},
                              {"word_exposure", r.word}};
  j["transition_exposure"] = r.transition ? nlohmann::ordered_json(*r.transition) : nlohmann::ordered_json();
  j["carlini_exposure"] = r.carlini ? nlohmann::ordered_json(*r.carlini) : nlohmann::ordered_json();
  j["verdict"] = to_string(r.verdict);
  return j;
}

}  // namespace nerprobe
