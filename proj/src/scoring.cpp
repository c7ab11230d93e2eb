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

#include "nerprobe/scoring.hpp"

#include <map>

namespace nerprobe {

PerplexityResult perplexity(const TokenizedSequence& seq, bool skip_prefix) {
  if (!seq.scored()) throw Error(ErrorKind::kUnscored, "perplexity: sequence has not been scored");
  const std::size_t first = skip_prefix ? 1 : 0;
  if (seq.logprobs.size() <= first) {
    throw Error(ErrorKind::kEmptyInput, "perplexity: no scored positions after skipping the prefix");
  }
  const auto n = static_cast<Eigen::Index>(seq.logprobs.size() - first);
  const Eigen::Map<const Eigen::VectorXd> lp(seq.logprobs.data() + first, n);
  PerplexityResult out;
  out.log_value = log_perplexity(lp);
  out.value = std::exp(out.log_value);
  out.token_count = static_cast<std::size_t>(n);
  return out;
}

std::vector<PerplexityBucketStats> bucket_by_token_count(std::span<const TokenLogPpl> samples) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto& s : samples) groups[s.tokens].push_back(s.log_ppl);
  std::vector<PerplexityBucketStats> out;
  for (auto& [tokens, values] : groups) {
    // Sorting makes the floating-point sums independent of input order.
    std::sort(values.begin(), values.end());
    const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    const double mean = v.mean();
    const double var = (v.array() - mean).square().mean();
    out.push_back(PerplexityBucketStats{tokens, mean, values.size() == 1 ? 0.0 : std::sqrt(var),
                                        values.size()});
  }
  return out;
}

PerplexityProfile perplexity_profile(std::span<const TypedMention> mentions, const LanguageModel& lm,
                                     std::size_t workers) {
  if (mentions.empty()) throw Error(ErrorKind::kEmptyInput, "perplexity_profile: empty mention list");
  const auto outcomes = parallel_map<TokenLogPpl>(mentions.size(), workers, [&](std::size_t i) {
    const auto seq = tokenize_and_score(lm, mentions[i].surface, /*prefix_with_unknown=*/true);
    const auto ppl = perplexity(seq, /*skip_prefix=*/true);
    return TokenLogPpl{ppl.token_count, ppl.log_value};
  });
  PerplexityProfile profile;
  std::vector<TokenLogPpl> samples;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].ok()) {
      samples.push_back(*outcomes[i].value);
    } else {
      profile.failures.push_back(
          ItemFailure{i, mentions[i].surface, outcomes[i].error, outcomes[i].error_kind});
    }
  }
  profile.buckets = bucket_by_token_count(samples);
  return profile;
}

nlohmann::ordered_json to_json(const PerplexityBucketStats& b) {
  return {{"tokens_per_ne", b.tokens_per_ne},
          {"mean_log_ppl", b.mean_log_ppl},
          {"std_log_ppl", b.std_log_ppl},
          {"count", b.count}};
}

nlohmann::ordered_json profile_to_json(std::span<const PerplexityBucketStats> buckets) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& b : buckets) out.push_back(to_json(b));
  return out;
}

}  // namespace nerprobe
