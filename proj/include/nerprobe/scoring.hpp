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

#ifndef NERPROBE_SCORING_HPP_
#define NERPROBE_SCORING_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

// Mean negative log-probability of a vector of natural-log conditionals.
template <typename Derived>
typename Derived::Scalar log_perplexity(const Eigen::MatrixBase<Derived>& logprobs) {
  return -logprobs.mean();
}

struct PerplexityResult {
  double value = 1.0;      // exp(log_value), > 0
  double log_value = 0.0;  // -(1/n) * sum of logprobs
  std::size_t token_count = 0;
};

// Perplexity of a scored sequence. With `skip_prefix`, position 0 (the
// unknown-token prefix) is left out of both the sum and the count; it still
// conditions the remaining positions through the scores themselves.
PerplexityResult perplexity(const TokenizedSequence& seq, bool skip_prefix);

struct PerplexityBucketStats {
  std::size_t tokens_per_ne = 0;
  double mean_log_ppl = 0.0;
  double std_log_ppl = 0.0;  // population standard deviation
  std::size_t count = 0;
};

struct TokenLogPpl {
  std::size_t tokens = 0;
  double log_ppl = 0.0;
};

// Groups samples by token count, ascending.
std::vector<PerplexityBucketStats> bucket_by_token_count(std::span<const TokenLogPpl> samples);

struct PerplexityProfile {
  std::vector<PerplexityBucketStats> buckets;
  std::vector<ItemFailure> failures;
};

// Scores every mention with the unknown-token prefix and buckets the log
// perplexities by the number of mention tokens (prefix excluded).
PerplexityProfile perplexity_profile(std::span<const TypedMention> mentions, const LanguageModel& lm,
                                     std::size_t workers = 1);

nlohmann::ordered_json to_json(const PerplexityBucketStats& b);
nlohmann::ordered_json profile_to_json(std::span<const PerplexityBucketStats> buckets);

}  // namespace nerprobe

#endif  // NERPROBE_SCORING_HPP_
