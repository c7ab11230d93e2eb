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

// Few-shot extraction by prompting.
//
// A prompt is a list of demonstrations followed by the test sentence:
//
//   Sentence: I don't like to be stuck at home
//   product: none
//   Sentence: CVS sells their own epipen
//   product:
//
// The first generated token is picked from the calibrated distribution
// softmax(W p) with W = diag(p_cf)^-1, where p_cf is the first-token
// distribution for the same demonstrations with "N/A" as the test sentence.
// The rest of the answer is plain greedy decoding.

#ifndef NERPROBE_NER_FEW_SHOT_HPP_
#define NERPROBE_NER_FEW_SHOT_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nerprobe/datasets.hpp"
#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

inline constexpr std::string_view kNoneAnswer = "none";
inline constexpr std::string_view kContentFreeInput = "N/A";
inline constexpr std::size_t kDefaultMaxNewTokens = 15;
inline constexpr std::size_t kDefaultShots = 16;
inline constexpr std::size_t kDefaultPositiveShots = 9;
inline constexpr double kCalibrationFloor = 1e-12;

struct Shot {
  std::string sentence;
  std::string answer;  // "none" for negatives
  bool is_positive = false;

  friend bool operator==(const Shot&, const Shot&) = default;
};

Shot make_shot(std::string sentence, std::string answer);

// Draws n_positive sentences containing `type` and n_total - n_positive
// sentences without it, then shuffles them together. Positive answers are the
// first entity of the type in sentence order. Deterministic for a seed on
// every platform. Throws kInsufficientExamples naming the shortfall.
std::vector<Shot> sample_shots(std::span<const NerInstance> train, NeType type, std::size_t n_total,
                               std::size_t n_positive, std::uint64_t seed);

struct NerPrompt {
  std::vector<Shot> shots;
  std::string test_sentence;
  std::string type_label;
  std::string rendered;
};

NerPrompt render_prompt(std::span<const Shot> shots, std::string_view test_sentence, std::string_view type_label);

struct ParsedPrompt {
  std::vector<Shot> shots;
  std::string test_sentence;
};

// Inverse of render_prompt. Throws kParse on text that does not follow the
// line-pair layout.
ParsedPrompt parse_prompt(std::string_view rendered, std::string_view type_label);

// Elementwise-stable softmax.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shifted = logits.array() - logits.maxCoeff();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = shifted.array().exp();
  return e / e.sum();
}

struct CalibrationState {
  Eigen::VectorXd content_free_probs;  // floored at kCalibrationFloor, sums to 1
  Eigen::VectorXd weight;              // diagonal of W, reciprocals of the above

  static CalibrationState from_distribution(const Eigen::VectorXd& content_free);
};

// softmax(W raw). Throws kDimensionMismatch or kPrecondition (raw not summing
// to 1 within 1e-6).
Eigen::VectorXd calibrate_first_token(const Eigen::VectorXd& raw, const CalibrationState& state);

// Queries the demonstrations with "N/A" in the test slot and keeps the
// first-token distribution.
CalibrationState build_calibration(std::span<const Shot> shots, std::string_view type_label,
                                   const LanguageModel& lm);

// Runs the prompt and returns the trimmed answer text, never containing a
// newline. Passing no calibration state decodes greedily throughout.
std::string extract(const NerPrompt& prompt, const CalibrationState* state, const LanguageModel& lm,
                    std::size_t max_new_tokens = kDefaultMaxNewTokens);

struct ExtractionSettings {
  NeType type = NeType::kPerson;
  std::size_t n_total = kDefaultShots;
  std::size_t n_positive = kDefaultPositiveShots;
  std::size_t max_new_tokens = kDefaultMaxNewTokens;
  bool calibrate = true;
  std::size_t workers = 1;
};

struct ExtractionRun {
  std::vector<Shot> shots;
  CalibrationState calibration;
  std::vector<NerPrompt> prompts;                // one per test instance
  std::vector<ItemOutcome<std::string>> answers;  // one per test instance
};

// One (type, seed) extraction pass: sample shots from `train`, calibrate once,
// then extract an answer for every test instance.
ExtractionRun run_extraction(std::span<const NerInstance> train, std::span<const NerInstance> test,
                             const ExtractionSettings& settings, std::uint64_t seed, const LanguageModel& lm);

}  // namespace nerprobe

#endif  // NERPROBE_NER_FEW_SHOT_HPP_
