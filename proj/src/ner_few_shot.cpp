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

#include "nerprobe/ner_few_shot.hpp"

#include <algorithm>
#include <cmath>

namespace nerprobe {

namespace {

constexpr std::string_view kSentenceLabel = "Sentence: ";

std::string cut_at_newline(std::string_view text) {
  const auto nl = text.find('\n');
  return std::string(trim(nl == std::string_view::npos ? text : text.substr(0, nl)));
}

Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return best;
}

}  // namespace

Shot make_shot(std::string sentence, std::string answer) {
  const bool positive = ascii_lower(answer) != kNoneAnswer;
  return Shot{std::move(sentence), std::move(answer), positive};
}

std::vector<Shot> sample_shots(std::span<const NerInstance> train, NeType type, std::size_t n_total,
                               std::size_t n_positive, std::uint64_t seed) {
  if (n_positive > n_total) throw Error(ErrorKind::kPrecondition, "more positive shots than shots");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < train.size(); ++i) (train[i].has(type) ? positives : negatives).push_back(i);
  const std::size_t n_negative = n_total - n_positive;
  if (positives.size() < n_positive || negatives.size() < n_negative) {
    std::string msg = "cannot draw " + std::to_string(n_total) + " shots for " + std::string(to_string(type)) + ":";
    if (positives.size() < n_positive) {
      msg += " short of " + std::to_string(n_positive - positives.size()) + " positive sentence(s)";
    }
    if (negatives.size() < n_negative) {
      msg += " short of " + std::to_string(n_negative - negatives.size()) + " negative sentence(s)";
    }
    throw Error(ErrorKind::kInsufficientExamples, msg);
  }

  SeededRng rng(derive_seed(seed, "shots"));
  std::vector<Shot> shots;
  shots.reserve(n_total);
  for (std::size_t k : rng.sample_indices(positives.size(), n_positive)) {
    const auto& inst = train[positives[k]];
    shots.push_back(Shot{inst.text, inst.answers(type).front(), true});
  }
  for (std::size_t k : rng.sample_indices(negatives.size(), n_negative)) {
    shots.push_back(Shot{train[negatives[k]].text, std::string(kNoneAnswer), false});
  }
  rng.shuffle(shots);
  return shots;
}

NerPrompt render_prompt(std::span<const Shot> shots, std::string_view test_sentence, std::string_view type_label) {
  NerPrompt p;
  p.shots.assign(shots.begin(), shots.end());
  p.test_sentence = std::string(test_sentence);
  p.type_label = std::string(type_label);
  for (const auto& s : shots) {
    p.rendered += kSentenceLabel;
    p.rendered += s.sentence;
    p.rendered += '\n';
    p.rendered += type_label;
    p.rendered += ": ";
    p.rendered += s.answer;
    p.rendered += '\n';
  }
  p.rendered += kSentenceLabel;
  p.rendered += test_sentence;
  p.rendered += '\n';
  p.rendered += type_label;
  p.rendered += ':';
  return p;
}

ParsedPrompt parse_prompt(std::string_view rendered, std::string_view type_label) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const auto nl = rendered.find('\n', pos);
    lines.push_back(rendered.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (lines.size() < 2 || lines.size() % 2 != 0) throw Error(ErrorKind::kParse, "prompt: odd number of lines");

  const std::string answer_head = std::string(type_label) + ": ";
  auto sentence_of = [&](std::string_view line) {
    if (!line.starts_with(kSentenceLabel)) throw Error(ErrorKind::kParse, "prompt: expected a Sentence line");
    return std::string(line.substr(kSentenceLabel.size()));
  };
  ParsedPrompt out;
  for (std::size_t i = 0; i + 2 < lines.size(); i += 2) {
    if (!lines[i + 1].starts_with(answer_head)) throw Error(ErrorKind::kParse, "prompt: expected an answer line");
    out.shots.push_back(make_shot(sentence_of(lines[i]), std::string(lines[i + 1].substr(answer_head.size()))));
  }
  out.test_sentence = sentence_of(lines[lines.size() - 2]);
  if (lines.back() != std::string(type_label) + ":") throw Error(ErrorKind::kParse, "prompt: bad final line");
  return out;
}

CalibrationState CalibrationState::from_distribution(const Eigen::VectorXd& content_free) {
  if (content_free.size() == 0) throw Error(ErrorKind::kEmptyInput, "empty content-free distribution");
  CalibrationState s;
  s.content_free_probs = content_free.cwiseMax(kCalibrationFloor);
  // Leave an already normalized, unfloored vector bit-identical.
  const double total = s.content_free_probs.sum();
  if ((s.content_free_probs.array() != content_free.array()).any() || std::abs(total - 1.0) > 1e-12) {
    s.content_free_probs /= total;
  }
  s.weight = s.content_free_probs.cwiseInverse();
  return s;
}

Eigen::VectorXd calibrate_first_token(const Eigen::VectorXd& raw, const CalibrationState& state) {
  if (raw.size() != state.weight.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "distribution has " + std::to_string(raw.size()) +
                                                   " entries, calibration expects " +
                                                   std::to_string(state.weight.size()));
  }
  if (std::abs(raw.sum() - 1.0) > 1e-6) {
    throw Error(ErrorKind::kPrecondition, "first-token distribution does not sum to 1");
  }
  // W p computed as a quotient: exact when raw equals the content-free vector.
  return softmax(raw.cwiseQuotient(state.content_free_probs));
}

CalibrationState build_calibration(std::span<const Shot> shots, std::string_view type_label,
                                   const LanguageModel& lm) {
  const auto prompt = render_prompt(shots, kContentFreeInput, type_label);
  const auto gen = lm.generate(lm.tokenize(prompt.rendered, false), 1, true);
  return CalibrationState::from_distribution(gen.first_token_distribution);
}

std::string extract(const NerPrompt& prompt, const CalibrationState* state, const LanguageModel& lm,
                    std::size_t max_new_tokens) {
  if (max_new_tokens == 0) throw Error(ErrorKind::kPrecondition, "max_new_tokens must be positive");
  const auto gen = lm.generate(lm.tokenize(prompt.rendered, false), max_new_tokens, true);
  if (state == nullptr) return cut_at_newline(gen.text);

  const Eigen::VectorXd calibrated = calibrate_first_token(gen.first_token_distribution, *state);
  const Eigen::Index chosen = argmax(calibrated);
  if (chosen == argmax(gen.first_token_distribution)) return cut_at_newline(gen.text);

  const int id = static_cast<int>(chosen);
  const std::string piece = lm.decode(std::span<const int>(&id, 1));
  if (piece.empty() || piece.find('\n') != std::string::npos) return cut_at_newline(piece);
  if (max_new_tokens == 1) return cut_at_newline(piece);
  const auto rest = lm.generate(lm.tokenize(prompt.rendered + piece, false), max_new_tokens - 1, true);
  return cut_at_newline(piece + rest.text);
}

ExtractionRun run_extraction(std::span<const NerInstance> train, std::span<const NerInstance> test,
                             const ExtractionSettings& settings, std::uint64_t seed, const LanguageModel& lm) {
  ExtractionRun run;
  const std::string label(to_string(settings.type));
  run.shots = sample_shots(train, settings.type, settings.n_total, settings.n_positive, seed);
  if (settings.calibrate) run.calibration = build_calibration(run.shots, label, lm);
  run.prompts.reserve(test.size());
  for (const auto& inst : test) run.prompts.push_back(render_prompt(run.shots, inst.text, label));
  const CalibrationState* state = settings.calibrate ? &run.calibration : nullptr;
  run.answers = parallel_map<std::string>(test.size(), settings.workers, [&](std::size_t i) {
    return extract(run.prompts[i], state, lm, settings.max_new_tokens);
  });
  return run;
}

}  // namespace nerprobe
