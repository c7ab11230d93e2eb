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

#ifndef NERPROBE_REPLAY_BACKEND_HPP_
#define NERPROBE_REPLAY_BACKEND_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

// Scripted stand-in for a model. The script is a JSON document:
//
//   {
//     "name": "replay", "max_context": 4096,
//     "vocab": ["none", "epipen"],
//     "scores": [{"text": "Paris is a city", "prefix_with_unknown": false,
//                 "logprobs": [-1.2, -0.1, -0.1, -0.4]}],
//     "generations": [{"prompt_suffix": "Sentence: CVS sells their own epipen\nproduct:",
//                      "text": " epipen\n",
//                      "first_token_distribution": {"epipen": 0.7, "none": 0.3}}]
//   }
//
// A generation request uses the entry with the longest `prompt_suffix` that
// the prompt text ends with. Scripted text is cut after `max_new_tokens`
// whitespace tokens (newlines count as tokens) and before the first newline
// when asked. Without an explicit distribution the first scripted token gets
// all the mass. Tokenization is whitespace segmentation over the script's
// vocabulary (plus every word appearing in scripted text).
class ReplayLm final : public LanguageModel {
 public:
  struct ScriptedGeneration {
    std::string prompt_suffix;
    std::string text;
    std::map<std::string, double> first_token_distribution;
  };
  struct ScriptedScore {
    std::string text;
    bool prefix_with_unknown = false;
    std::vector<double> logprobs;
  };

  ReplayLm(std::string name, std::size_t max_context, std::vector<std::string> extra_vocab,
           std::vector<ScriptedScore> scores, std::vector<ScriptedGeneration> generations);

  static ReplayLm from_json_text(const std::string& text);
  static ReplayLm from_file(const std::filesystem::path& path);

  LmDescriptor descriptor() const override;
  TokenizedSequence tokenize(std::string_view text, bool prefix_with_unknown) const override;
  TokenizedSequence score(TokenizedSequence seq) const override;
  Generation generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                      bool stop_on_newline) const override;
  std::string decode(std::span<const int> ids) const override;

  std::optional<int> token_id(std::string_view text) const;

 private:
  void intern(const std::string& token);
  const ScriptedGeneration* match(const std::string& prompt_text) const;

  std::string name_;
  std::size_t max_context_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  std::map<std::pair<std::string, bool>, std::vector<double>> scores_;
  std::vector<ScriptedGeneration> generations_;
};

}  // namespace nerprobe

#endif  // NERPROBE_REPLAY_BACKEND_HPP_
