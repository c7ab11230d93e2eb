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

#ifndef NERPROBE_LM_BACKEND_HPP_
#define NERPROBE_LM_BACKEND_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nerprobe/common.hpp"

namespace nerprobe {

struct Token {
  int id = 0;
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

// Inclusive token-index range of one whitespace-delimited word.
struct WordSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

// Tokens of one input plus (after scoring) their natural-log conditional
// probabilities. When `has_unknown_prefix` is set, position 0 holds the
// backend's unknown token and belongs to no word.
struct TokenizedSequence {
  std::vector<Token> tokens;
  std::vector<double> logprobs;  // empty until scored
  std::vector<WordSpan> word_spans;
  std::vector<std::size_t> transition_indices;
  bool has_unknown_prefix = false;

  std::size_t size() const { return tokens.size(); }
  bool scored() const { return !tokens.empty() && logprobs.size() == tokens.size(); }
  std::vector<int> ids() const;
  // Probability of position i, exp(logprobs[i]).
  double prob(std::size_t i) const;
};

// Start index of every word except the first.
std::vector<std::size_t> transitions_from_spans(std::span<const WordSpan> spans);

// Throws Error(kPrecondition) describing the first violated invariant:
// spans ordered, contiguous and covering every non-prefix token; transition
// indices matching span starts; logprobs (when present) <= 0.
void check_sequence_invariants(const TokenizedSequence& seq);

struct LmDescriptor {
  std::string name;
  std::size_t vocab_size = 0;
  Token unknown_token;
  std::size_t max_context = 0;
};

void check_descriptor(const LmDescriptor& d);

struct Generation {
  std::string text;
  // Next-token distribution at the first generated position, length
  // vocab_size, summing to 1.
  Eigen::VectorXd first_token_distribution;
};

// Language-model contract. Implementations must be safe to call from several
// threads at once.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual LmDescriptor descriptor() const = 0;

  // Throws Error(kEmptyInput) when the text yields no tokens.
  virtual TokenizedSequence tokenize(std::string_view text,
                                     bool prefix_with_unknown) const = 0;

  // Returns `seq` with logprobs[i] = ln p(s_i | s_<i). Position 0 is scored
  // against the empty context. Throws kContextOverflow past max_context.
  virtual TokenizedSequence score(TokenizedSequence seq) const = 0;

  // Greedy decoding from the end of `prompt`. When `stop_on_newline` is set
  // the text is cut before the first newline.
  virtual Generation generate(const TokenizedSequence& prompt,
                              std::size_t max_new_tokens,
                              bool stop_on_newline) const = 0;

  // Text the given token ids contribute when appended to a prompt.
  virtual std::string decode(std::span<const int> ids) const = 0;
};

// Whitespace word segmentation shared by the table-driven backends. Each
// newline is its own word. `word_tokens` appends the tokens of one word.
TokenizedSequence whitespace_tokenize(
    std::string_view text, bool prefix_with_unknown, const Token& unknown,
    const std::function<void(const std::string& word, std::vector<Token>& out)>& word_tokens);

// Rebuilds whitespace-segmented text from word spans: words joined by single
// spaces, newlines verbatim, "##" stripped from non-initial word pieces.
std::string whitespace_detokenize(const TokenizedSequence& seq);

// Tokenizes and scores in one step.
TokenizedSequence tokenize_and_score(const LanguageModel& lm, std::string_view text,
                                     bool prefix_with_unknown);

}  // namespace nerprobe

#endif  // NERPROBE_LM_BACKEND_HPP_
