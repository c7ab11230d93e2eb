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

#include "nerprobe/lm_backend.hpp"

#include <cmath>

namespace nerprobe {

std::vector<int> TokenizedSequence::ids() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.id);
  return out;
}

double TokenizedSequence::prob(std::size_t i) const {
  if (!scored()) throw Error(ErrorKind::kUnscored, "sequence has not been scored");
  return std::exp(logprobs.at(i));
}

std::vector<std::size_t> transitions_from_spans(std::span<const WordSpan> spans) {
  std::vector<std::size_t> out;
  for (std::size_t w = 1; w < spans.size(); ++w) out.push_back(spans[w].start);
  return out;
}

void check_sequence_invariants(const TokenizedSequence& seq) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kPrecondition, "tokenized sequence invariant violated: " + what);
  };
  const std::size_t first = seq.has_unknown_prefix ? 1 : 0;
  if (seq.has_unknown_prefix && seq.tokens.empty()) fail("prefix flag set on empty sequence");
  std::size_t expect = first;
  for (const auto& span : seq.word_spans) {
    if (span.start != expect) fail("word spans are not contiguous from the first word token");
    if (span.end < span.start) fail("word span end precedes its start");
    expect = span.end + 1;
  }
  if (expect != seq.tokens.size()) fail("word spans do not cover every non-prefix token");
  if (seq.transition_indices != transitions_from_spans(seq.word_spans)) {
    fail("transition indices differ from word span starts");
  }
  if (!seq.logprobs.empty()) {
    if (seq.logprobs.size() != seq.tokens.size()) fail("logprob count differs from token count");
    for (double lp : seq.logprobs) {
      if (!(lp <= 0.0)) fail("logprob above zero");
    }
  }
}

void check_descriptor(const LmDescriptor& d) {
  if (d.vocab_size < 2) throw Error(ErrorKind::kProtocol, "descriptor: vocab_size must be >= 2");
  if (d.unknown_token.id < 0 || static_cast<std::size_t>(d.unknown_token.id) >= d.vocab_size) {
    throw Error(ErrorKind::kProtocol, "descriptor: unknown token id outside vocabulary");
  }
  if (d.max_context == 0) throw Error(ErrorKind::kProtocol, "descriptor: max_context must be positive");
}

TokenizedSequence whitespace_tokenize(
    std::string_view text, bool prefix_with_unknown, const Token& unknown,
    const std::function<void(const std::string& word, std::vector<Token>& out)>& word_tokens) {
  if (trim(text).empty()) throw Error(ErrorKind::kEmptyInput, "tokenize: empty text");
  TokenizedSequence seq;
  seq.has_unknown_prefix = prefix_with_unknown;
  if (prefix_with_unknown) seq.tokens.push_back(unknown);

  auto add_word = [&](const std::string& word) {
    const std::size_t start = seq.tokens.size();
    word_tokens(word, seq.tokens);
    if (seq.tokens.size() == start) {
      throw Error(ErrorKind::kEmptyInput, "tokenize: word '" + word + "' produced no tokens");
    }
    seq.word_spans.push_back(WordSpan{start, seq.tokens.size() - 1});
  };

  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    for (const auto& word : split_whitespace(line)) add_word(word);
    if (nl == std::string_view::npos) break;
    add_word("\n");
    pos = nl + 1;
  }
  seq.transition_indices = transitions_from_spans(seq.word_spans);
  return seq;
}

std::string whitespace_detokenize(const TokenizedSequence& seq) {
  std::string out;
  bool line_start = true;
  for (const auto& span : seq.word_spans) {
    if (seq.tokens[span.start].text == "\n") {
      out += '\n';
      line_start = true;
      continue;
    }
    if (!line_start) out += ' ';
    for (std::size_t i = span.start; i <= span.end; ++i) {
      const std::string& text = seq.tokens[i].text;
      out += i == span.start || !text.starts_with("##") ? text : text.substr(2);
    }
    line_start = false;
  }
  return out;
}

TokenizedSequence tokenize_and_score(const LanguageModel& lm, std::string_view text,
                                     bool prefix_with_unknown) {
  return lm.score(lm.tokenize(text, prefix_with_unknown));
}

}  // namespace nerprobe
