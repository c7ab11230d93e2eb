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

// Deterministic table-driven language model.
//
// The model is an n-gram lookup table read from a UTF-8 text file:
//
//   # comment (a '#' line whose second character is not '#')
//   @fallback 1e-06
//   @name toy-lm                      (optional)
//   @max_context 1024                 (optional)
//   @vocab extra tokens ...           (optional, repeatable)
//   @split Zune Zu ##ne               (optional subword split of a word)
//   | Paris | 0.25                    (empty context: unigram)
//   Paris | is | 0.5
//   Paris is | a | 0.9
//
// A conditional p(next | history) is looked up under the longest suffix of
// the history that has an entry in the table. Tokens listed under that
// context get their stored probability. Every other token receives
// min(fallback, remaining / unlisted) where remaining = 1 - listed mass, so
// stored values are returned exactly and a context's total never exceeds 1.
// A context whose listed mass is 1 leaves nothing for unlisted tokens; scoring
// one of them raises kZeroProbability.
//
// The tokenizer splits on whitespace. Each newline is its own token and its
// own word. Words found in the split table become several tokens; pieces
// after the first carry a "##" prefix in the vocabulary. Words missing from
// the vocabulary map to the unknown token id but keep their surface text.
//
// Special tokens always present: "<unk>" (id 0), "</s>" (id 1) and the
// newline (id 2, spelled `\n` in table files).

#ifndef NERPROBE_REFERENCE_LM_HPP_
#define NERPROBE_REFERENCE_LM_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

inline constexpr int kUnknownId = 0;
inline constexpr int kEndOfSequenceId = 1;
inline constexpr int kNewlineId = 2;
inline constexpr std::string_view kUnknownText = "<unk>";
inline constexpr std::string_view kEndOfSequenceText = "</s>";
inline constexpr std::string_view kContinuationMark = "##";

struct ReferenceLmTable {
  struct ContextEntry {
    std::vector<std::pair<int, double>> next;
    double listed_mass = 0.0;
  };

  std::string name = "reference-lm";
  std::size_t max_context = 1024;
  double fallback_prob = 0.0;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> index;
  std::map<std::vector<int>, ContextEntry> entries;
  std::unordered_map<std::string, std::vector<std::string>> splits;
  std::size_t max_order = 0;  // longest stored context

  int intern(const std::string& token);
  std::optional<int> find(std::string_view token) const;
};

ReferenceLmTable parse_reference_table(std::string_view text);
ReferenceLmTable load_reference_table(const std::filesystem::path& path);

class ReferenceLm final : public LanguageModel {
 public:
  explicit ReferenceLm(ReferenceLmTable table);
  static ReferenceLm from_file(const std::filesystem::path& path);

  LmDescriptor descriptor() const override;
  TokenizedSequence tokenize(std::string_view text, bool prefix_with_unknown) const override;
  TokenizedSequence score(TokenizedSequence seq) const override;
  Generation generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                      bool stop_on_newline) const override;
  std::string decode(std::span<const int> ids) const override;

  // Inverse of tokenize for canonical text (single spaces between words, no
  // spaces around newlines).
  std::string detokenize(const TokenizedSequence& seq) const;

  double conditional(std::span<const int> history, int next) const;
  // Unnormalized next-token probabilities after `history` (sums to <= 1).
  Eigen::VectorXd next_distribution(std::span<const int> history) const;

  const ReferenceLmTable& table() const { return table_; }

 private:
  const ReferenceLmTable::ContextEntry* lookup(std::span<const int> history) const;
  double unlisted_prob(const ReferenceLmTable::ContextEntry* entry) const;

  ReferenceLmTable table_;
};

}  // namespace nerprobe

#endif  // NERPROBE_REFERENCE_LM_HPP_
