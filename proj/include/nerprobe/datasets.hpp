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

#ifndef NERPROBE_DATASETS_HPP_
#define NERPROBE_DATASETS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nerprobe/common.hpp"

namespace nerprobe {

struct EntitySpan {
  std::string surface;
  std::string label;
  std::size_t begin = 0;  // first token
  std::size_t end = 0;    // one past the last token

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // "O", "B-<label>", "I-<label>"

  // Entities in sentence order, assuming valid BIO tags.
  std::vector<EntitySpan> entities() const;
  // Tokens joined by single spaces.
  std::string text() const;

  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

enum class BioMode {
  kStrict,   // an I- tag not continuing the same label is an error
  kLenient,  // such a tag is promoted to B- and counted
};

struct ConllParseResult {
  std::vector<TaggedSentence> sentences;
  std::size_t repairs = 0;
};

// Two or more whitespace-separated columns per line: the first is the token,
// the last the BIO tag. Blank lines separate sentences; -DOCSTART- lines are
// skipped. Every line must have the same column count.
ConllParseResult parse_conll(std::string_view text, BioMode mode = BioMode::kStrict);
ConllParseResult load_conll(const std::filesystem::path& path, BioMode mode = BioMode::kStrict);
std::string serialize_conll(std::span<const TaggedSentence> sentences);

// Raw dataset label -> canonical type, or dropped (std::nullopt).
struct TypeMergeMap {
  std::map<std::string, std::optional<NeType>> rules;

  // Lines of `label = type` or `label = drop`; '#' starts a comment.
  static TypeMergeMap parse(std::string_view text);
  static TypeMergeMap load(const std::filesystem::path& path);
};

// Relabels entity tags with canonical tag names (see tag_name) and turns
// dropped labels into O. Throws kConfig for labels missing from the map.
std::vector<TaggedSentence> apply_merge(std::span<const TaggedSentence> sentences, const TypeMergeMap& map);

// Entities whose labels are canonical type names, in sentence order.
struct TypedEntity {
  EntitySpan span;
  NeType type;
};
std::vector<TypedEntity> typed_entities(const TaggedSentence& sentence);

// A sentence as plain text with character offsets of its gold entities; the
// unit of few-shot extraction and of test-set substitution.
struct GoldEntity {
  std::size_t begin = 0;  // byte offset into text
  std::size_t end = 0;    // one past the last byte
  NeType type = NeType::kPerson;

  friend bool operator==(const GoldEntity&, const GoldEntity&) = default;
};

struct NerInstance {
  std::string id;
  std::string text;
  std::vector<GoldEntity> entities;  // ordered by begin, non-overlapping

  std::string surface(const GoldEntity& e) const { return text.substr(e.begin, e.end - e.begin); }
  // Surfaces of entities of `type`, in sentence order.
  std::vector<std::string> answers(NeType type) const;
  bool has(NeType type) const;

  friend bool operator==(const NerInstance&, const NerInstance&) = default;
};

// Joins tokens with single spaces; labels must be canonical. Ids are
// "<prefix>-<index>".
std::vector<NerInstance> to_instances(std::span<const TaggedSentence> sentences, std::string_view id_prefix);

struct NeListOptions {
  bool drop_one_word = false;
  std::string source;
};

// One mention per line; only the first tab-separated column is used.
// Whitespace is normalized and duplicates dropped, keeping first occurrence.
std::vector<TypedMention> parse_ne_list(std::string_view text, NeType type, const NeListOptions& options = {});
std::vector<TypedMention> load_ne_list(const std::filesystem::path& path, NeType type,
                                       const NeListOptions& options = {});

// Distinct (surface, type) pairs over all splits, sorted by type then
// surface. Labels must already be canonical.
std::vector<TypedMention> collect_mentions(std::span<const std::vector<TaggedSentence>> splits,
                                           std::string_view source);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace nerprobe

#endif  // NERPROBE_DATASETS_HPP_
