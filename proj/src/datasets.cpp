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

#include "nerprobe/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace nerprobe {

namespace {

struct Tag {
  char prefix;  // 'O', 'B', 'I'
  std::string label;
};

std::optional<Tag> split_tag(std::string_view tag) {
  if (tag == "O") return Tag{'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return Tag{tag[0], std::string(tag.substr(2))};
  }
  return std::nullopt;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<EntitySpan> TaggedSentence::entities() const {
  std::vector<EntitySpan> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto tag = split_tag(tags[i]);
    if (!tag || tag->prefix == 'O') continue;
    if (tag->prefix == 'I' && !out.empty() && out.back().end == i && out.back().label == tag->label) {
      out.back().end = i + 1;
      out.back().surface += ' ' + tokens[i];
      continue;
    }
    out.push_back(EntitySpan{tokens[i], tag->label, i, i + 1});
  }
  return out;
}

std::string TaggedSentence::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

ConllParseResult parse_conll(std::string_view text, BioMode mode) {
  ConllParseResult result;
  TaggedSentence current;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) result.sentences.push_back(std::move(current));
    current = TaggedSentence{};
  };
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kParse, "CoNLL line " + std::to_string(line_no) + ": " + what);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto fields = split_whitespace(raw);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (fields[0] == "-DOCSTART-") continue;
    if (fields.size() < 2) fail("expected a token and a tag column");
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      fail("found " + std::to_string(fields.size()) + " columns, expected " + std::to_string(columns));
    }
    const std::string& tag_text = fields.back();
    const auto tag = split_tag(tag_text);
    if (!tag) fail("unknown tag prefix in '" + tag_text + "'");

    std::string stored = tag_text;
    if (tag->prefix == 'I') {
      const std::optional<Tag> prev =
          current.tags.empty() ? std::nullopt : split_tag(current.tags.back());
      const bool continues = prev && prev->prefix != 'O' && prev->label == tag->label;
      if (!continues) {
        if (mode == BioMode::kStrict) fail("I-" + tag->label + " does not continue an entity");
        stored = "B-" + tag->label;
        ++result.repairs;
      }
    }
    current.tokens.push_back(fields.front());
    current.tags.push_back(std::move(stored));
  }
  flush();
  return result;
}

ConllParseResult load_conll(const std::filesystem::path& path, BioMode mode) {
  return parse_conll(read_text_file(path), mode);
}

std::string serialize_conll(std::span<const TaggedSentence> sentences) {
  std::string out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s > 0) out += '\n';
    const auto& sent = sentences[s];
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      out += sent.tokens[i];
      out += '\t';
      out += sent.tags[i];
      out += '\n';
    }
  }
  return out;
}

TypeMergeMap TypeMergeMap::parse(std::string_view text) {
  TypeMergeMap map;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kParse, "merge map line " + std::to_string(line_no) + ": expected 'label = type'");
    }
    const std::string label(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (label.empty() || value.empty()) {
      throw Error(ErrorKind::kParse, "merge map line " + std::to_string(line_no) + ": empty label or value");
    }
    if (ascii_lower(value) == "drop") {
      map.rules[label] = std::nullopt;
    } else {
      auto type = parse_ne_type(value);
      if (!type) {
        throw Error(ErrorKind::kParse, "merge map line " + std::to_string(line_no) + ": unknown type '" + value + "'");
      }
      map.rules[label] = *type;
    }
  }
  return map;
}

TypeMergeMap TypeMergeMap::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::vector<TaggedSentence> apply_merge(std::span<const TaggedSentence> sentences, const TypeMergeMap& map) {
  std::vector<TaggedSentence> out(sentences.begin(), sentences.end());
  for (auto& sent : out) {
    for (auto& tag_text : sent.tags) {
      const auto tag = split_tag(tag_text);
      if (!tag || tag->prefix == 'O') continue;
      auto it = map.rules.find(tag->label);
      if (it == map.rules.end()) {
        throw Error(ErrorKind::kConfig, "merge map has no rule for label '" + tag->label + "'");
      }
      tag_text = it->second ? std::string(1, tag->prefix) + "-" + std::string(tag_name(*it->second)) : "O";
    }
  }
  return out;
}

std::vector<TypedEntity> typed_entities(const TaggedSentence& sentence) {
  std::vector<TypedEntity> out;
  for (auto& span : sentence.entities()) {
    auto type = parse_ne_type(span.label);
    if (!type) {
      throw Error(ErrorKind::kPrecondition,
                  "label '" + span.label + "' is not a canonical type; apply a merge map first");
    }
    out.push_back(TypedEntity{std::move(span), *type});
  }
  return out;
}

std::vector<std::string> NerInstance::answers(NeType type) const {
  std::vector<std::string> out;
  for (const auto& e : entities) {
    if (e.type == type) out.push_back(surface(e));
  }
  return out;
}

bool NerInstance::has(NeType type) const {
  return std::any_of(entities.begin(), entities.end(), [&](const GoldEntity& e) { return e.type == type; });
}

std::vector<NerInstance> to_instances(std::span<const TaggedSentence> sentences, std::string_view id_prefix) {
  std::vector<NerInstance> out;
  out.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    NerInstance inst;
    inst.id = std::string(id_prefix) + "-" + std::to_string(s);
    std::vector<std::size_t> starts;
    for (const auto& tok : sent.tokens) {
      if (!inst.text.empty()) inst.text += ' ';
      starts.push_back(inst.text.size());
      inst.text += tok;
    }
    for (const auto& e : typed_entities(sent)) {
      const std::size_t last = e.span.end - 1;
      inst.entities.push_back(GoldEntity{starts[e.span.begin], starts[last] + sent.tokens[last].size(), e.type});
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TypedMention> parse_ne_list(std::string_view text, NeType type, const NeListOptions& options) {
  std::vector<TypedMention> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  bool any_line = false;
  while (std::getline(in, raw)) {
    std::string_view line = raw;
    if (auto tab = line.find('\t'); tab != std::string_view::npos) line = line.substr(0, tab);
    std::string surface = normalize_whitespace(line);
    if (surface.empty()) continue;
    any_line = true;
    if (options.drop_one_word && surface.find(' ') == std::string::npos) continue;
    if (!seen.insert(surface).second) continue;
    out.push_back(TypedMention{std::move(surface), type, options.source});
  }
  if (!any_line) throw Error(ErrorKind::kEmptyInput, "NE list is empty");
  return out;
}

std::vector<TypedMention> load_ne_list(const std::filesystem::path& path, NeType type,
                                       const NeListOptions& options) {
  NeListOptions opts = options;
  if (opts.source.empty()) opts.source = path.stem().string();
  return parse_ne_list(read_text_file(path), type, opts);
}

std::vector<TypedMention> collect_mentions(std::span<const std::vector<TaggedSentence>> splits,
                                           std::string_view source) {
  std::set<std::pair<NeType, std::string>> unique;
  for (const auto& split : splits) {
    for (const auto& sent : split) {
      for (const auto& e : typed_entities(sent)) unique.emplace(e.type, e.span.surface);
    }
  }
  std::vector<TypedMention> out;
  out.reserve(unique.size());
  for (const auto& [type, surface] : unique) out.push_back(TypedMention{surface, type, std::string(source)});
  return out;
}

}  // namespace nerprobe
