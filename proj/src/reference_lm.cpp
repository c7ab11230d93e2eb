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

#include "nerprobe/reference_lm.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nerprobe {

namespace {

constexpr double kMassTolerance = 1e-9;

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorKind::kParse,
              "reference table line " + std::to_string(line_no) + ": " + what);
}

std::string unescape_token(std::string_view tok) {
  return tok == "\\n" ? std::string("\n") : std::string(tok);
}

double parse_probability(std::string_view text, std::size_t line_no) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    parse_error(line_no, "bad probability '" + std::string(text) + "'");
  }
  if (!(value > 0.0 && value <= 1.0)) parse_error(line_no, "probability outside (0, 1]");
  return value;
}

bool is_comment(std::string_view line) {
  return !line.empty() && line[0] == '#' && (line.size() == 1 || line[1] != '#');
}

bool is_continuation(std::string_view tok) {
  return tok.size() > kContinuationMark.size() && tok.starts_with(kContinuationMark);
}

}  // namespace

int ReferenceLmTable::intern(const std::string& token) {
  if (auto it = index.find(token); it != index.end()) return it->second;
  const int id = static_cast<int>(vocab.size());
  vocab.push_back(token);
  index.emplace(token, id);
  return id;
}

std::optional<int> ReferenceLmTable::find(std::string_view token) const {
  if (auto it = index.find(std::string(token)); it != index.end()) return it->second;
  return std::nullopt;
}

ReferenceLmTable parse_reference_table(std::string_view text) {
  ReferenceLmTable table;
  table.intern(std::string(kUnknownText));
  table.intern(std::string(kEndOfSequenceText));
  table.intern("\n");

  bool saw_fallback = false;
  std::set<std::pair<std::vector<int>, int>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || is_comment(line)) continue;

    if (line.front() == '@') {
      auto fields = split_whitespace(line);
      const std::string& directive = fields[0];
      if (directive == "@fallback") {
        if (saw_fallback) parse_error(line_no, "duplicate @fallback directive");
        if (fields.size() != 2) parse_error(line_no, "@fallback takes one value");
        table.fallback_prob = parse_probability(fields[1], line_no);
        saw_fallback = true;
      } else if (directive == "@name") {
        if (fields.size() < 2) parse_error(line_no, "@name needs a value");
        table.name = normalize_whitespace(line.substr(directive.size()));
      } else if (directive == "@max_context") {
        if (fields.size() != 2) parse_error(line_no, "@max_context takes one value");
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), n);
        if (ec != std::errc() || n == 0) parse_error(line_no, "bad @max_context");
        table.max_context = n;
      } else if (directive == "@vocab") {
        for (std::size_t i = 1; i < fields.size(); ++i) table.intern(unescape_token(fields[i]));
      } else if (directive == "@split") {
        if (fields.size() < 4) parse_error(line_no, "@split needs a word and at least two pieces");
        std::string joined;
        std::vector<std::string> pieces(fields.begin() + 2, fields.end());
        for (std::size_t i = 0; i < pieces.size(); ++i) {
          const bool cont = is_continuation(pieces[i]);
          if ((i == 0) == cont) {
            parse_error(line_no, "@split pieces after the first must start with ##, the first must not");
          }
          joined += cont ? pieces[i].substr(kContinuationMark.size()) : pieces[i];
          table.intern(pieces[i]);
        }
        if (joined != fields[1]) parse_error(line_no, "@split pieces do not spell the word");
        table.splits[fields[1]] = std::move(pieces);
      } else {
        parse_error(line_no, "unknown directive " + directive);
      }
      continue;
    }

    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string_view::npos ? bar1 : line.find('|', bar1 + 1);
    if (bar2 == std::string_view::npos || line.find('|', bar2 + 1) != std::string_view::npos) {
      parse_error(line_no, "expected 'context | next | prob'");
    }
    std::vector<int> context;
    for (const auto& tok : split_whitespace(line.substr(0, bar1))) {
      context.push_back(table.intern(unescape_token(tok)));
    }
    auto next_fields = split_whitespace(line.substr(bar1 + 1, bar2 - bar1 - 1));
    if (next_fields.size() != 1) parse_error(line_no, "next field must hold exactly one token");
    const int next = table.intern(unescape_token(next_fields[0]));
    const double p = parse_probability(line.substr(bar2 + 1), line_no);
    if (!seen.emplace(context, next).second) parse_error(line_no, "duplicate entry");

    auto& entry = table.entries[context];
    entry.next.emplace_back(next, p);
    entry.listed_mass += p;
    if (entry.listed_mass > 1.0 + kMassTolerance) {
      parse_error(line_no, "listed probabilities for this context exceed 1");
    }
    table.max_order = std::max(table.max_order, context.size());
  }
  if (!saw_fallback) throw Error(ErrorKind::kParse, "reference table: missing @fallback directive");
  for (auto& [ctx, entry] : table.entries) {
    entry.listed_mass = std::min(entry.listed_mass, 1.0);
    std::sort(entry.next.begin(), entry.next.end());
  }
  return table;
}

ReferenceLmTable load_reference_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open reference table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_reference_table(ss.str());
}

ReferenceLm::ReferenceLm(ReferenceLmTable table) : table_(std::move(table)) {}

ReferenceLm ReferenceLm::from_file(const std::filesystem::path& path) {
  return ReferenceLm(load_reference_table(path));
}

LmDescriptor ReferenceLm::descriptor() const {
  return LmDescriptor{table_.name, table_.vocab.size(),
                      Token{kUnknownId, std::string(kUnknownText)}, table_.max_context};
}

TokenizedSequence ReferenceLm::tokenize(std::string_view text, bool prefix_with_unknown) const {
  return whitespace_tokenize(
      text, prefix_with_unknown, Token{kUnknownId, std::string(kUnknownText)},
      [this](const std::string& word, std::vector<Token>& out) {
        if (auto it = table_.splits.find(word); it != table_.splits.end()) {
          for (const auto& piece : it->second) out.push_back(Token{*table_.find(piece), piece});
        } else {
          out.push_back(Token{table_.find(word).value_or(kUnknownId), word});
        }
      });
}

const ReferenceLmTable::ContextEntry* ReferenceLm::lookup(std::span<const int> history) const {
  const std::size_t longest = std::min(history.size(), table_.max_order);
  for (std::size_t k = longest + 1; k-- > 0;) {
    std::vector<int> key(history.end() - static_cast<std::ptrdiff_t>(k), history.end());
    if (auto it = table_.entries.find(key); it != table_.entries.end()) return &it->second;
  }
  return nullptr;
}

double ReferenceLm::unlisted_prob(const ReferenceLmTable::ContextEntry* entry) const {
  const std::size_t listed = entry ? entry->next.size() : 0;
  const std::size_t unlisted = table_.vocab.size() - listed;
  if (unlisted == 0) return 0.0;
  const double remaining = 1.0 - (entry ? entry->listed_mass : 0.0);
  if (remaining <= 0.0) return 0.0;
  return std::min(table_.fallback_prob, remaining / static_cast<double>(unlisted));
}

double ReferenceLm::conditional(std::span<const int> history, int next) const {
  const auto* entry = lookup(history);
  if (entry) {
    auto it = std::lower_bound(entry->next.begin(), entry->next.end(), std::make_pair(next, 0.0));
    if (it != entry->next.end() && it->first == next) return it->second;
  }
  return unlisted_prob(entry);
}

Eigen::VectorXd ReferenceLm::next_distribution(std::span<const int> history) const {
  const auto* entry = lookup(history);
  Eigen::VectorXd dist =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(table_.vocab.size()), unlisted_prob(entry));
  if (entry) {
    for (const auto& [id, p] : entry->next) dist[id] = p;
  }
  return dist;
}

TokenizedSequence ReferenceLm::score(TokenizedSequence seq) const {
  if (seq.tokens.empty()) throw Error(ErrorKind::kEmptyInput, "score: empty sequence");
  if (seq.tokens.size() > table_.max_context) {
    throw Error(ErrorKind::kContextOverflow,
                "score: " + std::to_string(seq.tokens.size()) + " tokens exceed max_context " +
                    std::to_string(table_.max_context));
  }
  const std::vector<int> ids = seq.ids();
  seq.logprobs.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = conditional(std::span<const int>(ids).first(i), ids[i]);
    if (p <= 0.0) {
      throw Error(ErrorKind::kZeroProbability,
                  "score: token '" + seq.tokens[i].text + "' has zero probability at position " +
                      std::to_string(i));
    }
    seq.logprobs[i] = std::log(p);
  }
  return seq;
}

Generation ReferenceLm::generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                                 bool stop_on_newline) const {
  if (max_new_tokens == 0) throw Error(ErrorKind::kPrecondition, "generate: max_new_tokens must be >= 1");
  if (prompt.tokens.size() + max_new_tokens > table_.max_context) {
    throw Error(ErrorKind::kContextOverflow,
                "generate: prompt of " + std::to_string(prompt.tokens.size()) + " tokens plus " +
                    std::to_string(max_new_tokens) + " new tokens exceeds max_context " +
                    std::to_string(table_.max_context));
  }
  std::vector<int> history = prompt.ids();
  std::vector<int> generated;
  Generation out;
  for (std::size_t step = 0; step < max_new_tokens; ++step) {
    const Eigen::VectorXd dist = next_distribution(history);
    if (step == 0) out.first_token_distribution = dist / dist.sum();
    Eigen::Index best = 0;
    dist.maxCoeff(&best);  // first maximal index on ties
    const int id = static_cast<int>(best);
    if (id == kEndOfSequenceId) break;
    if (id == kNewlineId && stop_on_newline) break;
    generated.push_back(id);
    history.push_back(id);
  }
  out.text = decode(generated);
  return out;
}

std::string ReferenceLm::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table_.vocab.size()) {
      throw Error(ErrorKind::kPrecondition, "decode: token id " + std::to_string(id) + " outside vocabulary");
    }
    const std::string& piece = table_.vocab[id];
    if (id == kEndOfSequenceId) continue;
    if (id == kNewlineId) {
      out += '\n';
    } else if (is_continuation(piece)) {
      out += piece.substr(kContinuationMark.size());
    } else {
      out += ' ';
      out += piece;
    }
  }
  return out;
}

std::string ReferenceLm::detokenize(const TokenizedSequence& seq) const {
  return whitespace_detokenize(seq);
}

}  // namespace nerprobe
