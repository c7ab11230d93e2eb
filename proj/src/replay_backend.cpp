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

#include "nerprobe/replay_backend.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nerprobe/reference_lm.hpp"

namespace nerprobe {

namespace {

// Token boundaries of scripted text: maximal non-space runs, and each newline
// on its own. Returns [begin, end) byte offsets.
std::vector<std::pair<std::size_t, std::size_t>> script_tokens(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n') {
      out.emplace_back(i, i + 1);
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      out.emplace_back(i, j);
      i = j;
    }
  }
  return out;
}

}  // namespace

ReplayLm::ReplayLm(std::string name, std::size_t max_context, std::vector<std::string> extra_vocab,
                   std::vector<ScriptedScore> scores, std::vector<ScriptedGeneration> generations)
    : name_(std::move(name)), max_context_(max_context), generations_(std::move(generations)) {
  intern(std::string(kUnknownText));
  intern(std::string(kEndOfSequenceText));
  intern("\n");
  for (const auto& tok : extra_vocab) intern(tok);
  for (const auto& g : generations_) {
    for (const auto& w : split_whitespace(g.text)) intern(w);
    for (const auto& w : split_whitespace(g.prompt_suffix)) intern(w);
    for (const auto& [tok, p] : g.first_token_distribution) {
      if (!(p >= 0.0)) throw Error(ErrorKind::kParse, "replay script: negative probability for '" + tok + "'");
      intern(tok);
    }
  }
  for (auto& s : scores) {
    for (const auto& w : split_whitespace(s.text)) intern(w);
    for (double lp : s.logprobs) {
      if (!(lp <= 0.0)) throw Error(ErrorKind::kParse, "replay script: logprob above zero for '" + s.text + "'");
    }
    const std::size_t expected = tokenize(s.text, s.prefix_with_unknown).size();
    if (s.logprobs.size() != expected) {
      throw Error(ErrorKind::kParse, "replay script: '" + s.text + "' has " +
                                         std::to_string(expected) + " tokens but " +
                                         std::to_string(s.logprobs.size()) + " logprobs");
    }
    scores_[{normalize_whitespace(s.text), s.prefix_with_unknown}] = std::move(s.logprobs);
  }
  if (max_context_ == 0) throw Error(ErrorKind::kParse, "replay script: max_context must be positive");
}

ReplayLm ReplayLm::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("replay script: ") + e.what());
  }
  try {
    std::vector<ScriptedScore> scores;
    for (const auto& s : doc.value("scores", nlohmann::json::array())) {
      scores.push_back(ScriptedScore{s.at("text").get<std::string>(),
                                     s.value("prefix_with_unknown", false),
                                     s.at("logprobs").get<std::vector<double>>()});
    }
    std::vector<ScriptedGeneration> gens;
    for (const auto& g : doc.value("generations", nlohmann::json::array())) {
      ScriptedGeneration sg;
      sg.prompt_suffix = g.value("prompt_suffix", "");
      sg.text = g.at("text").get<std::string>();
      if (g.contains("first_token_distribution")) {
        sg.first_token_distribution =
            g.at("first_token_distribution").get<std::map<std::string, double>>();
      }
      gens.push_back(std::move(sg));
    }
    return ReplayLm(doc.value("name", "replay"), doc.value("max_context", std::size_t{4096}),
                    doc.value("vocab", std::vector<std::string>{}), std::move(scores), std::move(gens));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("replay script: ") + e.what());
  }
}

ReplayLm ReplayLm::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open replay script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ReplayLm::intern(const std::string& token) {
  if (index_.contains(token)) return;
  index_.emplace(token, static_cast<int>(vocab_.size()));
  vocab_.push_back(token);
}

std::optional<int> ReplayLm::token_id(std::string_view text) const {
  if (auto it = index_.find(std::string(text)); it != index_.end()) return it->second;
  return std::nullopt;
}

LmDescriptor ReplayLm::descriptor() const {
  return LmDescriptor{name_, vocab_.size(), Token{kUnknownId, std::string(kUnknownText)}, max_context_};
}

TokenizedSequence ReplayLm::tokenize(std::string_view text, bool prefix_with_unknown) const {
  return whitespace_tokenize(text, prefix_with_unknown, Token{kUnknownId, std::string(kUnknownText)},
                             [this](const std::string& word, std::vector<Token>& out) {
                               out.push_back(Token{token_id(word).value_or(kUnknownId), word});
                             });
}

TokenizedSequence ReplayLm::score(TokenizedSequence seq) const {
  if (seq.tokens.empty()) throw Error(ErrorKind::kEmptyInput, "score: empty sequence");
  if (seq.tokens.size() > max_context_) {
    throw Error(ErrorKind::kContextOverflow, "score: sequence exceeds max_context");
  }
  const std::string key = normalize_whitespace(whitespace_detokenize(seq));
  auto it = scores_.find({key, seq.has_unknown_prefix});
  if (it == scores_.end()) {
    throw Error(ErrorKind::kProtocol, "replay: no scripted score for '" + key + "'");
  }
  seq.logprobs = it->second;
  return seq;
}

const ReplayLm::ScriptedGeneration* ReplayLm::match(const std::string& prompt_text) const {
  const ScriptedGeneration* best = nullptr;
  for (const auto& g : generations_) {
    if (prompt_text.ends_with(g.prompt_suffix) &&
        (best == nullptr || g.prompt_suffix.size() > best->prompt_suffix.size())) {
      best = &g;
    }
  }
  return best;
}

Generation ReplayLm::generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                              bool stop_on_newline) const {
  if (max_new_tokens == 0) throw Error(ErrorKind::kPrecondition, "generate: max_new_tokens must be >= 1");
  if (prompt.tokens.size() + max_new_tokens > max_context_) {
    throw Error(ErrorKind::kContextOverflow, "generate: prompt exceeds max_context");
  }
  const std::string prompt_text = whitespace_detokenize(prompt);
  const ScriptedGeneration* g = match(prompt_text);
  if (g == nullptr) {
    throw Error(ErrorKind::kProtocol, "replay: no scripted generation for prompt ending '" +
                                          prompt_text.substr(prompt_text.size() > 60 ? prompt_text.size() - 60 : 0) +
                                          "'");
  }

  const auto toks = script_tokens(g->text);
  std::size_t cut = g->text.size();
  for (std::size_t k = 0; k < toks.size(); ++k) {
    const bool newline = g->text[toks[k].first] == '\n';
    if (newline && stop_on_newline) {
      cut = toks[k].first;
      break;
    }
    if (k + 1 == max_new_tokens) {
      cut = toks[k].second;
      break;
    }
  }

  Generation out;
  out.text = g->text.substr(0, cut);
  const auto v = static_cast<Eigen::Index>(vocab_.size());
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(v);
  if (g->first_token_distribution.empty()) {
    int first = kEndOfSequenceId;
    if (!toks.empty()) {
      const auto& [b, e] = toks.front();
      first = token_id(g->text.substr(b, e - b)).value_or(kUnknownId);
    }
    dist[first] = 1.0;
  } else {
    double listed = 0.0;
    std::vector<bool> is_listed(vocab_.size(), false);
    for (const auto& [tok, p] : g->first_token_distribution) {
      const int id = *token_id(tok);
      dist[id] = p;
      is_listed[id] = true;
      listed += p;
    }
    const auto unlisted = v - static_cast<Eigen::Index>(g->first_token_distribution.size());
    if (listed < 1.0 && unlisted > 0) {
      for (Eigen::Index i = 0; i < v; ++i) {
        if (!is_listed[i]) dist[i] = (1.0 - listed) / static_cast<double>(unlisted);
      }
    }
    if (!(dist.sum() > 0.0)) throw Error(ErrorKind::kParse, "replay script: first-token distribution has no mass");
  }
  out.first_token_distribution = dist / dist.sum();
  return out;
}

std::string ReplayLm::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
      throw Error(ErrorKind::kPrecondition, "decode: token id outside vocabulary");
    }
    if (id == kEndOfSequenceId) continue;
    if (id == kNewlineId) {
      out += '\n';
    } else {
      out += ' ';
      out += vocab_[id];
    }
  }
  return out;
}

}  // namespace nerprobe
