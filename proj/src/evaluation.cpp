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

#include "nerprobe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "nerprobe/ner_few_shot.hpp"

namespace nerprobe {

namespace {

std::u32string lower32(std::string_view s) { return utf8_decode(ascii_lower(s)); }

}  // namespace

const char* to_string(MatchVerdict v) {
  switch (v) {
    case MatchVerdict::kTruePositive: return "true_positive";
    case MatchVerdict::kFalsePositive: return "false_positive";
    case MatchVerdict::kFalseNegative: return "false_negative";
    case MatchVerdict::kTrueNegative: return "true_negative";
  }
  return "false_positive";
}

const char* to_string(MatchRule r) {
  switch (r) {
    case MatchRule::kExact: return "exact_ci";
    case MatchRule::kLevenshtein: return "levenshtein";
    case MatchRule::kNoneToken: return "none_token";
    case MatchRule::kGarbageAsNone: return "garbage_as_none";
    case MatchRule::kNoMatch: return "no_match";
  }
  return "no_match";
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

MatchResult match(std::string_view prediction, std::span<const std::string> gold, std::string_view sentence) {
  const std::string pred = normalize_whitespace(prediction);
  const std::string pred_lower = ascii_lower(pred);
  const bool is_none = pred.empty() || pred_lower == kNoneAnswer;

  if (!gold.empty()) {
    for (const auto& g : gold) {
      if (ascii_lower(g) == pred_lower) return {MatchVerdict::kTruePositive, MatchRule::kExact};
    }
    const std::u32string p32 = lower32(pred);
    for (const auto& g : gold) {
      const std::u32string g32 = lower32(g);
      if (g32.empty()) continue;
      const double d = static_cast<double>(levenshtein(p32, g32)) / static_cast<double>(g32.size());
      if (d < kLevenshteinThreshold) return {MatchVerdict::kTruePositive, MatchRule::kLevenshtein};
    }
    if (is_none) return {MatchVerdict::kFalseNegative, MatchRule::kNoneToken};
    return {MatchVerdict::kFalsePositive, MatchRule::kNoMatch};
  }

  if (is_none) return {MatchVerdict::kTrueNegative, MatchRule::kNoneToken};
  std::set<std::string> words;
  for (const auto& w : split_whitespace(sentence)) words.insert(ascii_lower(w));
  for (const auto& w : split_whitespace(pred)) {
    if (words.count(ascii_lower(w))) return {MatchVerdict::kFalsePositive, MatchRule::kNoMatch};
  }
  return {MatchVerdict::kTrueNegative, MatchRule::kGarbageAsNone};
}

EvalRecord evaluate_prediction(const NerInstance& instance, NeType type, std::string_view prediction) {
  EvalRecord r;
  r.sentence_id = instance.id;
  r.gold = instance.answers(type);
  r.prediction = std::string(prediction);
  r.result = match(prediction, r.gold, instance.text);
  return r;
}

PrfScores f1(std::span<const EvalRecord> records) {
  PrfScores s;
  for (const auto& r : records) {
    switch (r.result.verdict) {
      case MatchVerdict::kTruePositive: ++s.tp; break;
      case MatchVerdict::kFalsePositive: ++s.fp; break;
      case MatchVerdict::kFalseNegative: ++s.fn; break;
      case MatchVerdict::kTrueNegative: ++s.tn; break;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; };
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::string Aggregate::format() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, std);
  return buf;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kEmptyInput, "aggregate of no values");
  Aggregate a;
  a.n = values.size();
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(a.n);
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(var / static_cast<double>(a.n));
  return a;
}

const char* to_string(SubstitutionMode m) {
  switch (m) {
    case SubstitutionMode::kAsIs: return "as_is";
    case SubstitutionMode::kSeen: return "seen";
    case SubstitutionMode::kUnseen: return "unseen";
  }
  return "as_is";
}

SubstitutionMode parse_substitution_mode(std::string_view text) {
  const std::string key = ascii_lower(trim(text));
  if (key == "as-is" || key == "asis" || key == "as_is") return SubstitutionMode::kAsIs;
  if (key == "seen") return SubstitutionMode::kSeen;
  if (key == "unseen") return SubstitutionMode::kUnseen;
  throw Error(ErrorKind::kConfig, "unknown substitution mode '" + std::string(text) + "'");
}

std::string random_unseen_string(SeededRng& rng, const std::unordered_set<std::string>& dictionary) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string s(kUnseenLength, 'a');
    for (auto& c : s) c = static_cast<char>('a' + rng.uniform_index(26));
    if (!dictionary.count(s)) return s;
  }
  throw Error(ErrorKind::kPrecondition, "could not draw a string outside the dictionary");
}

std::vector<NerInstance> substitute(std::span<const NerInstance> instances, const SubstitutionSpec& spec,
                                    std::uint64_t seed, std::span<const NeType> types) {
  std::vector<NerInstance> out(instances.begin(), instances.end());
  if (spec.mode == SubstitutionMode::kAsIs) return out;
  if (spec.mode == SubstitutionMode::kUnseen && spec.dictionary == nullptr) {
    throw Error(ErrorKind::kConfig, "unseen substitution needs a word list");
  }
  auto wanted = [&](NeType t) { return types.empty() || std::find(types.begin(), types.end(), t) != types.end(); };

  SeededRng rng(derive_seed(seed, "substitute"));
  for (auto& inst : out) {
    if (std::none_of(inst.entities.begin(), inst.entities.end(), [&](const GoldEntity& e) { return wanted(e.type); })) {
      continue;
    }
    std::string text;
    std::vector<GoldEntity> entities;
    std::size_t cursor = 0;
    for (const auto& e : inst.entities) {
      text.append(inst.text, cursor, e.begin - cursor);
      std::string replacement;
      if (!wanted(e.type)) {
        replacement = inst.surface(e);
      } else if (spec.mode == SubstitutionMode::kSeen) {
        auto it = spec.seen_pool.find(e.type);
        if (it == spec.seen_pool.end() || it->second.empty()) {
          throw Error(ErrorKind::kConfig, "seen pool for " + std::string(to_string(e.type)) + " is empty");
        }
        replacement = it->second[rng.uniform_index(it->second.size())];
      } else {
        replacement = random_unseen_string(rng, *spec.dictionary);
      }
      entities.push_back(GoldEntity{text.size(), text.size() + replacement.size(), e.type});
      text += replacement;
      cursor = e.end;
    }
    text.append(inst.text, cursor, std::string::npos);
    inst.text = std::move(text);
    inst.entities = std::move(entities);
  }
  return out;
}

std::vector<NerInstance> resample_test(std::span<const NerInstance> instances, NeType type, double ratio,
                                       std::uint64_t seed) {
  if (!(ratio > 0.0)) throw Error(ErrorKind::kPrecondition, "resampling ratio must be positive");
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].has(type)) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  const auto target = static_cast<std::size_t>(std::ceil(static_cast<double>(positives) / ratio));
  std::vector<bool> keep(instances.size(), false);
  for (std::size_t i = 0; i < instances.size(); ++i) keep[i] = instances[i].has(type);
  if (negatives.size() <= target) {
    for (std::size_t i : negatives) keep[i] = true;
  } else {
    SeededRng rng(derive_seed(seed, "resample"));
    for (std::size_t k : rng.sample_indices(negatives.size(), target)) keep[negatives[k]] = true;
  }
  std::vector<NerInstance> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (keep[i]) out.push_back(instances[i]);
  }
  return out;
}

std::map<NeType, std::vector<std::string>> parse_seen_pool(std::string_view text) {
  std::map<NeType, std::vector<std::string>> pool;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorKind::kParse, "seen pool line " + std::to_string(line_no) + ": expected '<type>\\t<surface>'");
    }
    const auto type = parse_ne_type(trim(line.substr(0, tab)));
    if (!type) throw Error(ErrorKind::kParse, "seen pool line " + std::to_string(line_no) + ": unknown type");
    std::string surface = normalize_whitespace(line.substr(tab + 1));
    if (!surface.empty()) pool[*type].push_back(std::move(surface));
  }
  return pool;
}

std::map<NeType, std::vector<std::string>> load_seen_pool(const std::filesystem::path& path) {
  return parse_seen_pool(read_text_file(path));
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  std::unordered_set<std::string> words;
  std::istringstream in(read_text_file(path));
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string_view w = trim(raw);
    if (w.empty() || w.front() == '#') continue;
    words.insert(ascii_lower(w));
  }
  return words;
}

nlohmann::ordered_json to_json(const EvalRecord& r) {
  return {{"sentence_id", r.sentence_id},
          {"gold", r.gold},
          {"prediction", r.prediction},
          {"verdict", to_string(r.result.verdict)},
          {"rule", to_string(r.result.rule)}};
}

nlohmann::ordered_json to_json(const PrfScores& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"tn", s.tn},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace nerprobe
