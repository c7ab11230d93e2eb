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

#include "nerprobe/net_zero_shot.hpp"

#include <limits>

namespace nerprobe {

std::vector<TypeKeywordSet> default_keyword_sets(std::span<const NeType> types) {
  std::vector<TypeKeywordSet> out;
  for (NeType t : types) {
    TypeKeywordSet set{t, {}};
    switch (t) {
      case NeType::kPerson:
        set.keywords = {"person", "character"};
        break;
      case NeType::kOrganisation:
        set.keywords = {"organisation", "company", "group", "institution", "club", "corporation"};
        break;
      case NeType::kLocation:
        set.keywords = {"location", "place", "city", "country"};
        break;
      case NeType::kCreativeWork:
        set.keywords = {"work", "title", "movie", "song", "book"};
        break;
      case NeType::kProduct:
        set.keywords = {"product"};
        break;
      case NeType::kCorporation:
        set.keywords = {"corporation"};
        break;
      case NeType::kGroup:
        set.keywords = {"group"};
        break;
    }
    out.push_back(std::move(set));
  }
  return out;
}

void check_single_token_keywords(std::span<const TypeKeywordSet> sets, const LanguageModel& lm) {
  std::string bad;
  for (const auto& set : sets) {
    for (const auto& kw : set.keywords) {
      const auto seq = lm.tokenize(kw, false);
      const bool single = seq.size() == 1 && seq.tokens[0].id != lm.descriptor().unknown_token.id;
      if (!single) bad += (bad.empty() ? "" : ", ") + kw + " (" + std::to_string(seq.size()) + " tokens)";
    }
  }
  if (!bad.empty()) throw Error(ErrorKind::kConfig, "keywords must be single in-vocabulary tokens: " + bad);
}

std::string render_statement(std::string_view mention, std::string_view keyword) {
  if (mention.empty() || keyword.empty()) {
    throw Error(ErrorKind::kPrecondition, "render_statement: mention and keyword must be non-empty");
  }
  std::string out;
  out.reserve(mention.size() + keyword.size() + 6);
  out.append(mention).append(" is a ").append(keyword);
  return out;
}

NeType select_type(std::span<const StatementScore> statements, std::span<const TypeKeywordSet> sets,
                   Aggregation aggregation) {
  if (statements.empty()) throw Error(ErrorKind::kPrecondition, "select_type: no statements");
  if (aggregation == Aggregation::kMin) {
    const StatementScore* best = &statements.front();
    for (const auto& s : statements) {
      if (s.ppl.value < best->ppl.value) best = &s;
    }
    return best->type;
  }
  NeType best_type = sets.front().type;
  double best_mean = std::numeric_limits<double>::infinity();
  for (const auto& set : sets) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : statements) {
      if (s.type == set.type) {
        sum += s.ppl.value;
        ++n;
      }
    }
    if (n > 0 && sum / static_cast<double>(n) < best_mean) {
      best_mean = sum / static_cast<double>(n);
      best_type = set.type;
    }
  }
  return best_type;
}

TypingResult classify(const TypedMention& mention, std::span<const TypeKeywordSet> sets,
                      const LanguageModel& lm, Aggregation aggregation) {
  if (sets.size() < 2) throw Error(ErrorKind::kPrecondition, "classify: at least two types are required");
  for (const auto& set : sets) {
    if (set.keywords.empty()) {
      throw Error(ErrorKind::kPrecondition,
                  "classify: type '" + std::string(to_string(set.type)) + "' has no keywords");
    }
  }
  TypingResult result;
  result.mention = mention;
  for (const auto& set : sets) {
    for (const auto& kw : set.keywords) {
      const auto seq = tokenize_and_score(lm, render_statement(mention.surface, kw), false);
      result.statements.push_back(StatementScore{set.type, kw, perplexity(seq, false)});
    }
  }
  result.predicted = select_type(result.statements, sets, aggregation);
  return result;
}

Eigen::MatrixXd TypingEvaluation::confusion_rates() const {
  Eigen::MatrixXd rates = confusion.cast<double>();
  for (Eigen::Index i = 0; i < rates.rows(); ++i) {
    const double row = rates.row(i).sum();
    if (row > 0) rates.row(i) /= row;
  }
  return rates;
}

TypingEvaluation evaluate_typing(std::span<const TypingResult> results, std::span<const NeType> types) {
  if (results.empty()) throw Error(ErrorKind::kEmptyInput, "evaluate_typing: no results");
  auto index_of = [&](NeType t) -> Eigen::Index {
    auto it = std::find(types.begin(), types.end(), t);
    if (it == types.end()) {
      throw Error(ErrorKind::kPrecondition,
                  "evaluate_typing: type '" + std::string(to_string(t)) + "' outside the type set");
    }
    return static_cast<Eigen::Index>(it - types.begin());
  };
  TypingEvaluation eval;
  eval.types.assign(types.begin(), types.end());
  const auto k = static_cast<Eigen::Index>(types.size());
  eval.confusion = Eigen::MatrixXi::Zero(k, k);
  for (const auto& r : results) ++eval.confusion(index_of(r.mention.type), index_of(r.predicted));
  eval.total = results.size();
  one_vs_rest_scores(eval.confusion, eval.precision, eval.recall, eval.f1);
  eval.macro_f1 = eval.f1.mean();
  return eval;
}

nlohmann::ordered_json to_json(const TypingResult& r) {
  nlohmann::ordered_json statements = nlohmann::ordered_json::array();
  for (const auto& s : r.statements) {
    statements.push_back({{"type", to_string(s.type)},
                          {"keyword", s.keyword},
                          {"ppl", s.ppl.value},
                          {"log_ppl", s.ppl.log_value},
                          {"tokens", s.ppl.token_count}});
  }
  return {{"mention", r.mention.surface},
          {"gold", to_string(r.mention.type)},
          {"source", r.mention.source},
          {"predicted", to_string(r.predicted)},
          {"statements", std::move(statements)}};
}

nlohmann::ordered_json to_json(const TypingEvaluation& e) {
  nlohmann::ordered_json per_type = nlohmann::ordered_json::array();
  const Eigen::MatrixXd rates = e.confusion_rates();
  for (std::size_t i = 0; i < e.types.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    nlohmann::ordered_json rate_row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < e.confusion.cols(); ++j) {
      row.push_back(e.confusion(ii, j));
      rate_row.push_back(rates(ii, j));
    }
    per_type.push_back({{"type", to_string(e.types[i])},
                        {"precision", e.precision[ii]},
                        {"recall", e.recall[ii]},
                        {"f1", e.f1[ii]},
                        {"support", e.confusion.row(ii).sum()},
                        {"confusion_row", std::move(row)},
                        {"confusion_rates", std::move(rate_row)}});
  }
  return {{"total", e.total}, {"macro_f1", e.macro_f1}, {"per_type", std::move(per_type)}};
}

}  // namespace nerprobe
