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

// Zero-shot entity typing: every (type, keyword) pair yields the statement
// "<mention> is a <keyword>", and the type whose statement is least
// perplexing wins.

#ifndef NERPROBE_NET_ZERO_SHOT_HPP_
#define NERPROBE_NET_ZERO_SHOT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "nerprobe/lm_backend.hpp"
#include "nerprobe/scoring.hpp"

namespace nerprobe {

struct TypeKeywordSet {
  NeType type = NeType::kPerson;
  std::vector<std::string> keywords;
};

// Stock keywords for each requested type, in request order:
//   person        person, character
//   organisation  organisation, company, group, institution, club, corporation
//   location      location, place, city, country
//   creative work work, title, movie, song, book
//   product / corporation / group: the type name only
std::vector<TypeKeywordSet> default_keyword_sets(std::span<const NeType> types);

// Throws kConfig naming every keyword that is not exactly one token under `lm`.
void check_single_token_keywords(std::span<const TypeKeywordSet> sets, const LanguageModel& lm);

std::string render_statement(std::string_view mention, std::string_view keyword);

enum class Aggregation {
  kMin,   // global minimum over all (type, keyword) statements
  kMean,  // per-type mean perplexity, then minimum over types (ablation)
};

struct StatementScore {
  NeType type = NeType::kPerson;
  std::string keyword;
  PerplexityResult ppl;
};

struct TypingResult {
  TypedMention mention;
  NeType predicted = NeType::kPerson;
  std::vector<StatementScore> statements;  // keyword-set order, then keyword order
};

// Issues exactly one score call per keyword. Ties go to the earlier keyword
// set, then the earlier keyword.
TypingResult classify(const TypedMention& mention, std::span<const TypeKeywordSet> sets,
                      const LanguageModel& lm, Aggregation aggregation = Aggregation::kMin);

// Picks the winning type from already-scored statements.
NeType select_type(std::span<const StatementScore> statements, std::span<const TypeKeywordSet> sets,
                   Aggregation aggregation);

struct TypingEvaluation {
  std::vector<NeType> types;
  Eigen::MatrixXi confusion;  // rows: gold, columns: predicted
  Eigen::VectorXd precision;
  Eigen::VectorXd recall;
  Eigen::VectorXd f1;
  double macro_f1 = 0.0;
  std::size_t total = 0;

  // Row-normalized confusion: share of gold type i predicted as type j.
  Eigen::MatrixXd confusion_rates() const;
};

// One-vs-rest scores over the multiclass confusion matrix.
template <typename Derived>
void one_vs_rest_scores(const Eigen::MatrixBase<Derived>& confusion, Eigen::VectorXd& precision,
                        Eigen::VectorXd& recall, Eigen::VectorXd& f1) {
  const Eigen::VectorXd tp = confusion.diagonal().template cast<double>();
  const Eigen::VectorXd predicted = confusion.colwise().sum().transpose().template cast<double>();
  const Eigen::VectorXd gold = confusion.rowwise().sum().template cast<double>();
  const Eigen::Index k = tp.size();
  precision.resize(k);
  recall.resize(k);
  f1.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    precision[i] = predicted[i] > 0 ? tp[i] / predicted[i] : 0.0;
    recall[i] = gold[i] > 0 ? tp[i] / gold[i] : 0.0;
    const double s = precision[i] + recall[i];
    f1[i] = s > 0 ? 2.0 * precision[i] * recall[i] / s : 0.0;
  }
}

TypingEvaluation evaluate_typing(std::span<const TypingResult> results, std::span<const NeType> types);

nlohmann::ordered_json to_json(const TypingResult& r);
nlohmann::ordered_json to_json(const TypingEvaluation& e);

}  // namespace nerprobe

#endif  // NERPROBE_NET_ZERO_SHOT_HPP_
