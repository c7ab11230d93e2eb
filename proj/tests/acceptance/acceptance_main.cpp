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

// Acceptance checks. Prints one PASS/FAIL line per check and exits non-zero
// if any check fails. Expected values come from hand-built fixtures and from
// the brute-force table reader in table_oracle.hpp.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nerprobe/commands.hpp"
#include "nerprobe/datasets.hpp"
#include "nerprobe/evaluation.hpp"
#include "nerprobe/exposure.hpp"
#include "nerprobe/ner_few_shot.hpp"
#include "nerprobe/net_zero_shot.hpp"
#include "nerprobe/reference_lm.hpp"
#include "nerprobe/replay_backend.hpp"
#include "nerprobe/scoring.hpp"
#include "table_oracle.hpp"

using namespace nerprobe;

namespace {

const std::filesystem::path kTestData = NERPROBE_TEST_DATA_DIR;
const std::filesystem::path kFixtures = kTestData / "acceptance";
const std::filesystem::path kDataDir = NERPROBE_DATA_DIR;

struct Failure {
  std::string reason;
};

void expect(bool ok, const std::string& reason) {
  if (!ok) throw Failure{reason};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- perplexity ------------------------------------------------------------

constexpr const char* kTwelveTokenTable = R"(@name twelve
@fallback 0.004
@vocab g h i
| a | 0.2
| b | 0.15
| c | 0.1
| d | 0.05
a | b | 0.5
a | c | 0.2
b | a | 0.3
b | d | 0.3
c | e | 0.6
d | f | 0.25
e | a | 0.1
a b | c | 0.7
b a | b | 0.4
c e | a | 0.55
d f | g | 0.9
a b c | d | 0.8
f | h | 0.33
g | i | 0.12
)";

void check_perplexity() {
  const ReferenceLm lm(parse_reference_table(kTwelveTokenTable));
  const auto oracle = oracle::Table::parse(kTwelveTokenTable);
  expect(lm.descriptor().vocab_size == 12, "table vocabulary is not 12 tokens");
  expect(oracle.vocab.size() == 12, "oracle vocabulary is not 12 tokens");

  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g", "h", "i"};
  std::mt19937_64 gen(20240611);
  std::vector<std::vector<std::string>> seqs;
  for (int n = 0; n < 200; ++n) {
    std::vector<std::string> s(1 + gen() % 12);
    for (auto& w : s) w = words[gen() % words.size()];
    seqs.push_back(std::move(s));
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> got;
  for (const auto& s : seqs) {
    std::string text;
    for (const auto& w : s) text += (text.empty() ? "" : " ") + w;
    got.push_back(perplexity(tokenize_and_score(lm, text, false), false).value);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  double worst = 0.0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const double want = oracle.perplexity(seqs[i]);
    worst = std::max(worst, std::abs(got[i] - want) / want);
  }
  expect(worst <= 1e-9, "max relative error " + num(worst));
  expect(seconds < 1.0, "took " + num(seconds) + " s");
}

// --- exposure --------------------------------------------------------------

constexpr const char* kExposureTable = R"(@name exposure
@fallback 1e-06
@split zune zu ##ne
| alpha | 0.2
alpha | beta | 0.9
zu | ##ne | 0.9
)";

void check_exposure() {
  const ReferenceLm lm(parse_reference_table(kExposureTable));
  const ThresholdPolicy policy{ExposureMetric::kTransition, 0.001, 1e-05};
  const std::vector<TypedMention> mentions{{"alpha beta", NeType::kPerson, "fixture"},
                                           {"alpha qzqz", NeType::kPerson, "fixture"}};
  const auto p = partition(mentions, policy, lm);
  expect(p.failures.empty(), "scoring failed");
  expect(p.memorized.size() == 1 && p.memorized[0].mention.surface == "alpha beta", "alpha beta not memorized");
  expect(p.unmemorized.size() == 1 && p.unmemorized[0].mention.surface == "alpha qzqz",
         "alpha qzqz not unmemorized");
  expect(std::abs(*p.memorized[0].transition - 0.9) <= 1e-12, "transition exposure " + num(*p.memorized[0].transition));
  expect(*p.unmemorized[0].transition <= 1e-05, "fallback transition " + num(*p.unmemorized[0].transition));

  for (const char* text : {"zune", "alpha zune"}) {
    const auto seq = tokenize_and_score(lm, text, true);
    const double w = word_exposure(seq);
    expect(std::abs(w - 0.9) <= 1e-12, std::string("word exposure of '") + text + "' is " + num(w));
  }
}

// --- rank exposure ---------------------------------------------------------

constexpr const char* kCandidateTable = R"(@name candidates
@fallback 0.0001
the | c1 | 0.30
the | c2 | 0.20
the | c3 | 0.15
the | c4 | 0.10
the | c5 | 0.08
the | c6 | 0.05
the | c7 | 0.02
the | c8 | 0.01
| the | 0.5
)";

void check_carlini() {
  const ReferenceLm lm(parse_reference_table(kCandidateTable));
  std::vector<TypedMention> cands;
  for (int i = 1; i <= 8; ++i) cands.push_back({"c" + std::to_string(i), NeType::kProduct, ""});
  const double best = carlini_exposure(cands[0], cands, lm, "the");
  const double worst = carlini_exposure(cands[7], cands, lm, "the");
  const double third = carlini_exposure(cands[2], cands, lm, "the");
  expect(best == 3.0, "rank 1 exposure " + num(best));
  expect(worst == 0.0, "rank 8 exposure " + num(worst));
  expect(std::abs(third - (3.0 - std::log2(3.0))) < 1e-15, "rank 3 exposure " + num(third));
}

// --- zero-shot typing ------------------------------------------------------

void check_net() {
  const std::vector<NeType> types{NeType::kPerson, NeType::kLocation, NeType::kOrganisation};
  const std::vector<TypeKeywordSet> sets{{NeType::kPerson, {"person", "character"}},
                                         {NeType::kLocation, {"city", "country"}},
                                         {NeType::kOrganisation, {"company", "club"}}};
  // Designed outcome of the fixture, gold rows by predicted columns.
  const int hand[3][3] = {{8, 1, 1}, {1, 9, 0}, {0, 2, 8}};
  const double hand_f1[3] = {16.0 / 19.0, 18.0 / 22.0, 16.0 / 19.0};

  // Brute force: every statement through the oracle, first strict minimum wins.
  const auto oracle = oracle::Table::parse(read_text_file(kFixtures / "net30.table"));
  int brute[3][3] = {};
  std::size_t mentions = 0;
  for (std::size_t g = 0; g < types.size(); ++g) {
    const std::string file = "net30_" + std::string(to_string(types[g])) + ".txt";
    for (const auto& m : load_ne_list(kFixtures / file, types[g])) {
      ++mentions;
      double best = INFINITY;
      std::size_t pred = 0;
      for (std::size_t t = 0; t < sets.size(); ++t) {
        for (const auto& kw : sets[t].keywords) {
          std::vector<std::string> toks = split_whitespace(m.surface + " is a " + kw);
          const double ppl = oracle.perplexity(toks);
          if (ppl < best) {
            best = ppl;
            pred = t;
          }
        }
      }
      ++brute[g][pred];
    }
  }
  expect(mentions == 30, "fixture has " + std::to_string(mentions) + " mentions");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      expect(brute[i][j] == hand[i][j], "oracle disagrees with the hand matrix at " + std::to_string(i) + "," +
                                            std::to_string(j));
    }
  }

  // The pipeline, driven through a run configuration.
  const auto out_dir = std::filesystem::temp_directory_path() / "nerprobe_acceptance_net";
  nlohmann::json doc = {
      {"backend", {{"reference_table", "net30.table"}}},
      {"seeds", nlohmann::json::array({0})},
      {"output_dir", out_dir.string()},
      {"types", {"person", "location", "organisation"}},
      {"keyword_sets", {{"person", {"person", "character"}}, {"location", {"city", "country"}},
                        {"organisation", {"company", "club"}}}},
      {"mentions", {{{"path", "net30_person.txt"}, {"type", "person"}},
                    {{"path", "net30_location.txt"}, {"type", "location"}},
                    {{"path", "net30_organisation.txt"}, {"type", "organisation"}}}}};
  const RunConfig config = parse_run_config(doc, Experiment::kNet, kFixtures);
  const auto lm = make_backend(config.backend);
  const auto result = cmd_net(config, *lm);
  std::filesystem::remove_all(out_dir);
  expect(result.failures.empty(), "pipeline reported failures");
  const auto& per_type = result.summary["groups"]["all"]["per_type"];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      expect(per_type[i]["confusion_row"][j].get<int>() == hand[i][j],
             "pipeline confusion differs at " + std::to_string(i) + "," + std::to_string(j));
    }
    const double f1 = per_type[i]["f1"].get<double>();
    expect(std::abs(f1 - hand_f1[i]) < 1e-12, "F1 of " + std::string(to_string(types[i])) + " is " + num(f1));
  }
}

// --- prompt golden file ----------------------------------------------------

void check_golden_prompt() {
  const std::vector<Shot> shots{make_shot("I don't like to be stuck at home", "none"),
                                make_shot("Where is Gelato Gilberto?", "none"),
                                make_shot("Well, I was gonna buy a Zune HD", "Zune HD"),
                                make_shot("BEAUTY TIPS: SK-II UV Cream", "SK-II UV Cream")};
  const auto p = render_prompt(shots, "CVS sells their own epipen", to_string(NeType::kProduct));
  const std::string golden = read_text_file(kTestData / "fig2_prompt.txt");
  if (p.rendered != golden) {
    std::size_t at = 0;
    while (at < std::min(p.rendered.size(), golden.size()) && p.rendered[at] == golden[at]) ++at;
    throw Failure{"first differing byte at offset " + std::to_string(at)};
  }
  expect(std::count(golden.begin(), golden.end(), '\n') == 9, "golden file is not ten lines");
}

// --- few-shot loop ---------------------------------------------------------

struct ScoredRow {
  std::string id, sentence, prediction, verdict;
};

std::vector<ScoredRow> load_scored_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<ScoredRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cols.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    expect(cols.size() == 6, "malformed scored row: " + line);
    rows.push_back({cols[0], cols[1], cols[3], cols[5]});
  }
  return rows;
}

// Text outside the entity spans, in order.
std::vector<std::string> outside_text(const NerInstance& inst) {
  std::vector<std::string> out;
  std::size_t cursor = 0;
  for (const auto& e : inst.entities) {
    out.push_back(inst.text.substr(cursor, e.begin - cursor));
    cursor = e.end;
  }
  out.push_back(inst.text.substr(cursor));
  return out;
}

void check_few_shot() {
  const auto merge = TypeMergeMap::load(kDataDir / "merge" / "conll2003.map");
  const auto train = to_instances(apply_merge(load_conll(kFixtures / "fewshot_train.conll").sentences, merge), "train");
  const auto test = to_instances(apply_merge(load_conll(kFixtures / "fewshot_test.conll").sentences, merge), "test");
  const auto rows = load_scored_csv(kFixtures / "fewshot_scored.csv");
  expect(test.size() == 60 && rows.size() == 60, "fixture is not 60 sentences");

  const auto lm = ReplayLm::from_file(kFixtures / "fewshot_replay.json");
  ExtractionSettings settings;
  settings.type = NeType::kPerson;
  settings.calibrate = false;
  settings.workers = 4;
  const auto run = run_extraction(train, test, settings, 13, lm);
  expect(run.shots.size() == 16, "expected 16 shots");

  std::vector<EvalRecord> records;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    expect(run.answers[i].ok(), "extraction failed for " + test[i].id + ": " + run.answers[i].error);
    const auto& row = rows[i];
    expect(row.id == test[i].id && row.sentence == test[i].text, "row order differs at " + row.id);
    expect(*run.answers[i].value == row.prediction, row.id + ": prediction '" + *run.answers[i].value + "'");
    records.push_back(evaluate_prediction(test[i], NeType::kPerson, *run.answers[i].value));
    expect(to_string(records.back().result.verdict) == row.verdict,
           row.id + ": verdict " + to_string(records.back().result.verdict) + ", hand-scored " + row.verdict);
    tp += row.verdict == "true_positive";
    fp += row.verdict == "false_positive";
    fn += row.verdict == "false_negative";
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double f = 2.0 * precision * recall / (precision + recall);
  const auto s = f1(records);
  expect(std::abs(s.precision - precision) < 1e-12, "precision " + num(s.precision) + " vs " + num(precision));
  expect(std::abs(s.recall - recall) < 1e-12, "recall " + num(s.recall) + " vs " + num(recall));
  expect(std::abs(s.f1 - f) < 1e-12, "F1 " + num(s.f1) + " vs " + num(f));

  // Substitution may touch gold spans only.
  const auto words = load_word_list(kDataDir / "english_words_len8.txt");
  SubstitutionSpec seen;
  seen.mode = SubstitutionMode::kSeen;
  seen.seen_pool = load_seen_pool(kDataDir / "memorized_nes.txt");
  SubstitutionSpec unseen;
  unseen.mode = SubstitutionMode::kUnseen;
  unseen.dictionary = &words;
  for (const auto* spec : {&seen, &unseen}) {
    const auto changed = substitute(test, *spec, 13);
    std::size_t replaced = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      expect(changed[i].entities.size() == test[i].entities.size(), test[i].id + ": entity count changed");
      expect(outside_text(changed[i]) == outside_text(test[i]),
             test[i].id + ": text outside gold spans changed (" + to_string(spec->mode) + ")");
      for (std::size_t k = 0; k < test[i].entities.size(); ++k) {
        expect(changed[i].entities[k].type == test[i].entities[k].type, test[i].id + ": entity type changed");
        replaced += changed[i].surface(changed[i].entities[k]) != test[i].surface(test[i].entities[k]);
      }
    }
    expect(replaced > 0, std::string(to_string(spec->mode)) + " substitution replaced nothing");
  }
}

// --- calibration -----------------------------------------------------------

void check_calibration() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  auto random_dist = [&](Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(gen);
    return Eigen::VectorXd(v / v.sum());
  };

  for (Eigen::Index n : {2, 3, 7, 50, 257}) {
    const Eigen::VectorXd cf = random_dist(n);
    const auto state = CalibrationState::from_distribution(cf);
    const Eigen::VectorXd out = calibrate_first_token(cf, state);
    for (Eigen::Index i = 0; i < n; ++i) {
      expect(out[i] == 1.0 / static_cast<double>(n), "not uniform at size " + std::to_string(n) + ": " + num(out[i]));
    }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(gen() % 40);
    const Eigen::VectorXd raw = random_dist(n);
    const Eigen::VectorXd cf = random_dist(n);
    const Eigen::VectorXd out = calibrate_first_token(raw, CalibrationState::from_distribution(cf));
    std::vector<Eigen::Index> by_ratio(n), by_output(n);
    std::iota(by_ratio.begin(), by_ratio.end(), 0);
    std::iota(by_output.begin(), by_output.end(), 0);
    std::stable_sort(by_ratio.begin(), by_ratio.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return raw[a] / cf[a] > raw[b] / cf[b]; });
    std::stable_sort(by_output.begin(), by_output.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return out[a] > out[b]; });
    expect(by_ratio == by_output, "ranking differs on pair " + std::to_string(trial));
  }
}

// --- CoNLL parser ----------------------------------------------------------

void check_parser() {
  const std::string text = read_text_file(kTestData / "conll_five.txt");
  bool strict_rejects = false;
  try {
    parse_conll(text, BioMode::kStrict);
  } catch (const Error&) {
    strict_rejects = true;
  }
  expect(strict_rejects, "strict mode accepted the malformed tag");

  const auto lenient = parse_conll(text, BioMode::kLenient);
  expect(lenient.sentences.size() == 5, std::to_string(lenient.sentences.size()) + " sentences");
  expect(lenient.repairs == 1, "repairs " + std::to_string(lenient.repairs));

  const std::string written = serialize_conll(lenient.sentences);
  const auto again = parse_conll(written, BioMode::kStrict);
  expect(again.repairs == 0, "round trip needed repairs");
  expect(again.sentences == lenient.sentences, "round trip changed the sentences");
  expect(serialize_conll(again.sentences) == written, "serialization is not stable");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> checks{
      {"perplexity matches brute-force oracle on 200 sequences", check_perplexity},
      {"exposure partition and word-exposure branch", check_exposure},
      {"rank exposure over 8 candidates", check_carlini},
      {"zero-shot typing on 30 mentions", check_net},
      {"prompt golden file", check_golden_prompt},
      {"few-shot replay run and substitution", check_few_shot},
      {"calibration uniformity and ranking", check_calibration},
      {"CoNLL repair and round trip", check_parser},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    try {
      fn();
      std::cout << "PASS " << name << '\n';
    } catch (const Failure& f) {
      ++failed;
      std::cout << "FAIL " << name << ": " << f.reason << '\n';
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL " << name << ": unexpected error: " << e.what() << '\n';
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << " in "
            << num(std::round(seconds * 1000.0) / 1000.0) << " s\n";
  return failed == 0 ? 0 : 1;
}
