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

#include "nerprobe/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "nerprobe/exposure.hpp"
#include "nerprobe/ner_few_shot.hpp"
#include "nerprobe/remote_backend.hpp"
#include "nerprobe/scoring.hpp"

namespace nerprobe {

namespace {

using ojson = nlohmann::ordered_json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string jsonl(const std::vector<ojson>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump();
    out += '\n';
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Left-aligned first column, right-aligned rest.
std::string align_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], utf8_decode(r[i]).size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::size_t pad = width[i] - utf8_decode(r[i]).size();
      if (i > 0) line += "  ";
      if (i == 0) {
        line += r[i] + std::string(pad, ' ');
      } else {
        line += std::string(pad, ' ') + r[i];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

void emit(CommandResult& result, const RunConfig& config, const std::string& name, const std::string& content) {
  write_file_atomic(config.output_dir / name, content);
  result.outputs.push_back(name);
}

template <typename R>
void collect_failures(const std::vector<ItemOutcome<R>>& outcomes, const std::vector<std::string>& names,
                      std::size_t offset, std::vector<ItemFailure>& failures) {
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok()) {
      failures.push_back(ItemFailure{offset + i, names[i], outcomes[i].error, outcomes[i].error_kind});
    }
  }
}

void finish(CommandResult& result) {
  std::set<std::size_t> failed;
  for (const auto& f : result.failures) failed.insert(f.index);
  const bool too_many = result.items > 0 && static_cast<double>(failed.size()) >
                                                kFailureTolerance * static_cast<double>(result.items);
  result.exit_code = too_many ? kExitTooManyFailures : kExitOk;
}

std::vector<TaggedSentence> load_split(const std::filesystem::path& path, const RunConfig& config,
                                       std::size_t& repairs) {
  auto parsed = load_conll(path, config.datasets.bio_mode);
  repairs += parsed.repairs;
  if (!config.datasets.merge_map) return std::move(parsed.sentences);
  return apply_merge(parsed.sentences, TypeMergeMap::load(*config.datasets.merge_map));
}

bool wanted_type(const RunConfig& config, NeType t) {
  return config.types.empty() || std::find(config.types.begin(), config.types.end(), t) != config.types.end();
}

std::vector<std::string> surfaces(std::span<const TypedMention> mentions) {
  std::vector<std::string> out;
  out.reserve(mentions.size());
  for (const auto& m : mentions) out.push_back(m.surface);
  return out;
}

ojson failure_json(const ItemFailure& f) {
  ojson j = {{"index", f.index}, {"item", f.item}, {"message", f.message}};
  j["kind"] = f.kind ? ojson(to_string(*f.kind)) : ojson();
  return j;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kConfig, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::kConfig, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<TypedMention> load_configured_mentions(const RunConfig& config) {
  std::vector<TypedMention> out;
  for (const auto& src : config.mentions) {
    if (!wanted_type(config, src.type)) continue;
    auto list = load_ne_list(src.path, src.type, NeListOptions{src.drop_one_word, src.source});
    out.insert(out.end(), list.begin(), list.end());
  }
  std::vector<std::vector<TaggedSentence>> splits;
  std::size_t repairs = 0;
  for (const auto& p : {config.datasets.train, config.datasets.dev, config.datasets.test}) {
    if (p) splits.push_back(load_split(*p, config, repairs));
  }
  if (!splits.empty()) {
    for (auto& m : collect_mentions(splits, "corpus")) {
      if (wanted_type(config, m.type)) out.push_back(std::move(m));
    }
  }
  if (out.empty()) throw Error(ErrorKind::kEmptyInput, "no mentions to process");
  return out;
}

CommandResult cmd_net(const RunConfig& config, const LanguageModel& lm) {
  CommandResult result;
  check_single_token_keywords(config.keyword_sets, lm);
  std::vector<TypedMention> mentions = load_configured_mentions(config);
  const auto names = surfaces(mentions);
  result.items = mentions.size();

  const auto typed = parallel_map<TypingResult>(mentions.size(), config.workers, [&](std::size_t i) {
    return classify(mentions[i], config.keyword_sets, lm, config.aggregation);
  });
  collect_failures(typed, names, 0, result.failures);

  const bool need_verdicts =
      std::any_of(config.groups.begin(), config.groups.end(), [](const std::string& g) { return g != "all"; });
  std::vector<ItemOutcome<ExposureReport>> reports;
  if (need_verdicts) {
    reports = parallel_map<ExposureReport>(mentions.size(), config.workers, [&](std::size_t i) {
      return exposure_report(mentions[i], *config.policy, lm);
    });
    collect_failures(reports, names, 0, result.failures);
  }

  std::vector<ojson> lines;
  for (std::size_t i = 0; i < typed.size(); ++i) {
    if (!typed[i].ok()) continue;
    ojson line = to_json(*typed[i].value);
    if (need_verdicts) line["verdict"] = reports[i].ok() ? ojson(to_string(reports[i].value->verdict)) : ojson();
    lines.push_back(std::move(line));
  }
  emit(result, config, "net_results.jsonl", jsonl(lines));

  ojson groups = ojson::object();
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> head{"type"};
  for (const auto& g : config.groups) head.push_back(g);
  table.push_back(head);
  std::vector<std::vector<std::string>> rows(config.types.size() + 2);
  for (std::size_t t = 0; t < config.types.size(); ++t) rows[t].push_back(std::string(to_string(config.types[t])));
  rows[config.types.size()].push_back("macro");
  rows[config.types.size() + 1].push_back("n");

  for (const auto& g : config.groups) {
    std::vector<TypingResult> subset;
    for (std::size_t i = 0; i < typed.size(); ++i) {
      if (!typed[i].ok()) continue;
      if (g != "all") {
        if (!reports[i].ok()) continue;
        const Verdict want = g == "memorized" ? Verdict::kMemorized : Verdict::kUnmemorized;
        if (reports[i].value->verdict != want) continue;
      }
      subset.push_back(*typed[i].value);
    }
    if (subset.empty()) {
      groups[g] = ojson();
      for (std::size_t t = 0; t < config.types.size() + 1; ++t) rows[t].push_back("-");
      rows[config.types.size() + 1].push_back("0");
      continue;
    }
    const auto eval = evaluate_typing(subset, config.types);
    groups[g] = to_json(eval);
    for (std::size_t t = 0; t < config.types.size(); ++t) {
      rows[t].push_back(fixed(eval.f1[static_cast<Eigen::Index>(t)], 2));
    }
    rows[config.types.size()].push_back(fixed(eval.macro_f1, 2));
    rows[config.types.size() + 1].push_back(std::to_string(eval.total));
  }
  table.insert(table.end(), rows.begin(), rows.end());

  result.summary = {{"experiment", "net"}, {"mentions", mentions.size()}, {"groups", std::move(groups)}};
  result.summary_text = align_table(table);
  emit(result, config, "net_summary.json", result.summary.dump(2) + "\n");
  emit(result, config, "net_summary.txt", result.summary_text);
  finish(result);
  return result;
}

CommandResult cmd_exposure(const RunConfig& config, const LanguageModel& lm) {
  CommandResult result;
  const auto& policy = *config.policy;
  policy.validate();
  std::vector<TypedMention> mentions = load_configured_mentions(config);
  const auto names = surfaces(mentions);
  result.items = mentions.size();

  auto reports = parallel_map<ExposureReport>(mentions.size(), config.workers,
                                              [&](std::size_t i) { return exposure_report(mentions[i], policy, lm); });
  collect_failures(reports, names, 0, result.failures);

  if (config.carlini) {
    // Candidate set: every successfully scored mention of the same type.
    const auto ppls = parallel_map<double>(mentions.size(), config.workers, [&](std::size_t i) {
      const std::string text = config.carlini_query_prefix.empty()
                                   ? mentions[i].surface
                                   : config.carlini_query_prefix + " " + mentions[i].surface;
      return perplexity(tokenize_and_score(lm, text, false), false).value;
    });
    std::map<NeType, std::vector<double>> by_type;
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      if (ppls[i].ok()) by_type[mentions[i].type].push_back(*ppls[i].value);
    }
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      if (!reports[i].ok() || !ppls[i].ok()) continue;
      const auto& group = by_type[mentions[i].type];
      if (group.size() < 2) continue;
      reports[i].value->carlini = rank_exposure(rank_of(*ppls[i].value, group), group.size());
    }
  }

  std::vector<ojson> lines;
  std::map<NeType, std::map<Verdict, std::size_t>> counts;
  std::map<Verdict, std::size_t> totals;
  for (const auto& r : reports) {
    if (!r.ok()) continue;
    lines.push_back(to_json(*r.value));
    ++counts[r.value->mention.type][r.value->verdict];
    ++totals[r.value->verdict];
  }
  emit(result, config, "exposure_reports.jsonl", jsonl(lines));

  const Verdict order[] = {Verdict::kMemorized, Verdict::kUnmemorized, Verdict::kUnclassified};
  ojson per_type = ojson::object();
  std::vector<std::vector<std::string>> table{{"type", "memorized", "unmemorized", "unclassified"}};
  for (const auto& [type, c] : counts) {
    ojson cell = ojson::object();
    std::vector<std::string> row{std::string(to_string(type))};
    for (Verdict v : order) {
      const auto it = c.find(v);
      const std::size_t n = it == c.end() ? 0 : it->second;
      cell[to_string(v)] = n;
      row.push_back(std::to_string(n));
    }
    per_type[std::string(to_string(type))] = std::move(cell);
    table.push_back(std::move(row));
  }
  ojson total = ojson::object();
  std::vector<std::string> total_row{"total"};
  for (Verdict v : order) {
    total[to_string(v)] = totals[v];
    total_row.push_back(std::to_string(totals[v]));
  }
  table.push_back(std::move(total_row));

  result.summary = {{"experiment", "exposure"},
                    {"policy",
                     {{"metric", to_string(policy.metric)},
                      {"memorized_min", policy.memorized_min},
                      {"unmemorized_max", policy.unmemorized_max}}},
                    {"mentions", mentions.size()},
                    {"failed", result.failures.size()},
                    {"counts", std::move(total)},
                    {"per_type", std::move(per_type)}};
  result.summary_text = align_table(table);
  emit(result, config, "exposure_summary.json", result.summary.dump(2) + "\n");
  emit(result, config, "exposure_summary.txt", result.summary_text);
  finish(result);
  return result;
}

CommandResult cmd_profile(const RunConfig& config, const LanguageModel& lm) {
  CommandResult result;
  std::vector<TypedMention> mentions = load_configured_mentions(config);
  result.items = mentions.size();
  auto profile = perplexity_profile(mentions, lm, config.workers);
  result.failures = profile.failures;

  std::vector<std::vector<std::string>> table{{"tokens", "count", "mean_log_ppl", "std_log_ppl"}};
  for (const auto& b : profile.buckets) {
    table.push_back({std::to_string(b.tokens_per_ne), std::to_string(b.count), fixed(b.mean_log_ppl, 4),
                     fixed(b.std_log_ppl, 4)});
  }
  result.summary = {{"experiment", "profile"},
                    {"mentions", mentions.size()},
                    {"failed", profile.failures.size()},
                    {"buckets", profile_to_json(profile.buckets)}};
  result.summary_text = align_table(table);
  emit(result, config, "profile.json", result.summary.dump(2) + "\n");
  emit(result, config, "profile.txt", result.summary_text);
  finish(result);
  return result;
}

CommandResult cmd_ner(const RunConfig& config, const LanguageModel& lm) {
  CommandResult result;
  const auto& ner = config.ner;
  std::size_t repairs = 0;
  const auto train = to_instances(load_split(*config.datasets.train, config, repairs), "train");
  const auto test = to_instances(load_split(*config.datasets.test, config, repairs), "test");

  SubstitutionSpec spec_template;
  std::unordered_set<std::string> dictionary;
  if (ner.seen_pool) spec_template.seen_pool = load_seen_pool(*ner.seen_pool);
  if (ner.word_list) {
    dictionary = load_word_list(*ner.word_list);
    spec_template.dictionary = &dictionary;
  }

  std::vector<ojson> record_lines;
  std::vector<ojson> prompt_lines;
  ojson cells = ojson::array();
  std::vector<std::vector<std::string>> table;
  {
    std::vector<std::string> head{"type"};
    for (auto m : ner.modes) head.push_back(to_string(m));
    table.push_back(std::move(head));
  }

  for (NeType type : config.types) {
    const std::string label(to_string(type));
    std::vector<std::string> row{label};
    for (SubstitutionMode mode : ner.modes) {
      std::vector<double> f1s, precisions, recalls;
      ojson per_seed = ojson::array();
      for (std::uint64_t seed : config.seeds) {
        const auto subset = ner.resample ? resample_test(test, type, ner.resample_ratio, seed)
                                         : std::vector<NerInstance>(test.begin(), test.end());
        SubstitutionSpec spec = spec_template;
        spec.mode = mode;
        const NeType only[] = {type};
        const auto variant = substitute(subset, spec, seed, only);

        ExtractionSettings settings;
        settings.type = type;
        settings.n_total = ner.shots;
        settings.n_positive = ner.positive_shots;
        settings.max_new_tokens = ner.max_new_tokens;
        settings.calibrate = ner.calibrate;
        settings.workers = config.workers;
        const auto run = run_extraction(train, variant, settings, seed, lm);

        std::vector<EvalRecord> records;
        for (std::size_t i = 0; i < variant.size(); ++i) {
          ++result.items;
          const auto& outcome = run.answers[i];
          if (!outcome.ok()) {
            result.failures.push_back(ItemFailure{result.items - 1, label + "/" + to_string(mode) + "/" +
                                                                        std::to_string(seed) + "/" + variant[i].id,
                                                  outcome.error, outcome.error_kind});
            continue;
          }
          records.push_back(evaluate_prediction(variant[i], type, *outcome.value));
          ojson line = {{"type", label}, {"mode", to_string(mode)}, {"seed", seed}};
          line.update(to_json(records.back()));
          record_lines.push_back(std::move(line));
        }
        if (ner.dump_prompts) {
          if (ner.calibrate) {
            prompt_lines.push_back({{"type", label},
                                    {"mode", to_string(mode)},
                                    {"seed", seed},
                                    {"sentence_id", "content-free"},
                                    {"prompt", render_prompt(run.shots, kContentFreeInput, label).rendered}});
          }
          for (std::size_t i = 0; i < variant.size(); ++i) {
            prompt_lines.push_back({{"type", label},
                                    {"mode", to_string(mode)},
                                    {"seed", seed},
                                    {"sentence_id", variant[i].id},
                                    {"prompt", run.prompts[i].rendered}});
          }
        }
        const auto scores = f1(records);
        f1s.push_back(scores.f1);
        precisions.push_back(scores.precision);
        recalls.push_back(scores.recall);
        ojson seed_json = {{"seed", seed}, {"sentences", variant.size()}};
        seed_json.update(to_json(scores));
        per_seed.push_back(std::move(seed_json));
      }
      const auto agg = aggregate(f1s);
      cells.push_back({{"type", label},
                       {"mode", to_string(mode)},
                       {"f1", agg.format()},
                       {"f1_mean", agg.mean},
                       {"f1_std", agg.std},
                       {"precision_mean", aggregate(precisions).mean},
                       {"recall_mean", aggregate(recalls).mean},
                       {"seeds", std::move(per_seed)}});
      row.push_back(agg.format());
    }
    table.push_back(std::move(row));
  }

  emit(result, config, "ner_records.jsonl", jsonl(record_lines));
  if (ner.dump_prompts) emit(result, config, "prompts.jsonl", jsonl(prompt_lines));
  result.summary = {{"experiment", "ner"},
                    {"shots", ner.shots},
                    {"positive_shots", ner.positive_shots},
                    {"calibrate", ner.calibrate},
                    {"seeds", config.seeds},
                    {"bio_repairs", repairs},
                    {"cells", std::move(cells)}};
  result.summary_text = align_table(table);
  emit(result, config, "ner_summary.json", result.summary.dump(2) + "\n");
  emit(result, config, "ner_summary.txt", result.summary_text);
  finish(result);
  return result;
}

CommandResult run_experiment(const RunConfig& config, const LanguageModel& lm) {
  const std::string started = utc_now();
  CommandResult result;
  std::string fatal;
  try {
    switch (config.experiment) {
      case Experiment::kNet: result = cmd_net(config, lm); break;
      case Experiment::kExposure: result = cmd_exposure(config, lm); break;
      case Experiment::kProfile: result = cmd_profile(config, lm); break;
      case Experiment::kNer: result = cmd_ner(config, lm); break;
    }
  } catch (const std::exception& e) {
    fatal = e.what();
    ojson manifest = {{"command", to_string(config.experiment)},
                      {"config_hash", config.hash},
                      {"config", ojson::parse(config.document.dump())},
                      {"started_at", started},
                      {"finished_at", utc_now()},
                      {"error", fatal}};
    write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
    throw;
  }

  ojson failures = ojson::array();
  for (const auto& f : result.failures) failures.push_back(failure_json(f));
  const auto d = lm.descriptor();
  ojson manifest = {{"command", to_string(config.experiment)},
                    {"config_hash", config.hash},
                    {"config", ojson::parse(config.document.dump())},
                    {"backend", ojson::parse(descriptor_to_json(d).dump())},
                    {"started_at", started},
                    {"finished_at", utc_now()},
                    {"items", result.items},
                    {"failed", result.failures.size()},
                    {"failures", std::move(failures)},
                    {"outputs", result.outputs},
                    {"exit_code", result.exit_code}};
  write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

int run_cli(Experiment experiment, const std::filesystem::path& config_path, const ConfigOverrides& overrides,
            std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = load_run_config(config_path, experiment, overrides);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::unique_ptr<LanguageModel> lm;
  try {
    lm = make_backend(config.backend);
  } catch (const TransportError& e) {
    err << "backend unreachable: " << e.what() << '\n';
    return kExitBackendUnreachable;
  } catch (const Error& e) {
    err << "backend error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kProtocol ? kExitBackendUnreachable : kExitConfig;
  }

  try {
    const CommandResult result = run_experiment(config, *lm);
    out << result.summary_text;
    out << "items: " << result.items << ", failed: " << result.failures.size() << '\n';
    out << "results: " << config.output_dir.string() << '\n';
    if (result.exit_code == kExitTooManyFailures) {
      err << "more than " << static_cast<int>(kFailureTolerance * 100) << "% of items failed\n";
    }
    return result.exit_code;
  } catch (const TransportError& e) {
    err << "backend unreachable: " << e.what() << '\n';
    return kExitBackendUnreachable;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace nerprobe
