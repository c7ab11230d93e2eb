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

#include "nerprobe/config.hpp"

#include <algorithm>
#include <cstdio>

#include "nerprobe/reference_lm.hpp"
#include "nerprobe/remote_backend.hpp"
#include "nerprobe/replay_backend.hpp"

namespace nerprobe {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::kConfig, msg); }

const json* find_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const json* v = find_key(obj, key);
  if (!v) return fallback;
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    config_error(std::string("key '") + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<std::filesystem::path> optional_path(const json& obj, const char* key,
                                                   const std::filesystem::path& base) {
  const json* v = find_key(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) config_error(std::string("key '") + key + "' must be a path string");
  return resolve(base, v->get<std::string>());
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = trim(text.substr(pos, comma - pos));
    if (!item.empty()) out.emplace_back(item);
    pos = comma + 1;
  }
  return out;
}

BackendSpec parse_backend(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) config_error("'backend' must be an object");
  int present = 0;
  BackendSpec spec;
  if (const json* p = find_key(j, "reference_table")) {
    ++present;
    spec.kind = BackendSpec::Kind::kReferenceTable;
    spec.location = resolve(base, p->get<std::string>()).string();
  }
  if (const json* p = find_key(j, "replay_script")) {
    ++present;
    spec.kind = BackendSpec::Kind::kReplayScript;
    spec.location = resolve(base, p->get<std::string>()).string();
  }
  if (const json* p = find_key(j, "url")) {
    ++present;
    spec.kind = BackendSpec::Kind::kRemote;
    spec.location = p->get<std::string>();
  }
  if (present != 1) config_error("'backend' must name exactly one of reference_table, replay_script, url");
  spec.timeout_ms = get_or(j, "timeout_ms", spec.timeout_ms);
  spec.max_attempts = get_or(j, "max_attempts", spec.max_attempts);
  if (spec.timeout_ms <= 0 || spec.max_attempts <= 0) config_error("backend timeout and attempts must be positive");
  return spec;
}

ThresholdPolicy parse_policy(const json& j) {
  ThresholdPolicy p;
  if (j.is_string()) {
    p = named_policy(j.get<std::string>());
  } else if (j.is_object()) {
    p.metric = parse_exposure_metric(get_or<std::string>(j, "metric", "word"));
    if (!find_key(j, "memorized_min") || !find_key(j, "unmemorized_max")) {
      config_error("policy needs memorized_min and unmemorized_max");
    }
    p.memorized_min = get_or(j, "memorized_min", 0.0);
    p.unmemorized_max = get_or(j, "unmemorized_max", 0.0);
  } else {
    config_error("'policy' must be a name or an object");
  }
  p.validate();
  return p;
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::kNet: return "net";
    case Experiment::kExposure: return "exposure";
    case Experiment::kProfile: return "profile";
    case Experiment::kNer: return "ner";
  }
  return "net";
}

void apply_overrides(json& doc, const ConfigOverrides& o) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  if (o.backend_url) doc["backend"] = json{{"url", *o.backend_url}};
  if (!o.seeds.empty()) doc["seeds"] = o.seeds;
  if (o.dump_prompts) doc["ner"]["dump_prompts"] = true;
  if (o.groups) doc["groups"] = split_commas(*o.groups);
  if (o.mode) doc["ner"]["modes"] = json::array({*o.mode});
  if (o.out) doc["output_dir"] = *o.out;
}

std::string config_hash(const json& doc) {
  // nlohmann::json keeps object keys sorted, so the dump is canonical.
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_run_config(json doc, Experiment experiment, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  RunConfig c;
  c.experiment = experiment;
  try {
    const json* backend = find_key(doc, "backend");
    if (!backend) config_error("missing 'backend'");
    c.backend = parse_backend(*backend, base_dir);

    const json* seeds = find_key(doc, "seeds");
    if (!seeds || !seeds->is_array() || seeds->empty()) config_error("'seeds' must be a non-empty list");
    for (const auto& s : *seeds) {
      if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
        config_error("seeds must be unsigned integers");
      }
      c.seeds.push_back(s.get<std::uint64_t>());
    }

    const json* out = find_key(doc, "output_dir");
    if (!out || !out->is_string()) config_error("missing 'output_dir'");
    c.output_dir = resolve(base_dir, out->get<std::string>());
    c.workers = std::max<std::size_t>(1, get_or<std::size_t>(doc, "workers", 1));

    for (const auto& t : get_or(doc, "types", std::vector<std::string>{})) {
      const NeType type = parse_ne_type_or_throw(t);
      if (std::find(c.types.begin(), c.types.end(), type) != c.types.end()) config_error("duplicate type '" + t + "'");
      c.types.push_back(type);
    }

    if (const json* m = find_key(doc, "mentions")) {
      if (!m->is_array()) config_error("'mentions' must be a list");
      for (const auto& entry : *m) {
        MentionSource src;
        const json* path = find_key(entry, "path");
        const json* type = find_key(entry, "type");
        if (!path || !type) config_error("each mentions entry needs 'path' and 'type'");
        src.path = resolve(base_dir, path->get<std::string>());
        src.type = parse_ne_type_or_throw(type->get<std::string>());
        src.drop_one_word = get_or(entry, "drop_one_word", false);
        src.source = get_or<std::string>(entry, "source", "");
        c.mentions.push_back(std::move(src));
      }
    }

    if (const json* d = find_key(doc, "datasets")) {
      c.datasets.train = optional_path(*d, "train", base_dir);
      c.datasets.dev = optional_path(*d, "dev", base_dir);
      c.datasets.test = optional_path(*d, "test", base_dir);
      c.datasets.merge_map = optional_path(*d, "merge_map", base_dir);
      const std::string mode = ascii_lower(get_or<std::string>(*d, "bio_mode", "strict"));
      if (mode == "strict") {
        c.datasets.bio_mode = BioMode::kStrict;
      } else if (mode == "lenient") {
        c.datasets.bio_mode = BioMode::kLenient;
      } else {
        config_error("bio_mode must be 'strict' or 'lenient'");
      }
    }

    c.keyword_sets = default_keyword_sets(c.types);
    if (const json* k = find_key(doc, "keyword_sets")) {
      if (!k->is_object()) config_error("'keyword_sets' must map type names to keyword lists");
      for (const auto& [name, words] : k->items()) {
        const NeType type = parse_ne_type_or_throw(name);
        auto it = std::find_if(c.keyword_sets.begin(), c.keyword_sets.end(),
                               [&](const TypeKeywordSet& s) { return s.type == type; });
        if (it == c.keyword_sets.end()) config_error("keyword set for '" + name + "', which is not in 'types'");
        it->keywords = words.get<std::vector<std::string>>();
        if (it->keywords.empty()) config_error("keyword set for '" + name + "' is empty");
      }
    }

    const std::string agg = ascii_lower(get_or<std::string>(doc, "aggregation", "min"));
    if (agg == "min") {
      c.aggregation = Aggregation::kMin;
    } else if (agg == "mean") {
      c.aggregation = Aggregation::kMean;
    } else {
      config_error("aggregation must be 'min' or 'mean'");
    }

    c.groups = get_or(doc, "groups", std::vector<std::string>{"all"});
    if (c.groups.empty()) config_error("'groups' is empty");
    for (auto& g : c.groups) {
      g = ascii_lower(g);
      if (g != "all" && g != "memorized" && g != "unmemorized") config_error("unknown group '" + g + "'");
    }

    if (const json* p = find_key(doc, "policy")) c.policy = parse_policy(*p);

    if (const json* cj = find_key(doc, "carlini")) {
      c.carlini = get_or(*cj, "enabled", true);
      c.carlini_query_prefix = get_or<std::string>(*cj, "query_prefix", "");
    }

    if (const json* n = find_key(doc, "ner")) {
      auto& s = c.ner;
      s.shots = get_or(*n, "shots", s.shots);
      s.positive_shots = get_or(*n, "positive_shots", s.positive_shots);
      s.max_new_tokens = get_or(*n, "max_new_tokens", s.max_new_tokens);
      s.calibrate = get_or(*n, "calibrate", s.calibrate);
      s.resample = get_or(*n, "resample", s.resample);
      s.resample_ratio = get_or(*n, "resample_ratio", s.resample_ratio);
      s.dump_prompts = get_or(*n, "dump_prompts", s.dump_prompts);
      s.seen_pool = optional_path(*n, "seen_pool", base_dir);
      s.word_list = optional_path(*n, "word_list", base_dir);
      if (const json* modes = find_key(*n, "modes")) {
        s.modes.clear();
        for (const auto& m : *modes) s.modes.push_back(parse_substitution_mode(m.get<std::string>()));
        if (s.modes.empty()) config_error("'ner.modes' is empty");
      }
    }
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    config_error(e.what());
  }

  const bool has_corpus = c.datasets.test || c.datasets.train || c.datasets.dev;
  switch (experiment) {
    case Experiment::kNet:
      if (c.types.size() < 2) config_error("net needs at least two 'types'");
      if (c.mentions.empty() && !has_corpus) config_error("net needs 'mentions' or 'datasets'");
      if ((c.groups.size() > 1 || c.groups.front() != "all") && !c.policy) {
        config_error("memorized/unmemorized groups need a 'policy'");
      }
      break;
    case Experiment::kExposure:
      if (c.mentions.empty() && !has_corpus) config_error("exposure needs 'mentions' or 'datasets'");
      if (!c.policy) config_error("exposure needs a 'policy'");
      break;
    case Experiment::kProfile:
      if (c.mentions.empty() && !has_corpus) config_error("profile needs 'mentions' or 'datasets'");
      break;
    case Experiment::kNer: {
      if (c.types.empty()) config_error("ner needs 'types'");
      if (!c.datasets.train || !c.datasets.test) config_error("ner needs 'datasets.train' and 'datasets.test'");
      const auto& s = c.ner;
      if (s.shots == 0 || s.positive_shots > s.shots) config_error("ner shot counts are inconsistent");
      if (s.max_new_tokens == 0) config_error("ner.max_new_tokens must be positive");
      if (s.resample && !(s.resample_ratio > 0.0)) config_error("ner.resample_ratio must be positive");
      auto uses = [&](SubstitutionMode m) { return std::find(s.modes.begin(), s.modes.end(), m) != s.modes.end(); };
      if (uses(SubstitutionMode::kSeen) && !s.seen_pool) config_error("seen mode needs 'ner.seen_pool'");
      if (uses(SubstitutionMode::kUnseen) && !s.word_list) config_error("unseen mode needs 'ner.word_list'");
      break;
    }
  }

  c.hash = config_hash(doc);
  c.document = std::move(doc);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, Experiment experiment, const ConfigOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    config_error("cannot parse " + path.string() + ": " + e.what());
  }
  apply_overrides(doc, overrides);
  return parse_run_config(std::move(doc), experiment, path.parent_path());
}

std::unique_ptr<LanguageModel> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendSpec::Kind::kReferenceTable:
      return std::make_unique<ReferenceLm>(ReferenceLm::from_file(spec.location));
    case BackendSpec::Kind::kReplayScript:
      return std::make_unique<ReplayLm>(ReplayLm::from_file(spec.location));
    case BackendSpec::Kind::kRemote: {
      RemoteOptions options;
      options.timeout = std::chrono::milliseconds(spec.timeout_ms);
      options.max_attempts = spec.max_attempts;
      return std::make_unique<RemoteLm>(spec.location, options);
    }
  }
  throw Error(ErrorKind::kConfig, "unknown backend kind");
}

}  // namespace nerprobe
