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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nerprobe/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string backend_url;
  std::vector<std::uint64_t> seeds;
  bool dump_prompts = false;
  std::string groups;
  std::string mode;
  std::string out;
};

CLI::App* add_command(CLI::App& app, const char* name, const char* help, Flags& flags) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", flags.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--backend-url", flags.backend_url, "use the model service at this URL");
  sub->add_option("--seed", flags.seeds, "replace the configured seeds (repeatable)");
  sub->add_flag("--dump-prompts", flags.dump_prompts, "write every rendered prompt to prompts.jsonl");
  sub->add_option("--groups", flags.groups, "comma list of all,memorized,unmemorized");
  sub->add_option("--mode", flags.mode, "substitution mode")->check(CLI::IsMember({"as_is", "seen", "unseen"}));
  sub->add_option("--out", flags.out, "output directory");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe language models on named entities."};
  app.require_subcommand(1);
  Flags flags;
  CLI::App* net = add_command(app, "net", "zero-shot entity typing by perplexity", flags);
  CLI::App* exposure = add_command(app, "exposure", "memorization exposure and partitioning", flags);
  CLI::App* profile = add_command(app, "profile", "log perplexity by mention token count", flags);
  CLI::App* ner = add_command(app, "ner", "few-shot extraction with calibration", flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nerprobe::kExitOk : nerprobe::kExitConfig;
  }

  nerprobe::Experiment experiment = nerprobe::Experiment::kNet;
  if (exposure->parsed()) experiment = nerprobe::Experiment::kExposure;
  if (profile->parsed()) experiment = nerprobe::Experiment::kProfile;
  if (ner->parsed()) experiment = nerprobe::Experiment::kNer;
  (void)net;

  nerprobe::ConfigOverrides overrides;
  if (!flags.backend_url.empty()) overrides.backend_url = flags.backend_url;
  overrides.seeds = flags.seeds;
  overrides.dump_prompts = flags.dump_prompts;
  if (!flags.groups.empty()) overrides.groups = flags.groups;
  if (!flags.mode.empty()) overrides.mode = flags.mode;
  if (!flags.out.empty()) overrides.out = flags.out;

  return nerprobe::run_cli(experiment, flags.config, overrides, std::cout, std::cerr);
}
