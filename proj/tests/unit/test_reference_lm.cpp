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

#include <cmath>

#include "doctest.h"
#include "nerprobe/reference_lm.hpp"
#include "nerprobe/datasets.hpp"
#include "table_oracle.hpp"

using namespace nerprobe;

namespace {
const std::filesystem::path kTestData = NERPROBE_TEST_DATA_DIR;

ReferenceLm toy() { return ReferenceLm::from_file(kTestData / "toy.table"); }
}  // namespace

TEST_CASE("descriptor and special tokens") {
  const auto lm = toy();
  const auto d = lm.descriptor();
  CHECK(d.name == "toy-lm");
  CHECK(d.max_context == 64);
  CHECK(d.unknown_token.id == kUnknownId);
  CHECK(d.unknown_token.text == "<unk>");
  CHECK(d.vocab_size == lm.table().vocab.size());
}

TEST_CASE("stored probabilities are returned exactly") {
  const auto lm = toy();
  const auto seq = lm.score(lm.tokenize("Paris is a city", false));
  CHECK(seq.prob(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(seq.prob(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(seq.prob(2) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(seq.prob(3) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("longest suffix backoff and fallback") {
  const auto lm = toy();
  const auto& t = lm.table();
  const int paris = *t.find("Paris"), is = *t.find("is"), a = *t.find("a"), city = *t.find("city");
  const int the = *t.find("the");
  // "the Paris is" backs off to "Paris is".
  const std::vector<int> h1{the, paris, is};
  CHECK(lm.conditional(h1, a) == 0.9);
  // Unlisted under "is a": min(fallback, remaining / unlisted).
  const std::vector<int> h2{is, a};
  const double remaining = 1.0 - 0.45;
  const double unlisted = static_cast<double>(t.vocab.size() - 2);
  CHECK(lm.conditional(h2, paris) == doctest::Approx(std::min(0.001, remaining / unlisted)));
  CHECK(lm.conditional(h2, city) == 0.4);
}

TEST_CASE("split words become several tokens") {
  const auto lm = toy();
  const auto seq = lm.tokenize("I like Zune", true);
  REQUIRE(seq.size() == 5);
  CHECK(seq.has_unknown_prefix);
  CHECK(seq.tokens[0].id == kUnknownId);
  CHECK(seq.tokens[3].text == "Zu");
  CHECK(seq.tokens[4].text == "##ne");
  CHECK(seq.word_spans == std::vector<WordSpan>{{1, 1}, {2, 2}, {3, 4}});
  CHECK(seq.transition_indices == std::vector<std::size_t>{2, 3});
  CHECK_NOTHROW(check_sequence_invariants(seq));
  CHECK(lm.detokenize(seq) == "I like Zune");
}

TEST_CASE("out-of-vocabulary words keep their text") {
  const auto lm = toy();
  const auto seq = lm.tokenize("qzqz", false);
  CHECK(seq.tokens[0].id == kUnknownId);
  CHECK(seq.tokens[0].text == "qzqz");
}

TEST_CASE("errors") {
  const auto lm = toy();
  CHECK_THROWS_AS(lm.tokenize("   ", false), Error);
  std::string long_text;
  for (int i = 0; i < 65; ++i) long_text += "the ";
  try {
    (void)lm.score(lm.tokenize(long_text, false));
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kContextOverflow);
  }
  CHECK_THROWS_AS(parse_reference_table("| a | 0.5\n"), Error);                       // no fallback
  CHECK_THROWS_AS(parse_reference_table("@fallback 0.1\n| a | 0.7\n| b | 0.7\n"), Error);  // mass > 1
  CHECK_THROWS_AS(parse_reference_table("@fallback 0.1\n| a | 0.5\n| a | 0.2\n"), Error);  // duplicate
  CHECK_THROWS_AS(parse_reference_table("@fallback 0.1\n@split Zune Zo ##ne\n"), Error);   // bad pieces
  CHECK_THROWS_AS(parse_reference_table("@fallback 0.1\nbroken line\n"), Error);
}

TEST_CASE("full listed mass leaves zero for unlisted tokens") {
  const auto lm = ReferenceLm(parse_reference_table("@fallback 0.1\n| a | 1.0\n@vocab b\n"));
  CHECK_NOTHROW((void)lm.score(lm.tokenize("a", false)));
  try {
    (void)lm.score(lm.tokenize("b", false));
    FAIL("expected zero probability");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kZeroProbability);
  }
}

TEST_CASE("greedy generation") {
  const auto lm = toy();
  const auto gen = lm.generate(lm.tokenize("Paris", false), 3, true);
  CHECK(gen.text == " is a city");
  CHECK(gen.first_token_distribution.size() == static_cast<Eigen::Index>(lm.descriptor().vocab_size));
  CHECK(gen.first_token_distribution.sum() == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::Index best = 0;
  gen.first_token_distribution.maxCoeff(&best);
  CHECK(best == *lm.table().find("is"));
}

TEST_CASE("generation stops at newline when asked") {
  const auto lm = ReferenceLm(parse_reference_table("@fallback 0.01\n| a | 0.5\na | b | 0.9\nb | \\n | 0.9\n\\n | a | 0.9\n"));
  CHECK(lm.generate(lm.tokenize("a", false), 5, true).text == " b");
  CHECK(lm.generate(lm.tokenize("a", false), 3, false).text == " b\n a");
}

TEST_CASE("decode of pieces") {
  const auto lm = toy();
  const auto& t = lm.table();
  const std::vector<int> ids{*t.find("Zu"), *t.find("##ne")};
  CHECK(lm.decode(ids) == " Zune");
  const std::vector<int> nl{kNewlineId};
  CHECK(lm.decode(nl) == "\n");
}

TEST_CASE("perplexity agrees with the brute-force oracle on the toy table") {
  const auto lm = toy();
  const auto o = oracle::Table::parse(read_text_file(kTestData / "toy.table"));
  // The oracle ignores @split, so use unsplit words only.
  for (const char* text : {"Paris is a city", "the Paris is a person", "Paris Paris the", "city"}) {
    const auto seq = lm.score(lm.tokenize(text, false));
    double sum = 0.0;
    for (double lp : seq.logprobs) sum += lp;
    const double ppl = std::exp(-sum / static_cast<double>(seq.size()));
    CHECK(ppl == doctest::Approx(o.perplexity(split_whitespace(text))).epsilon(1e-12));
  }
}
