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

#include <algorithm>

#include "doctest.h"
#include "nerprobe/datasets.hpp"

using namespace nerprobe;

namespace {
const std::filesystem::path kTestData = NERPROBE_TEST_DATA_DIR;
const std::filesystem::path kData = NERPROBE_DATA_DIR;
}  // namespace

TEST_CASE("two-line sentence yields one typed entity") {
  const auto r = parse_conll("CVS B-corporation\nsells O\n");
  REQUIRE(r.sentences.size() == 1);
  const auto e = r.sentences[0].entities();
  REQUIRE(e.size() == 1);
  CHECK(e[0] == EntitySpan{"CVS", "corporation", 0, 1});
  const auto typed = typed_entities(r.sentences[0]);
  CHECK(typed[0].type == NeType::kCorporation);
}

TEST_CASE("empty input gives no sentences") {
  CHECK(parse_conll("").sentences.empty());
  CHECK(parse_conll("\n\n").sentences.empty());
}

TEST_CASE("I-tag opening a sentence") {
  const std::string text = "Zune I-product\nHD I-product\nrocks O\n";
  CHECK_THROWS_AS(parse_conll(text, BioMode::kStrict), Error);
  const auto r = parse_conll(text, BioMode::kLenient);
  CHECK(r.repairs == 1);
  const auto e = r.sentences[0].entities();
  REQUIRE(e.size() == 1);
  CHECK(e[0].surface == "Zune HD");
  CHECK(r.sentences[0].tags[0] == "B-product");
}

TEST_CASE("I-tag of another label is repaired as a new entity") {
  const auto r = parse_conll("a B-person\nb I-location\n", BioMode::kLenient);
  CHECK(r.repairs == 1);
  CHECK(r.sentences[0].entities().size() == 2);
}

TEST_CASE("format errors") {
  CHECK_THROWS_AS(parse_conll("a B-x\nb c O\n"), Error);
  CHECK_THROWS_AS(parse_conll("a X-foo\n"), Error);
  CHECK_THROWS_AS(parse_conll("lonely\n"), Error);
  try {
    parse_conll("a O\nb E-person\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("multi-column file keeps first and last columns") {
  const auto r = load_conll(kTestData / "conll_five.txt", BioMode::kLenient);
  CHECK(r.sentences.size() == 5);
  CHECK(r.repairs == 1);
  CHECK(r.sentences[0].tokens[0] == "EU");
  CHECK(r.sentences[0].tags[0] == "B-ORG");
}

TEST_CASE("parse, serialize, parse is a fixed point") {
  const auto first = load_conll(kTestData / "conll_five.txt", BioMode::kLenient).sentences;
  const std::string text = serialize_conll(first);
  const auto second = parse_conll(text, BioMode::kStrict);
  CHECK(second.repairs == 0);
  CHECK(second.sentences == first);
  CHECK(serialize_conll(second.sentences) == text);
}

TEST_CASE("merge maps") {
  const auto mit = TypeMergeMap::load(kData / "merge" / "mitmovie.map");
  const auto r = parse_conll("steven B-DIRECTOR\nspielberg I-DIRECTOR\ndrama B-GENRE\njaws B-TITLE\n");
  const auto merged = apply_merge(r.sentences, mit);
  CHECK(merged[0].tags == std::vector<std::string>{"B-person", "I-person", "O", "B-creative-work"});
  CHECK(merged[0].tokens == r.sentences[0].tokens);
  const auto typed = typed_entities(merged[0]);
  REQUIRE(typed.size() == 2);
  CHECK(typed[0].span.begin == 0);
  CHECK(typed[0].span.end == 2);
  CHECK(typed[1].type == NeType::kCreativeWork);

  const auto identity = TypeMergeMap::load(kData / "merge" / "wnut2017.map");
  const auto w = parse_conll("CVS B-corporation\nsells O\n").sentences;
  CHECK(apply_merge(w, identity) == w);

  CHECK_THROWS_AS(apply_merge(parse_conll("x B-AWARD\n").sentences, mit), Error);
  CHECK_THROWS_AS(TypeMergeMap::parse("a = martian\n"), Error);
  CHECK_THROWS_AS(TypeMergeMap::parse("just text\n"), Error);
}

TEST_CASE("conll merge drops MISC") {
  const auto conll = TypeMergeMap::load(kData / "merge" / "conll2003.map");
  const auto s = apply_merge(load_conll(kTestData / "conll_five.txt", BioMode::kLenient).sentences, conll);
  std::size_t entities = 0;
  for (const auto& sent : s) entities += typed_entities(sent).size();
  CHECK(entities == 6);
}

TEST_CASE("instances carry byte offsets of entities") {
  const auto r = parse_conll("I O\nlike O\nZune B-product\nHD I-product\n!!! O\n");
  const auto inst = to_instances(r.sentences, "t");
  REQUIRE(inst.size() == 1);
  CHECK(inst[0].id == "t-0");
  CHECK(inst[0].text == "I like Zune HD !!!");
  REQUIRE(inst[0].entities.size() == 1);
  CHECK(inst[0].surface(inst[0].entities[0]) == "Zune HD");
  CHECK(inst[0].answers(NeType::kProduct) == std::vector<std::string>{"Zune HD"});
  CHECK_FALSE(inst[0].has(NeType::kPerson));
}

TEST_CASE("NE lists") {
  CHECK(parse_ne_list("Paris\nParis\n", NeType::kLocation).size() == 1);
  NeListOptions drop;
  drop.drop_one_word = true;
  const auto l = parse_ne_list("Paris\nNew   York\n", NeType::kLocation, drop);
  REQUIRE(l.size() == 1);
  CHECK(l[0].surface == "New York");
  const auto meta = parse_ne_list("Barack Obama\thttp://dbpedia.org/x\t42\n", NeType::kPerson);
  CHECK(meta[0].surface == "Barack Obama");
  CHECK_THROWS_AS(parse_ne_list("\n  \n", NeType::kPerson), Error);
}

TEST_CASE("collect_mentions deduplicates per surface and type") {
  const auto train = parse_conll("Paris B-location\nrocks O\n\nParis B-person\n").sentences;
  const auto test = parse_conll("Paris B-location\n").sentences;
  const std::vector<std::vector<TaggedSentence>> a{train, test}, b{test, train};
  const auto m = collect_mentions(a, "toy");
  CHECK(m.size() == 2);
  CHECK(m == collect_mentions(b, "toy"));
}
