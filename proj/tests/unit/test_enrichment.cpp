#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/error.hpp"
#include "topicshift/text.hpp"

using namespace topicshift;

namespace {

SrlTuple tuple(const std::string& utterance, const std::string& predicate,
               std::vector<std::pair<std::string, std::string>> roles) {
  SrlTuple t;
  t.predicate = predicate;
  t.start = std::string::npos;
  t.end = 0;
  for (const auto& [tag, span] : roles) {
    const auto pos = utterance.find(span);
    REQUIRE(pos != std::string::npos);
    t.roles[tag] = RoleSpan{span, pos, pos + span.size()};
    t.start = std::min(t.start, pos);
    t.end = std::max(t.end, pos + span.size());
  }
  return t;
}

std::vector<TopicBlock> keyworded(const Dialogue& d) {
  FrequencyKeywordProvider provider;
  auto blocks = derive_topic_blocks(d);
  std::vector<std::vector<KeywordCandidate>> cands;
  for (const auto& b : blocks) cands.push_back(provider.candidates(block_text(d, b), d.language));
  return assign_block_keywords(d, blocks, cands);
}

}  // namespace

TEST_CASE("worked dialogue keywords") {
  const auto blocks = keyworded(fixtures::table_dialogue());
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].keyword == "cats");
  CHECK(blocks[1].keyword == "weakness");
  CHECK_FALSE(blocks[0].needs_review);
  CHECK_FALSE(blocks[1].needs_review);
}

TEST_CASE("worked dialogue turn information") {
  const auto d = fixtures::table_dialogue();
  HeuristicSrlProvider srl;
  const auto& turn1 = d.utterances[4];
  const auto& turn2 = d.utterances[5];
  const auto s1 = select_turn_info(turn1, d.language, ingest_tuples(turn1.text, srl.extract(turn1.text, d.language)));
  const auto s2 = select_turn_info(turn2, d.language, ingest_tuples(turn2.text, srl.extract(turn2.text, d.language)));
  CHECK(s1.info == "a weakness for cats and vanilla ice cream");
  CHECK(s1.provenance == TurnInfoSource::A1);
  CHECK(s2.info == "my weakness");
  CHECK(s2.provenance == TurnInfoSource::A1);
}

TEST_CASE("frequency candidates are ranked with normalised confidence") {
  FrequencyKeywordProvider provider;
  const auto c = provider.candidates("cats cats dogs and cats with dogs", Language::English);
  REQUIRE_FALSE(c.empty());
  CHECK(c[0].term == "cats");
  CHECK(c[0].confidence == doctest::Approx(1.0));
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c[i].confidence <= c[i - 1].confidence);
    CHECK(c[i].confidence >= 0.0);
  }
  CHECK(provider.candidates("the and of", Language::English).empty());
}

TEST_CASE("adjacent blocks never share a keyword") {
  const auto d = fixtures::make_dialogue(
      "dup", {"cats cats everywhere", "cats and more cats", "cats again cats", "dogs now"}, {0, 1, 1, 1});
  const auto blocks = keyworded(d);
  REQUIRE(blocks.size() == 4);
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(*blocks[i].keyword != *blocks[i - 1].keyword);
}

TEST_CASE("randomised keyword assignment keeps neighbours distinct") {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> pool{"cats", "dogs", "tea", "rain", "music", "bikes"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<std::string> texts;
    std::vector<int> shifts;
    std::vector<std::vector<KeywordCandidate>> cands;
    for (std::size_t b = 0; b < n; ++b) {
      texts.push_back(pool[rng() % pool.size()] + " " + pool[rng() % pool.size()]);
      shifts.push_back(b == 0 ? 0 : 1);
      std::vector<KeywordCandidate> c;
      const std::size_t k = rng() % 3;
      for (std::size_t j = 0; j < k; ++j) c.push_back({pool[rng() % pool.size()], 1.0 / (j + 1)});
      cands.push_back(c);
    }
    if (n == 1) {
      texts.push_back("more words");
      shifts.push_back(0);
    }
    const auto d = fixtures::make_dialogue("r", texts, shifts);
    const auto blocks = assign_block_keywords(d, derive_topic_blocks(d), cands);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      REQUIRE(blocks[i].keyword.has_value());
      CHECK_FALSE(blocks[i].keyword->empty());
      if (i > 0) CHECK(*blocks[i].keyword != *blocks[i - 1].keyword);
    }
  }
}

TEST_CASE("blocks without candidates get a reviewed fallback") {
  const auto d = fixtures::make_dialogue("fb", {"the and of", "it is so"}, {0, 1});
  std::vector<std::vector<KeywordCandidate>> cands(2);
  const auto blocks = assign_block_keywords(d, derive_topic_blocks(d), cands);
  CHECK(blocks[0].needs_review);
  CHECK(blocks[1].needs_review);
  CHECK(*blocks[0].keyword == "topic");
  CHECK(*blocks[1].keyword != *blocks[0].keyword);
}

TEST_CASE("higher-confidence block is served first") {
  const auto d = fixtures::make_dialogue("prio", {"x", "y"}, {0, 1});
  std::vector<std::vector<KeywordCandidate>> cands{{{"cats", 0.4}, {"pets", 0.3}}, {{"cats", 0.9}}};
  const auto blocks = assign_block_keywords(d, derive_topic_blocks(d), cands);
  CHECK(*blocks[1].keyword == "cats");
  CHECK(*blocks[0].keyword == "pets");
}

TEST_CASE("tuple filtering keeps core roles and drops contained tuples") {
  const std::string u = "i think my sister likes the red bike";
  const auto outer = tuple(u, "think", {{"A0", "i"}, {"A1", "my sister likes the red bike"}});
  const auto inner = tuple(u, "likes", {{"A0", "my sister"}, {"A1", "the red bike"}});
  auto with_extra = inner;
  with_extra.roles["ARGM-TMP"] = RoleSpan{"red", u.find("red"), u.find("red") + 3};
  const auto filtered = filter_tuples({outer, with_extra});
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0].predicate == "think");
  for (const auto& [tag, span] : filtered[0].roles) CHECK(is_core_role(tag));

  const auto info = select_turn_info({0, "A", u, 0}, Language::English, std::vector<SrlTuple>{outer, inner});
  CHECK(info.info == "my sister likes the red bike");
}

TEST_CASE("randomised tuple sets: containment-free survivors and short info") {
  std::mt19937_64 rng(99);
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
  const std::vector<std::string> tags{"A0", "A1", "A2", "ARGM-LOC", "ARGM-TMP"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string u;
    std::vector<std::size_t> offsets;
    const std::size_t len = 3 + rng() % 25;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) u += ' ';
      offsets.push_back(u.size());
      u += words[rng() % words.size()];
    }
    offsets.push_back(u.size() + 1);
    std::vector<SrlTuple> tuples;
    const std::size_t k = rng() % 5;
    for (std::size_t t = 0; t < k; ++t) {
      SrlTuple tup;
      tup.predicate = "p" + std::to_string(t);
      tup.start = std::string::npos;
      tup.end = 0;
      const std::size_t roles = 1 + rng() % 3;
      for (std::size_t r = 0; r < roles; ++r) {
        std::size_t a = rng() % len, b = rng() % len;
        if (a > b) std::swap(a, b);
        RoleSpan span{u.substr(offsets[a], offsets[b + 1] - 1 - offsets[a]), offsets[a], offsets[b + 1] - 1};
        tup.roles[tags[rng() % tags.size()]] = span;
        tup.start = std::min(tup.start, span.start);
        tup.end = std::max(tup.end, span.end);
      }
      tuples.push_back(tup);
    }
    const auto survivors = filter_tuples(tuples);
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      for (const auto& [tag, span] : survivors[i].roles) CHECK(is_core_role(tag));
      for (std::size_t j = 0; j < survivors.size(); ++j) {
        if (i == j) continue;
        const bool contained = survivors[i].start >= survivors[j].start && survivors[i].end <= survivors[j].end;
        CHECK_FALSE(contained);
      }
    }
    const auto info = select_turn_info({0, "A", u, 0}, Language::English, tuples);
    CHECK_FALSE(info.info.empty());
    CHECK(text::length_in_units(info.info, Language::English) <= kMaxTurnInfoUnits);
  }
}

TEST_CASE("turn information falls back when no tuple has a core role") {
  const Utterance u{0, "A", "wow !!! that is a lot lol", 0};
  const auto info = select_turn_info(u, Language::English, std::vector<SrlTuple>{});
  CHECK(info.provenance == TurnInfoSource::Fallback);
  CHECK_FALSE(info.info.empty());
  const Utterance punct{0, "A", "!!!", 0};
  CHECK_FALSE(select_turn_info(punct, Language::English, std::vector<SrlTuple>{}).info.empty());
}

TEST_CASE("chinese heuristic SRL") {
  HeuristicSrlProvider srl;
  const std::string u = "我喜欢吃火锅";
  const auto tuples = ingest_tuples(u, srl.extract(u, Language::Chinese));
  const auto info = select_turn_info({0, "A", u, 0}, Language::Chinese, tuples);
  CHECK_FALSE(info.info.empty());
  CHECK(text::length_in_units(info.info, Language::Chinese) <= kMaxTurnInfoUnits);
}

TEST_CASE("tuple JSON normalises role tags") {
  const auto t = srl_tuple_from_json(
      R"({"predicate":"have","roles":{"ARG0":{"text":"i","start":0,"end":1},"ARG1":{"text":"a cat","start":7,"end":12}},"start":0,"end":12})");
  CHECK(t.roles.contains("A0"));
  CHECK(t.roles.contains("A1"));
  CHECK(srl_tuple_from_json(srl_tuple_to_json(t)).roles.at("A1").text == "a cat");
  CHECK_THROWS_AS(srl_tuple_from_json(R"({"roles":{}})"), ParseError);
  CHECK_THROWS_AS(ingest_tuples("short", {t}), ValidationError);
}

TEST_CASE("precomputed providers read JSONL tables") {
  fixtures::TempDir dir;
  {
    std::ofstream k(dir / "kw.jsonl");
    k << R"({"text":"cats are fun","candidates":[{"term":"cats","confidence":0.8}]})" << '\n';
    std::ofstream s(dir / "srl.jsonl");
    s << R"({"text":"i have a cat","tuples":[{"predicate":"have","roles":{"A1":{"text":"a cat","start":7,"end":12}},"start":7,"end":12}]})"
      << '\n';
  }
  auto kp = make_keyword_provider("precomputed:" + (dir / "kw.jsonl").string());
  CHECK(kp->candidates("cats are fun", Language::English).at(0).term == "cats");
  CHECK_THROWS_AS(kp->candidates("unknown text", Language::English), Error);
  auto sp = make_srl_provider("precomputed:" + (dir / "srl.jsonl").string());
  CHECK(sp->extract("i have a cat", Language::English).at(0).roles.at("A1").text == "a cat");
  CHECK_THROWS_AS(make_keyword_provider("keybert"), ValidationError);
  CHECK(make_keyword_provider("frequency")->name() == "frequency");
  CHECK(make_srl_provider("heuristic")->name() == "heuristic");
}
