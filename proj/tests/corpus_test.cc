// Copyright 2026 The WiC Authors.
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
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "wic/corpus.h"
#include "wic/error.h"

namespace wic {
namespace {

namespace fs = std::filesystem;

fs::path Fixture(const char* name) { return fs::path(WIC_TEST_DATA) / name; }

WicPair MakePair(std::string s1, std::string s2, const std::string& word) {
  WicPair p;
  p.id = "p";
  p.lemma = word;
  p.pos = "NOUN";
  p.span1 = {s1.find(word), s1.find(word) + word.size()};
  p.span2 = {s2.find(word), s2.find(word) + word.size()};
  p.sentence1 = std::move(s1);
  p.sentence2 = std::move(s2);
  return p;
}

TEST(LoadDatasetTest, FigureOnePairSelectsTarget) {
  const auto pairs = LoadDataset(Fixture("sample.data"), Fixture("sample.gold"));
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].lemma, "play");
  EXPECT_EQ(SpanText(pairs[0].sentence1, pairs[0].span1), "play");
  EXPECT_EQ(SpanText(pairs[0].sentence2, pairs[0].span2), "play");
  EXPECT_EQ(pairs[0].label, Label::kFalse);
  EXPECT_TRUE(ValidatePair(pairs[0]).empty());
}

TEST(LoadDatasetTest, EmptyArray) {
  EXPECT_TRUE(LoadDataset(Fixture("empty.data")).empty());
}

TEST(LoadDatasetTest, GoldJoinedInFileOrder) {
  const auto pairs = LoadDataset(Fixture("three.data"), Fixture("three.gold"));
  ASSERT_EQ(pairs.size(), 3u);
  const std::vector<std::string> ids = {"t.0", "t.1", "t.2"};
  const std::vector<Label> labels = {Label::kTrue, Label::kFalse, Label::kTrue};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pairs[i].id, ids[i]);
    EXPECT_EQ(pairs[i].label, labels[i]);
  }
  EXPECT_EQ(SpanText(pairs[1].sentence2, pairs[1].span2), "run");
}

TEST(LoadDatasetTest, WithoutGoldLeavesLabelsEmpty) {
  for (const auto& p : LoadDataset(Fixture("three.data"))) EXPECT_FALSE(p.label.has_value());
}

void ExpectErrorMentions(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
    FAIL() << "expected an error mentioning " << needle;
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(LoadDatasetTest, ErrorsNameTheOffender) {
  ExpectErrorMentions([] { LoadDataset(Fixture("missing.data")); }, "missing.data");
  ExpectErrorMentions([] { LoadDataset(Fixture("malformed.data")); }, "malformed.data");
  ExpectErrorMentions([] { LoadDataset(Fixture("three.data"), Fixture("orphan.gold")); }, "t.9");
  ExpectErrorMentions([] { LoadDataset(Fixture("duplicate.data")); }, "t.0");
}

TEST(LoadDatasetTest, RoundTrip) {
  const auto pairs = LoadDataset(Fixture("three.data"), Fixture("three.gold"));
  const fs::path dir = fs::temp_directory_path() / "wic_corpus_roundtrip";
  fs::create_directories(dir);
  SaveDataset(pairs, dir / "x.data", dir / "x.gold");
  EXPECT_EQ(LoadDataset(dir / "x.data", dir / "x.gold"), pairs);
  fs::remove_all(dir);
}

TEST(ParseGoldTest, RejectsTagsOtherThanTrueFalse) {
  EXPECT_THROW(ParseGold(nlohmann::json::parse(R"([{"id": "a", "tag": "X"}])")), DataError);
  EXPECT_EQ(ParseGold(nlohmann::json::parse(R"([{"id": "a", "tag": "T"}])"))[0].label,
            Label::kTrue);
}

TEST(ValidatePairTest, WellFormed) {
  EXPECT_TRUE(ValidatePair(MakePair("a bank here", "the bank", "bank")).empty());
}

TEST(ValidatePairTest, ReversedSpan) {
  WicPair p = MakePair("a bank here", "the bank", "bank");
  p.span1 = {5, 3};
  const auto v = ValidatePair(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "span1");
  EXPECT_NE(v[0].reason.find("start"), std::string::npos);
}

TEST(ValidatePairTest, UnknownPos) {
  WicPair p = MakePair("a bank here", "the bank", "bank");
  p.pos = "PRON";
  const auto v = ValidatePair(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "pos");
}

TEST(ValidatePairTest, SpanPastEndAndSeparatorInside) {
  WicPair p = MakePair("a bank here", "the bank", "bank");
  p.span2 = {4, 40};
  EXPECT_EQ(ValidatePair(p).size(), 1u);
  p = MakePair("a bank\nhere", "the bank", "bank");
  p.span1 = {2, 8};
  ASSERT_EQ(ValidatePair(p).size(), 1u);
  EXPECT_EQ(ValidatePair(p)[0].field, "span1");
}

TEST(CorpusStatsTest, SinglePairRoundsHalfUp) {
  const auto s = ComputeStats({MakePair("a b c", "d e", "a")});
  EXPECT_EQ(s.n_pairs, 1u);
  EXPECT_EQ(s.min_tokens, 2u);
  EXPECT_EQ(s.max_tokens, 3u);
  EXPECT_DOUBLE_EQ(s.avg_tokens, 2.5);
  EXPECT_EQ(s.RoundedAverage(), 3);
}

TEST(CorpusStatsTest, EmptyListIsAnError) { EXPECT_THROW(ComputeStats({}), DataError); }

// Ten pairs compared with a recount done by splitting on spaces.
TEST(CorpusStatsTest, TenPairFixtureMatchesRecount) {
  std::mt19937 gen(7);
  const std::vector<std::string> words = {"bank", "river", "money", "the", "a", "of", "crane"};
  std::vector<WicPair> pairs;
  std::vector<std::size_t> counts;
  std::set<std::string> lemmas;
  for (int i = 0; i < 10; ++i) {
    std::string s[2];
    for (auto& sentence : s) {
      const int n = 2 + static_cast<int>(gen() % 12);
      sentence = words[i % 3];
      for (int w = 1; w < n; ++w) sentence += "  " + words[gen() % words.size()];
      std::istringstream in(sentence);
      std::size_t c = 0;
      for (std::string tok; in >> tok;) ++c;
      counts.push_back(c);
    }
    WicPair p = MakePair(s[0], s[1], words[i % 3]);
    lemmas.insert(p.lemma);
    pairs.push_back(p);
  }
  const auto stats = ComputeStats(pairs);
  double sum = 0;
  for (auto c : counts) sum += static_cast<double>(c);
  EXPECT_EQ(stats.n_pairs, 10u);
  EXPECT_EQ(stats.n_target_words, lemmas.size());
  EXPECT_EQ(stats.min_tokens, *std::min_element(counts.begin(), counts.end()));
  EXPECT_EQ(stats.max_tokens, *std::max_element(counts.begin(), counts.end()));
  EXPECT_DOUBLE_EQ(stats.avg_tokens, sum / 20.0);

  std::shuffle(pairs.begin(), pairs.end(), gen);
  const auto shuffled = ComputeStats(pairs);
  EXPECT_EQ(shuffled.min_tokens, stats.min_tokens);
  EXPECT_EQ(shuffled.max_tokens, stats.max_tokens);
  EXPECT_DOUBLE_EQ(shuffled.avg_tokens, stats.avg_tokens);
}

TEST(CorpusStatsTest, TableHasReferenceRows) {
  const std::string table = StatsTable(ComputeStats({MakePair("a b c", "d e", "a")}));
  EXPECT_NE(table.find("No. of target words"), std::string::npos);
  EXPECT_NE(table.find("Avg. tokens"), std::string::npos);
}

TEST(SpanUnitsTest, DistinguishesCharactersFromBytes) {
  // "é" is one character and two bytes, so only one reading fits.
  WicPair chars = MakePair("café bank", "bank", "bank");
  chars.span1 = {5, 9};
  EXPECT_EQ(DetectSpanUnits({chars}).verdict, SpanUnits::kCharacters);
  WicPair bytes = MakePair("café bank", "bank", "bank");
  bytes.span1 = {6, 10};
  EXPECT_EQ(DetectSpanUnits({bytes}).verdict, SpanUnits::kBytes);
  EXPECT_EQ(DetectSpanUnits({MakePair("a bank", "bank", "bank")}).verdict, SpanUnits::kBoth);
}

// Only meaningful when the official release is present.
TEST(OfficialCorpusTest, OfficialSplitStatistics) {
  const char* dir = std::getenv("WIC_OFFICIAL_DATA");
  if (dir == nullptr) GTEST_SKIP() << "WIC_OFFICIAL_DATA not set";
  const auto s = ComputeStats(LoadDataset(fs::path(dir) / "training.en-en.data"));
  EXPECT_EQ(s.n_pairs, 8000u);
  EXPECT_EQ(s.n_target_words, 3726u);
  EXPECT_EQ(s.min_tokens, 6u);
  EXPECT_EQ(s.RoundedAverage(), 24);
  EXPECT_EQ(s.max_tokens, 88u);
}

}  // namespace
}  // namespace wic
