// Copyright 2026 The newsei Authors.
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

#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace newsei;
using namespace testing_support;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no newsei::Error thrown";
  return ErrorKind::IoError;
}

// --- dates ------------------------------------------------------------------

TEST(DateStamp, ParsesAndFormats) {
  const auto d = DateStamp::parse("20230831");
  EXPECT_EQ(d.str(), "20230831");
  EXPECT_EQ(d.natural(), "August 31, 2023");
  EXPECT_EQ(DateStamp::parse("20240105").natural(), "January 5, 2024");
  EXPECT_EQ(d.plus_days(1).str(), "20230901");
  EXPECT_EQ(d.days_until(DateStamp::parse("20230905")), 5);
  EXPECT_EQ(DateStamp::parse("20240229").plus_days(1).str(), "20240301");
}

TEST(DateStamp, RejectsInvalidDays) {
  for (const char* bad : {"20230230", "2023083", "202308311", "2023-8-31", "20231301", "abcdefgh", "20230229"}) {
    EXPECT_EQ(kind_of([&] { DateStamp::parse(bad); }), ErrorKind::BadDate) << bad;
  }
}

// --- sentence segmentation ---------------------------------------------------

TEST(Segmenter, SplitsOnTerminatorsAndKeepsAbbreviations) {
  SentenceSegmenter seg;
  const std::string s = "Mr. Smith met Dr. Jones at 9 a.m. on Friday. They talked! Did it help? \"Yes,\" he said.";
  std::vector<std::string> got;
  for (auto span : seg.segment(s)) got.push_back(s.substr(span.begin, span.end - span.begin));
  const std::vector<std::string> want = {"Mr. Smith met Dr. Jones at 9 a.m. on Friday.", "They talked!", "Did it help?",
                                         "\"Yes,\" he said."};
  EXPECT_EQ(got, want);
}

TEST(Segmenter, InitialsAndLowercaseContinuationDoNotSplit) {
  SentenceSegmenter seg;
  const std::string s = "J. K. Rowling wrote it. the end is near. Next one.";
  std::vector<std::string> got;
  for (auto span : seg.segment(s)) got.push_back(s.substr(span.begin, span.end - span.begin));
  EXPECT_EQ(got, (std::vector<std::string>{"J. K. Rowling wrote it. the end is near.", "Next one."}));
}

TEST(Segmenter, ProtectedSpansAreNeverSplit) {
  SentenceSegmenter seg(std::vector<std::string>{});
  const std::string s = "Visit Yahoo! Inc. Today we eat.";
  // Without protection "Yahoo!" ends a sentence.
  EXPECT_EQ(seg.segment(s).size(), 3u);
  EXPECT_EQ(seg.segment(s, {{6, 17}}).size(), 1u);
}

TEST(Segmenter, BlankLineSeparatesSentences) {
  SentenceSegmenter seg;
  EXPECT_EQ(seg.segment("Headline without period\n\nBody starts here.").size(), 2u);
}

// --- markup ----------------------------------------------------------------

TEST(Article, ParsesMarkupIntoMentions) {
  const auto a = parse_article({{"id", "a1"},
                                {"source", "wire"},
                                {"date", "20230831"},
                                {"body", "<e id=\"Q1\">Doja Cat</e> met <e id=\"Q2\">P2J</e>. Then <e id=\"Q1\">she</e> left."}});
  ASSERT_EQ(a.sentences.size(), 2u);
  EXPECT_EQ(a.sentences[0], "Doja Cat met P2J.");
  ASSERT_EQ(a.mentions.size(), 3u);
  EXPECT_EQ(a.mentions[1].entity_id, "Q2");
  EXPECT_EQ(a.mentions[1].surface, "P2J");
  EXPECT_EQ(a.mentions[1].offset, 13u);
  EXPECT_EQ(a.mentions[2].sentence_index, 1u);
  EXPECT_EQ(a.mentions[2].offset, 5u);
}

TEST(Article, MalformedMarkupAndMissingFields) {
  auto parse = [](const std::string& body) {
    parse_article({{"id", "a"}, {"source", "s"}, {"date", "20230101"}, {"body", body}});
  };
  for (const char* bad : {"<e id=\"Q1\">open", "close</e>", "<e id=\"Q1\"><e id=\"Q2\">x</e></e>", "<e>x</e>",
                          "<e id=\"\">x</e>", "<e id=\"Q1\"></e>"}) {
    EXPECT_EQ(kind_of([&] { parse(bad); }), ErrorKind::MalformedMarkup) << bad;
  }
  EXPECT_EQ(kind_of([] { parse_article({{"id", "a"}, {"source", "s"}, {"date", "2023"}, {"body", "x."}}); }),
            ErrorKind::BadDate);
  EXPECT_EQ(kind_of([] { parse_article({{"id", "a"}, {"date", "20230101"}, {"body", "x."}}); }),
            ErrorKind::MissingInput);
}

// --- chunking --------------------------------------------------------------

Article numbered_article(std::size_t n) {
  Article a;
  a.id = "a";
  a.source = "s";
  a.date = DateStamp::parse("20230101");
  for (std::size_t i = 0; i < n; ++i) a.sentences.push_back("S" + std::to_string(i) + ".");
  a.mentions.push_back({"E", "S4", 4, 0});
  return a;
}

TEST(Chunking, WindowOffsetsAndCoverage) {
  // 10 sentences, m=5, stride=3: offsets 0,3,6 (6..10 reaches the end).
  const auto chunks = chunk_article(numbered_article(10), 5, 3);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].first_sentence, 0u);
  EXPECT_EQ(chunks[1].first_sentence, 3u);
  EXPECT_EQ(chunks[2].first_sentence, 6u);
  EXPECT_EQ(chunks[2].sentences.size(), 4u);
  std::set<std::string> covered;
  for (const auto& c : chunks) {
    EXPECT_GE(c.sentences.size(), 1u);
    EXPECT_LE(c.sentences.size(), 5u);
    covered.insert(c.sentences.begin(), c.sentences.end());
    EXPECT_EQ(c.provenance.size(), 1u);
  }
  EXPECT_EQ(covered.size(), 10u);
  // Mention S4 lies in the first two windows, with chunk-relative indices.
  EXPECT_TRUE(chunks[0].has_entity("E"));
  EXPECT_TRUE(chunks[1].has_entity("E"));
  EXPECT_FALSE(chunks[2].has_entity("E"));
  EXPECT_EQ(chunks[1].mentions[0].sentence_index, 1u);
}

TEST(Chunking, ShortArticleAndBadStride) {
  EXPECT_EQ(chunk_article(numbered_article(2), 5, 3).size(), 1u);
  EXPECT_EQ(kind_of([] { chunk_article(numbered_article(4), 3, 4); }), ErrorKind::ConfigError);
}

// --- shingles and dedup ----------------------------------------------------

TEST(Shingles, JaccardValues) {
  EXPECT_DOUBLE_EQ(trigram_jaccard("a b c d", "a b c d"), 1.0);
  // {abc, bcd} vs {abc, bce}: 1 shared of 3.
  EXPECT_DOUBLE_EQ(trigram_jaccard("a b c d", "A, b c e"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(trigram_jaccard("", "..."), 1.0);
  EXPECT_DOUBLE_EQ(trigram_jaccard("", "a b c"), 0.0);
  EXPECT_DOUBLE_EQ(trigram_jaccard("hi there", "Hi, there!"), 1.0);
}

TEST(Dedup, DropsNearCopiesAndFoldsProvenance) {
  const std::string body = "The mayor opened the new bridge on Friday morning before a large crowd.";
  auto a = make_chunk("a1", "20230102", {body}, {}, "wire");
  auto b = make_chunk("a2", "20230101", {body}, {}, "post");
  auto c = make_chunk("a3", "20230103", {"Completely different words appear in this one sentence here."}, {});
  const auto kept = dedup_chunks({a, b, c}, 0.8);
  ASSERT_EQ(kept.size(), 2u);
  // a2 is earlier by date, so it survives and absorbs a1.
  EXPECT_EQ(kept[0].article_id, "a2");
  ASSERT_EQ(kept[0].provenance.size(), 2u);
  EXPECT_EQ(kept[0].provenance[1].article_id, "a1");
  EXPECT_EQ(kept[1].article_id, "a3");
}

TEST(Dedup, WindowLimitsComparisons) {
  const std::string body = "Identical text repeated across two distant days for the window test.";
  auto a = make_chunk("a1", "20230101", {body}, {});
  auto b = make_chunk("a2", "20230120", {body}, {});
  EXPECT_EQ(dedup_chunks({a, b}, DedupOptions{0.8, 7}).size(), 2u);
  EXPECT_EQ(dedup_chunks({a, b}, DedupOptions{0.8, 30}).size(), 1u);
}

TEST(Dedup, MatchesAllPairsOracleOnSyntheticCorpus) {
  SentenceSegmenter seg;
  std::vector<Chunk> chunks;
  for (const auto& r : synthetic_articles(60, 11)) {
    auto cs = chunk_article(parse_article(r, seg), 5, 3);
    chunks.insert(chunks.end(), cs.begin(), cs.end());
  }
  for (double tau : {0.5, 0.8, 0.95}) {
    const auto kept = dedup_chunks(chunks, tau);
    std::vector<std::string> keys;
    for (const auto& c : kept) keys.push_back(chunk_key(c));
    EXPECT_EQ(keys, oracle_dedup_keys(chunks, tau)) << "threshold " << tau;
    EXPECT_EQ(provenance_multiset(kept), provenance_multiset(chunks));
  }
}

TEST(Dedup, Idempotent) {
  SentenceSegmenter seg;
  std::vector<Chunk> chunks;
  for (const auto& r : synthetic_articles(30, 5)) {
    auto cs = chunk_article(parse_article(r, seg), 5, 3);
    chunks.insert(chunks.end(), cs.begin(), cs.end());
  }
  const auto once = dedup_chunks(chunks, 0.8);
  EXPECT_EQ(dedup_chunks(once, 0.8), once);
}

// --- serialization -----------------------------------------------------------

TEST(ChunkJson, RoundTrips) {
  auto c = make_chunk("a1", "20230831", {"Doja Cat met P2J.", "Then she left."}, {{"Q1", "Doja Cat"}, {"Q2", "P2J"}});
  c.provenance.push_back({"a9", "post", DateStamp::parse("20230830")});
  EXPECT_EQ(chunk_from_json(to_json(c)), c);
  EXPECT_EQ(parse_jsonl(dump_jsonl({to_json(c)})).size(), 1u);
}

TEST(EntityNames, MostFrequentSurfaceWins) {
  auto a = make_chunk("a", "20230101", {"Quill sang.", "Mara Quill bowed.", "Mara Quill left."},
                      {{"Q1", "Mara Quill"}});
  a.mentions.push_back({"Q1", "Quill", 0, 0});
  const auto names = entity_names({a});
  EXPECT_EQ(names.at("Q1"), "Mara Quill");
}

}  // namespace
