#include <gtest/gtest.h>

#include "clcts/error.hpp"
#include "clcts/title.hpp"

using namespace clcts;

TEST(Title, HistoricalSpellings) {
  EXPECT_EQ(normalize_title("Die Theilung der Erde", "de"), normalize_title("Die Teilung der Erde", "de"));
  EXPECT_EQ(normalize_title("Er gieng", "de"), "er ging");
  EXPECT_EQ(normalize_title("Müller's Reiſe!", "de"), "mullers reise");
}

TEST(Title, Idempotent) {
  for (const char* t : {"Thränen und Thaten", "Ein Hieng-Spiel", "Straße der Wahrheit", "  A  B  "}) {
    const auto once = normalize_title(t, "de");
    EXPECT_EQ(normalize_title(once, "de"), once) << t;
  }
}

TEST(Title, EmptyTitleRejected) { EXPECT_THROW(normalize_title("", "de"), ValidationError); }

TEST(Title, MatchingExactThenNormalizedThenEszett) {
  const std::vector<TitledDocument> docs = {
      {"Die Strasse", "de", {}}, {"Theater", "de", {}}, {"Unmatched", "de", {}}, {"Exact", "de", {}}};
  const std::vector<WikiEntry> wiki = {{"Exact", "s1"}, {"Die Straße", "s2"}, {"Teater", "s3"}, {"Extra", "s4"}};
  const auto r = match_summaries(docs, wiki);
  ASSERT_EQ(r.matches.size(), 3u);
  EXPECT_EQ(r.matches.size() + r.unmatched_documents.size(), docs.size());
  EXPECT_EQ(r.unmatched_documents, (std::vector<std::size_t>{2}));
  EXPECT_EQ(r.unmatched_wiki, (std::vector<std::size_t>{3}));
  for (const auto& m : r.matches) {
    if (m.document == 0) {
      EXPECT_EQ(m.wiki, 1u);
      EXPECT_TRUE(m.eszett_fallback);
    }
    if (m.document == 3) { EXPECT_TRUE(m.exact); }
  }
}

TEST(Title, AmbiguityReported) {
  const std::vector<TitledDocument> docs = {{"Faust", "de", {}}};
  const std::vector<WikiEntry> wiki = {{"Faust", "a"}, {"FAUST", "b"}};
  const auto r = match_summaries(docs, wiki);
  ASSERT_EQ(r.ambiguities.size(), 1u);
  EXPECT_EQ(r.ambiguities[0].wiki.size(), 2u);
}
