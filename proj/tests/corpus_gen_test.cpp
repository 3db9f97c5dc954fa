#include <gtest/gtest.h>

#include "test_support.hpp"

namespace ts = tracksieve;
using ts::testing::TempDir;

namespace {

ts::GenConfig small(std::uint64_t seed) {
  ts::GenConfig cfg;
  cfg.seed = seed;
  cfg.n_senders = 6;
  cfg.emails_per_sender_min = 3;
  cfg.emails_per_sender_max = 5;
  return cfg;
}

std::string mailbox_bytes(const std::filesystem::path& dir) {
  std::string all;
  for (const auto& p : ts::list_mailbox(dir)) all += p.filename().string() + "\n" + ts::read_file(p);
  return all;
}

}  // namespace

TEST(CorpusGen, Deterministic) {
  TempDir one("gen1"), two("gen2");
  ts::generate_corpus(small(4), one / "a", one / "b", one / "m.jsonl");
  ts::generate_corpus(small(4), two / "a", two / "b", two / "m.jsonl");
  EXPECT_EQ(mailbox_bytes(one / "a"), mailbox_bytes(two / "a"));
  EXPECT_EQ(mailbox_bytes(one / "b"), mailbox_bytes(two / "b"));
  EXPECT_EQ(ts::read_file(one / "m.jsonl"), ts::read_file(two / "m.jsonl"));
}

TEST(CorpusGen, LabelerMatchesManifest) {
  const auto& dir = ts::testing::shared_corpus();
  auto manifest = ts::read_manifest(dir / "manifest.jsonl");
  std::map<std::pair<std::string, std::size_t>, ts::Label> truth;
  for (const auto& e : manifest) truth[{e.email_id, e.position}] = e.label;
  auto c = ts::label_corpus(dir);
  EXPECT_TRUE(c.discarded.empty());
  EXPECT_TRUE(c.unmatched.empty());
  ASSERT_EQ(c.labels.size(), truth.size());
  for (const auto& li : c.labels) EXPECT_EQ(li.label, (truth.at({li.email_id, li.position})));
}

TEST(CorpusGen, AlwaysTrackedWhenAsked) {
  TempDir dir("gen_tracked");
  auto cfg = small(9);
  cfg.p_tracked_given_html = 1.0;
  cfg.p_images_given_html = 1.0;
  ts::generate_corpus(cfg, dir / "a", dir / "b", dir / "m.jsonl");
  auto c = ts::label_corpus(dir / "a", dir / "b");
  for (const auto& doc : c.documents) {
    if (!doc.is_html) continue;
    bool tracked = false;
    for (const auto& img : doc.images) tracked = tracked || img.label == ts::Label::kTracking;
    EXPECT_TRUE(tracked) << doc.email_id;
  }
}

TEST(CorpusGen, RefusesNonEmptyOutput) {
  TempDir dir("gen_busy");
  std::filesystem::create_directories(dir / "a");
  ts::write_file(dir / "a" / "old.eml", "x");
  try {
    ts::generate_corpus(small(1), dir / "a", dir / "b", dir / "m.jsonl");
    FAIL();
  } catch (const ts::Error& e) {
    EXPECT_EQ(e.code(), ts::Errc::kNonEmptyOutput);
  }
}

TEST(CorpusGen, ConfigValidation) {
  EXPECT_THROW(ts::parse_gen_config({{"p_html", 1.5}}), ts::Error);
  EXPECT_THROW(ts::parse_gen_config({{"n_senders", 0}}), ts::Error);
  auto cfg = ts::parse_gen_config({{"seed", 3}, {"n_senders", 7}});
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.n_senders, 7u);
}

TEST(CorpusGen, AdversarialStillLabelsExactly) {
  TempDir dir("gen_adv");
  auto cfg = small(2);
  cfg.adversarial = true;
  ts::generate_corpus(cfg, dir / "a", dir / "b", dir / "m.jsonl");
  auto manifest = ts::read_manifest(dir / "m.jsonl");
  std::map<std::pair<std::string, std::size_t>, ts::Label> truth;
  for (const auto& e : manifest) truth[{e.email_id, e.position}] = e.label;
  auto c = ts::label_corpus(dir / "a", dir / "b");
  for (const auto& li : c.labels) EXPECT_EQ(li.label, (truth.at({li.email_id, li.position})));
}
