#include <gtest/gtest.h>

#include "test_support.hpp"

namespace ts = tracksieve;

TEST(Blacklist, DefaultHasFourteenRules) {
  EXPECT_EQ(ts::default_rules().rules.size(), 14u);
}

TEST(Blacklist, DataFileMatchesBuiltIn) {
  auto file = ts::compile_rules(std::filesystem::path(TRACKSIEVE_DATA_DIR) / "blacklist_default.tsv");
  EXPECT_EQ(ts::rules_to_text(file), ts::rules_to_text(ts::default_rules()));
}

TEST(Blacklist, EmptySet) {
  auto rules = ts::parse_rules("");
  EXPECT_TRUE(rules.rules.empty());
  EXPECT_FALSE(ts::match_url("http://open.delivery.net/o?x9f2", rules));
}

TEST(Blacklist, BogusTokenRejected) {
  try {
    ts::parse_rules("Bad\thttp://x.com/[BOGUS]\n");
    FAIL() << "expected InvalidTemplate";
  } catch (const ts::Error& e) {
    EXPECT_EQ(e.code(), ts::Errc::kInvalidTemplate);
  }
}

TEST(Blacklist, Matches) {
  const auto& r = ts::default_rules();
  EXPECT_EQ(ts::match_url("http://open.delivery.net/o?x9f2", r), "Axiom Digital");
  EXPECT_EQ(ts::match_url("http://m1e.net/c?AbC123", r), "Mailermailer");
  EXPECT_EQ(ts::match_url("https://m1e.net/c?AbC123", r), "Mailermailer");
  EXPECT_FALSE(ts::match_url("http://shop.example.com/img/logo.png", r));
}

TEST(Blacklist, AnchoredAtBothEnds) {
  const auto& r = ts::default_rules();
  EXPECT_FALSE(ts::match_url("http://evil.com/?http://m1e.net/c?AbC123", r));
  EXPECT_FALSE(ts::match_url("http://m1e.net/c?AbC123/extra", r));
}

TEST(Blacklist, MailWildcardNeedsAddress) {
  const auto& r = ts::default_rules();
  EXPECT_EQ(ts::match_url("https://acme.emltrk.com/acme?d=jo%40example.org", r), "Litmus");
  EXPECT_FALSE(ts::match_url("https://acme.emltrk.com/acme?d=nobody", r));
}
