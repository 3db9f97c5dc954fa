#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "test_support.hpp"

namespace ts = tracksieve;
using ts::testing::MailSpec;
using ts::testing::img_tags;
using ts::testing::make_mail;

namespace {

ts::EmailDocument doc_with(const std::vector<std::string>& urls, MailSpec m = {}) {
  m.html = img_tags(urls);
  auto doc = ts::parse_email(make_mail(m), "e");
  return doc;
}

std::vector<ts::FeatureVector> features_of(const ts::EmailDocument& doc) {
  return ts::featurize_email(doc, ts::FeatureOptions{true, {}});
}

}  // namespace

TEST(Similarity, Basics) {
  EXPECT_DOUBLE_EQ(ts::ratcliff_obershelp("abc", "abc"), 1.0);
  EXPECT_DOUBLE_EQ(ts::ratcliff_obershelp("abc", "xyz"), 0.0);
  EXPECT_NEAR(ts::ratcliff_obershelp("aaaa", "aa"), 2.0 * 2 / 6, 1e-9);
  EXPECT_NEAR(ts::ratcliff_obershelp("WIKIMEDIA", "WIKIMANIA"), 14.0 / 18, 1e-12);
}

TEST(Tokens, AbsoluteReference) {
  auto t = ts::tokenize_reference("http://cl.exct.net/open.aspx?u=1");
  EXPECT_EQ(t.host, "cl.exct.net");
  EXPECT_TRUE(t.folders.empty());
  EXPECT_EQ(t.filename, "open.aspx");
  EXPECT_EQ(t.extension, "aspx");
  EXPECT_EQ(t.query, "u=1");
  EXPECT_EQ(t.registrable_domain, "exct.net");
}

TEST(Tokens, Folders) {
  auto t = ts::tokenize_reference("https://tracking.srv2.de/op/x/A-B-C.gif");
  EXPECT_EQ(t.folders, (std::vector<std::string>{"op", "x"}));
  EXPECT_EQ(t.extension, "gif");
}

TEST(Tokens, RelativeReference) {
  auto t = ts::tokenize_reference("/img/logo.png");
  EXPECT_FALSE(t.host.has_value());
  EXPECT_EQ(t.folders, (std::vector<std::string>{"img"}));
}

TEST(Tokens, EmptyIsMalformed) {
  EXPECT_THROW(ts::tokenize_reference(""), ts::Error);
}

TEST(Features, QuestionMark) {
  auto fv = features_of(doc_with({"http://a.b/x?u=1"}));
  EXPECT_EQ(fv[0].at("has_question_mark"), 1.0);
  fv = features_of(doc_with({"http://a.b/x.gif"}));
  EXPECT_EQ(fv[0].at("has_question_mark"), 0.0);
}

TEST(Features, FilenameCounts) {
  auto fv = features_of(doc_with({"http://a.b/aB9cD.gif"}));
  EXPECT_EQ(fv[0].at("count_uppercase"), 2.0);
  EXPECT_EQ(fv[0].at("count_numbers"), 1.0);
}

TEST(Features, LongestNumber) {
  auto fv = features_of(doc_with({"http://a.b/p/img12345x9.gif"}));
  EXPECT_EQ(fv[0].at("longest_number"), 5.0);
}

TEST(Features, RelativePositionOfLastImage) {
  std::vector<std::string> urls;
  for (int i = 0; i < 10; ++i) urls.push_back("http://a.b/i" + std::to_string(i) + ".png");
  auto fv = features_of(doc_with(urls));
  EXPECT_DOUBLE_EQ(fv[9].at("rel_image_position"), 1.0);
  EXPECT_DOUBLE_EQ(fv[0].at("rel_image_position"), 0.0);
}

TEST(Features, IdenticalImages) {
  auto fv = features_of(doc_with({"http://a.b/s.gif", "http://a.b/x.gif", "http://a.b/s.gif", "http://a.b/s.gif"}));
  EXPECT_EQ(fv[0].at("count_identical_images"), 2.0);
  EXPECT_EQ(fv[1].at("count_identical_images"), 0.0);
}

TEST(Features, RatioSmallerImages) {
  MailSpec m;
  m.html = "<img src=\"http://a.b/1.gif\" width=1 height=1><img src=\"http://a.b/2.gif\" width=20 height=20>"
           "<img src=\"http://a.b/3.gif\" width=30 height=30>";
  auto doc = ts::parse_email(make_mail(m), "e");
  auto fv = features_of(doc);
  EXPECT_EQ(fv[0].at("ratio_smaller_images"), 0.0);
  EXPECT_GT(fv[2].at("ratio_smaller_images"), 0.0);
}

TEST(Features, ServerGroup) {
  std::vector<std::string> urls(5, "http://img.shop.com/a.png");
  auto fv = features_of(doc_with(urls));
  for (const auto& v : fv) EXPECT_EQ(v.at("share_same_domain"), 1.0);
  EXPECT_EQ(fv[0].at("sender_domain_match"), 1.0);
  fv = features_of(doc_with({"http://ads.dotomi.com/cookieredir/x/y.php?a=1"}));
  EXPECT_EQ(fv[0].at("sender_domain_match"), 0.0);
  fv = features_of(doc_with({"http://news.shop.com/a.png"}));
  EXPECT_EQ(fv[0].at("sender_domain_match"), 1.0);
}

TEST(Features, HeaderGroup) {
  auto fv = features_of(doc_with({"http://a.b/x.gif"}));
  EXPECT_EQ(fv[0].at("unsubscribe_length"), 0.0);

  MailSpec m;
  m.list_unsubscribe = "<http://shop.com/unsub?id=a1b2c3d4e9>";
  fv = features_of(doc_with({"http://t.shop.com/o/a1b2c3d4e9"}, m));
  EXPECT_EQ(fv[0].at("match_list_unsubscribe"), 1.0);
  EXPECT_GT(fv[0].at("unsubscribe_length"), 0.0);

  MailSpec acme;
  acme.from = "news@acme.com";
  fv = features_of(doc_with({"http://cdn.x.net/acme_logo.png"}, acme));
  EXPECT_EQ(fv[0].at("image_name_matches_sender"), 1.0);
}

TEST(Features, SchemaIsUniform) {
  auto doc = doc_with({"http://a.b/x?u=1", "/rel/logo.png", "http://c.d/e/f/g.jpg"});
  auto fv = features_of(doc);
  ASSERT_EQ(fv.size(), 3u);
  for (const auto& v : fv) EXPECT_EQ(v.values.size(), fv[0].schema->names.size());
  EXPECT_TRUE(features_of(doc_with({})).empty());
}

TEST(Features, DeterministicRows) {
  auto doc = doc_with({"http://a.b/x?u=1", "http://c.d/e/f/g.jpg"});
  auto a = features_of(doc), b = features_of(doc);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(ts::feature_csv_row(a[i]), ts::feature_csv_row(b[i]));
}

TEST(Features, ExcludedGroupOptional) {
  auto with = ts::make_feature_schema(ts::FeatureOptions{true, {}});
  auto without = ts::make_feature_schema(ts::FeatureOptions{});
  EXPECT_TRUE(with->index("area").has_value());
  EXPECT_FALSE(without->index("area").has_value());
  EXPECT_NE(with->version, without->version);
}
