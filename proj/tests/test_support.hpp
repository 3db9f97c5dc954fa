#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "tracksieve/tracksieve.hpp"

namespace tracksieve::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tracksieve_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct MailSpec {
  std::string from = "News <news@shop.com>";
  std::string subject = "Weekly deals";
  std::string date = "Tue, 03 Nov 2015 10:00:00 +0000";
  std::string list_unsubscribe;
  std::string html;  // empty: plain-text message
  std::string text = "Hello";
};

inline std::string make_mail(const MailSpec& m) {
  std::string out = "From: " + m.from + "\r\nTo: reader@example.org\r\nSubject: " + m.subject +
                    "\r\nDate: " + m.date + "\r\nMIME-Version: 1.0\r\n";
  if (!m.list_unsubscribe.empty()) out += "List-Unsubscribe: " + m.list_unsubscribe + "\r\n";
  if (m.html.empty()) {
    out += "Content-Type: text/plain; charset=utf-8\r\n\r\n" + m.text + "\r\n";
    return out;
  }
  out += "Content-Type: multipart/alternative; boundary=\"b1\"\r\n\r\n";
  out += "--b1\r\nContent-Type: text/plain; charset=utf-8\r\n\r\n" + m.text + "\r\n";
  out += "--b1\r\nContent-Type: text/html; charset=utf-8\r\n\r\n" + m.html + "\r\n";
  out += "--b1--\r\n";
  return out;
}

inline std::string img_tags(const std::vector<std::string>& urls) {
  std::string s = "<html><body>";
  for (const auto& u : urls) s += "<img src=\"" + u + "\">";
  return s + "</body></html>";
}

// Small generated corpus shared by tests; generated once per process.
inline const std::filesystem::path& shared_corpus() {
  static TempDir dir("shared_corpus");
  static bool made = [] {
    GenConfig cfg;
    cfg.seed = 5;
    cfg.n_senders = 30;
    cfg.emails_per_sender_min = 8;
    cfg.emails_per_sender_max = 8;
    generate_corpus(cfg, dir / "a", dir / "b", dir / "manifest.jsonl");
    return true;
  }();
  (void)made;
  return dir.path();
}

inline const Dataset& shared_dataset() {
  static const Dataset ds = [] {
    LabeledCorpus c = label_corpus(shared_corpus());
    return build_dataset(c.documents, FeatureOptions{true, {}});
  }();
  return ds;
}

}  // namespace tracksieve::testing
