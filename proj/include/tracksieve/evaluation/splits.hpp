#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tracksieve/error.hpp"
#include "tracksieve/learners/dataset.hpp"
#include "tracksieve/rng.hpp"
#include "tracksieve/time.hpp"

namespace tracksieve {

enum class Regime { kOutOfSample, kOutOfUniverse, kOutOfTime, kOutOfUniverseAndTime };

inline std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::kOutOfSample: return "out_of_sample";
    case Regime::kOutOfUniverse: return "out_of_universe";
    case Regime::kOutOfTime: return "out_of_time";
    case Regime::kOutOfUniverseAndTime: return "out_of_universe_and_time";
  }
  return "?";
}

struct EmailMeta {
  std::string email_id;
  std::string sender_domain;
  Timestamp received_at{};
};

struct SplitPlan {
  Regime regime = Regime::kOutOfSample;
  std::size_t repetition = 0;
  std::set<std::string> train;
  std::set<std::string> test;
  // Test window (start, end], for the time-based regimes.
  std::optional<std::pair<Timestamp, Timestamp>> window;
  bool empty_test() const { return test.empty(); }
};

// One entry per distinct email of the dataset, in email-id order.
inline std::vector<EmailMeta> email_index(const Dataset& ds) {
  std::map<std::string, EmailMeta> by_id;
  for (std::size_t i = 0; i < ds.rows(); ++i)
    by_id.emplace(ds.group[i], EmailMeta{ds.group[i], ds.sender[i], ds.time[i]});
  std::vector<EmailMeta> out;
  for (auto& [id, meta] : by_id) out.push_back(std::move(meta));
  return out;
}

namespace split_detail {

inline std::vector<EmailMeta> sorted_pool(std::vector<EmailMeta> emails,
                                          std::optional<Timestamp> train_end) {
  if (train_end)
    emails.erase(std::remove_if(emails.begin(), emails.end(),
                                [&](const EmailMeta& e) { return e.received_at > *train_end; }),
                 emails.end());
  std::sort(emails.begin(), emails.end(),
            [](const EmailMeta& a, const EmailMeta& b) { return a.email_id < b.email_id; });
  return emails;
}

inline std::vector<std::string> domains_of(const std::vector<EmailMeta>& emails) {
  std::set<std::string> d;
  for (const auto& e : emails) d.insert(e.sender_domain);
  return {d.begin(), d.end()};
}

}  // namespace split_detail

// Per repetition a uniform sample of round(fraction * N) emails is tested
// and the rest trains. Only emails received up to `train_end` (when given)
// take part.
inline std::vector<SplitPlan> split_out_of_sample(const std::vector<EmailMeta>& emails,
                                                  double fraction, std::size_t repetitions,
                                                  std::uint64_t seed,
                                                  std::optional<Timestamp> train_end = {}) {
  auto pool = split_detail::sorted_pool(emails, train_end);
  const std::size_t n = pool.size();
  const std::size_t n_test = std::size_t(std::llround(fraction * double(n)));
  if (n_test == 0) throw Error(Errc::kEmptySplit, "out-of-sample test set would be empty");
  if (n_test >= n) throw Error(Errc::kEmptySplit, "out-of-sample training set would be empty");
  std::vector<SplitPlan> plans;
  for (std::size_t r = 0; r < repetitions; ++r) {
    Rng rng(derive_seed(seed, r));
    auto pick = sample_without_replacement(n, n_test, rng);
    SplitPlan plan;
    plan.regime = Regime::kOutOfSample;
    plan.repetition = r;
    std::vector<bool> is_test(n, false);
    for (std::size_t i : pick) is_test[i] = true;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? plan.test : plan.train).insert(pool[i].email_id);
    plans.push_back(std::move(plan));
  }
  return plans;
}

// Per repetition `n_companies` sender domains are held out entirely.
inline std::vector<SplitPlan> split_out_of_universe(const std::vector<EmailMeta>& emails,
                                                    std::size_t n_companies,
                                                    std::size_t repetitions, std::uint64_t seed,
                                                    std::optional<Timestamp> train_end = {}) {
  auto pool = split_detail::sorted_pool(emails, train_end);
  auto domains = split_detail::domains_of(pool);
  if (n_companies == 0) throw Error(Errc::kEmptySplit, "no companies held out");
  if (domains.size() <= n_companies)
    throw Error(Errc::kTooFewCompanies, std::to_string(domains.size()) + " sender domains, need more than " +
                                            std::to_string(n_companies));
  std::vector<SplitPlan> plans;
  for (std::size_t r = 0; r < repetitions; ++r) {
    Rng rng(derive_seed(seed, r));
    auto pick = sample_without_replacement(domains.size(), n_companies, rng);
    std::set<std::string> held;
    for (std::size_t i : pick) held.insert(domains[i]);
    SplitPlan plan;
    plan.regime = Regime::kOutOfUniverse;
    plan.repetition = r;
    for (const auto& e : pool) (held.count(e.sender_domain) ? plan.test : plan.train).insert(e.email_id);
    plans.push_back(std::move(plan));
  }
  return plans;
}

// Training: everything received up to train_end. Window i (1-based) covers
// (train_end + (i-1)*months, train_end + i*months].
inline std::vector<SplitPlan> split_out_of_time(const std::vector<EmailMeta>& emails,
                                                Timestamp train_end, int window_months = 3,
                                                std::size_t n_windows = 5) {
  std::set<std::string> train;
  for (const auto& e : emails)
    if (e.received_at <= train_end) train.insert(e.email_id);
  std::vector<SplitPlan> plans;
  Timestamp lo = train_end;
  for (std::size_t i = 1; i <= n_windows; ++i) {
    Timestamp hi = add_months(train_end, window_months * int(i));
    SplitPlan plan;
    plan.regime = Regime::kOutOfTime;
    plan.repetition = i - 1;
    plan.train = train;
    plan.window = std::make_pair(lo, hi);
    for (const auto& e : emails)
      if (e.received_at > lo && e.received_at <= hi) plan.test.insert(e.email_id);
    plans.push_back(std::move(plan));
    lo = hi;
  }
  return plans;
}

// Held-out companies' emails after train_end are tested; the remaining
// companies' emails up to train_end train.
inline std::vector<SplitPlan> split_out_of_universe_and_time(const std::vector<EmailMeta>& emails,
                                                             Timestamp train_end,
                                                             std::size_t n_companies,
                                                             std::size_t repetitions,
                                                             std::uint64_t seed) {
  auto domains = split_detail::domains_of(emails);
  if (n_companies == 0) throw Error(Errc::kEmptySplit, "no companies held out");
  if (domains.size() <= n_companies)
    throw Error(Errc::kTooFewCompanies, "too few sender domains");
  std::vector<SplitPlan> plans;
  for (std::size_t r = 0; r < repetitions; ++r) {
    Rng rng(derive_seed(seed, r));
    auto pick = sample_without_replacement(domains.size(), n_companies, rng);
    std::set<std::string> held;
    for (std::size_t i : pick) held.insert(domains[i]);
    SplitPlan plan;
    plan.regime = Regime::kOutOfUniverseAndTime;
    plan.repetition = r;
    for (const auto& e : emails) {
      bool after = e.received_at > train_end;
      if (held.count(e.sender_domain)) {
        if (after) plan.test.insert(e.email_id);
      } else if (!after) {
        plan.train.insert(e.email_id);
      }
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

// Sender domains of a set of emails.
inline std::set<std::string> sender_domains(const std::vector<EmailMeta>& emails,
                                            const std::set<std::string>& ids) {
  std::set<std::string> out;
  for (const auto& e : emails)
    if (ids.count(e.email_id)) out.insert(e.sender_domain);
  return out;
}

}  // namespace tracksieve
