#pragma once

#include <string>
#include <vector>

#include "loyalty/ingest.hpp"

namespace fixture {

// Ten customers. "early" and "late" have identical recency, frequency and
// spend but buy in different weeks; four customers are worse and four better
// on every aggregate, so both land on ranks 5 and 6 of 10.
inline loyalty::TransactionLog same_score_pair() {
  using loyalty::Money;
  const loyalty::Date start = *loyalty::Date::from_ymd(2021, 3, 1);
  std::vector<loyalty::Transaction> txs;
  auto add = [&](const std::string& id, int day, std::int64_t cents) {
    txs.push_back({id, start + day, 1, Money::from_cents(cents)});
  };
  add("early", 0, 5000);
  add("early", 1, 5000);
  add("early", 22, 100);
  add("late", 7, 5000);
  add("late", 15, 5000);
  add("late", 22, 100);
  for (int i = 0; i < 4; ++i) add("worse" + std::to_string(i), i, 10 + i);
  for (int i = 0; i < 4; ++i) {
    const std::string id = "better" + std::to_string(i);
    for (int j = 0; j < 4 + i; ++j) add(id, 24 + i - j, 10000);
  }
  return loyalty::TransactionLog::canonical(txs);
}

}  // namespace fixture
