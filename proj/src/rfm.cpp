#include "loyalty/rfm.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "loyalty/csv.hpp"
#include "loyalty/errors.hpp"

namespace loyalty {

namespace {

// Contiguous runs of one customer's transactions in the canonical log.
template <typename Fn>
void for_each_customer(const TransactionLog& log, Fn&& fn) {
  const auto& tx = log.transactions;
  std::size_t begin = 0;
  while (begin < tx.size()) {
    std::size_t end = begin + 1;
    while (end < tx.size() && tx[end].customer_id == tx[begin].customer_id) ++end;
    fn(std::span<const Transaction>(tx.data() + begin, end - begin));
    begin = end;
  }
}

// Assigns quintile digits given a strict "worse than" ordering over record indices.
template <typename Worse>
std::vector<int> quintile_digits(const std::vector<RfmRecord>& records, Worse worse) {
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (worse(records[a], records[b])) return true;
    if (worse(records[b], records[a])) return false;
    return records[a].customer_id < records[b].customer_id;
  });
  std::vector<int> digits(n);
  for (std::size_t rank0 = 0; rank0 < n; ++rank0) {
    const std::size_t rank = rank0 + 1;
    digits[order[rank0]] = static_cast<int>((5 * rank + n - 1) / n);
  }
  return digits;
}

}  // namespace

RfmSnapshot rfm_snapshot(const TransactionLog& log, const PeriodGrid& grid, std::size_t cutoff_period) {
  if (cutoff_period >= grid.num_periods) {
    throw std::out_of_range("cutoff period " + std::to_string(cutoff_period) + " outside grid of " +
                            std::to_string(grid.num_periods) + " periods");
  }
  const Date cutoff_day = std::min(grid.period_end(cutoff_period), log.last_date);
  RfmSnapshot snapshot;
  for_each_customer(log, [&](std::span<const Transaction> history) {
    RfmRecord record{history.front().customer_id, 0, 0, Money{}};
    Date last_purchase;
    for (const auto& t : history) {
      if (t.date > cutoff_day) break;
      ++record.frequency;
      record.monetary += t.monetary;
      last_purchase = t.date;
    }
    if (record.frequency == 0) return;
    record.recency_days = cutoff_day - last_purchase;
    snapshot.records.push_back(std::move(record));
  });
  return snapshot;
}

std::map<std::string, RfmScore> rfm_score(const RfmSnapshot& snapshot) {
  const auto& records = snapshot.records;
  if (records.empty()) throw DataError("cannot score an empty RFM snapshot");
  const auto r = quintile_digits(records, [](const RfmRecord& a, const RfmRecord& b) {
    return a.recency_days > b.recency_days;
  });
  const auto f = quintile_digits(records, [](const RfmRecord& a, const RfmRecord& b) {
    return a.frequency < b.frequency;
  });
  const auto m = quintile_digits(records, [](const RfmRecord& a, const RfmRecord& b) {
    return a.monetary < b.monetary;
  });
  std::map<std::string, RfmScore> scores;
  for (std::size_t i = 0; i < records.size(); ++i) {
    scores.emplace(records[i].customer_id, RfmScore{r[i], f[i], m[i]});
  }
  return scores;
}

const std::vector<double>& RfmSeries::component(Component c) const {
  switch (c) {
    case Component::Recency: return recency;
    case Component::Frequency: return frequency;
    case Component::Monetary: return monetary;
  }
  throw std::invalid_argument("unknown component");
}

std::vector<RfmSeries> rfm_series(const TransactionLog& log, const PeriodGrid& grid) {
  const std::size_t n = grid.num_periods;
  std::vector<RfmSeries> out;
  for_each_customer(log, [&](std::span<const Transaction> history) {
    RfmSeries s{history.front().customer_id, std::vector<double>(n), std::vector<double>(n),
                std::vector<double>(n)};
    std::vector<Money> spend(n);
    for (const auto& t : history) {
      const std::size_t p = grid.period_of(t.date);
      s.frequency[p] += 1.0;
      spend[p] += t.monetary;
    }
    double since = 0.0;
    bool seen = false;
    for (std::size_t t = 0; t < n; ++t) {
      s.monetary[t] = spend[t].to_double();
      if (s.frequency[t] > 0.0) {
        seen = true;
        since = 0.0;
      } else {
        since = seen ? since + 1.0 : static_cast<double>(t + 1);
      }
      s.recency[t] = since;
    }
    out.push_back(std::move(s));
  });
  return out;
}

void write_series_csv(std::ostream& out, std::span<const RfmSeries> series) {
  const std::size_t n = series.empty() ? 0 : series.front().frequency.size();
  out << "customer_id,component";
  for (std::size_t p = 0; p < n; ++p) out << ",p" << p;
  out << '\n';
  for (const auto& s : series) {
    for (Component c : kComponents) {
      out << csv::escape(s.customer_id) << ',' << component_code(c);
      for (double v : s.component(c)) out << ',' << csv::format_double(v);
      out << '\n';
    }
  }
}

}  // namespace loyalty
