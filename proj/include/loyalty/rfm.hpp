#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "loyalty/component.hpp"
#include "loyalty/ingest.hpp"

namespace loyalty {

struct RfmRecord {
  std::string customer_id;
  std::int64_t recency_days = 0;  // days from the last purchase to the cutoff day
  std::int64_t frequency = 0;     // transactions up to the cutoff
  Money monetary;                 // spend up to the cutoff
};

// One record per customer with at least one purchase up to the cutoff, sorted by id.
struct RfmSnapshot {
  std::vector<RfmRecord> records;
};

// Aggregates periods [0, cutoff_period]. The cutoff day is the last day of the
// cutoff period, clipped to the log horizon.
RfmSnapshot rfm_snapshot(const TransactionLog& log, const PeriodGrid& grid, std::size_t cutoff_period);

struct RfmScore {
  int r = 0;
  int f = 0;
  int m = 0;

  int composite() const { return 100 * r + 10 * f + m; }
  bool operator==(const RfmScore&) const = default;
};

// Rank-based quintile digits, digit = ceil(5 * rank / n) with rank 1 the worst
// customer. Larger frequency and monetary are better, smaller recency is
// better; ties rank by ascending customer id.
std::map<std::string, RfmScore> rfm_score(const RfmSnapshot& snapshot);

struct RfmSeries {
  std::string customer_id;
  std::vector<double> recency;
  std::vector<double> frequency;
  std::vector<double> monetary;

  const std::vector<double>& component(Component c) const;
  bool operator==(const RfmSeries&) const = default;
};

// Per-period series for every customer in the log, sorted by id. Recency counts
// periods since the latest active period; before the first purchase it is t + 1.
std::vector<RfmSeries> rfm_series(const TransactionLog& log, const PeriodGrid& grid);

// Wide CSV: customer_id,component,p0..p{n-1}; three rows (R, F, M) per customer.
void write_series_csv(std::ostream& out, std::span<const RfmSeries> series);

}  // namespace loyalty
