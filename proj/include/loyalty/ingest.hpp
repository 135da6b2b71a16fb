#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loyalty/date.hpp"
#include "loyalty/money.hpp"

namespace loyalty {

struct Transaction {
  std::string customer_id;
  Date date;
  std::int64_t quantity = 0;
  Money monetary;

  auto operator<=>(const Transaction&) const = default;
};

// Canonical purchase log: sorted by (customer_id, date), with quantity and
// monetary as final keys so that the order never depends on input line order.
struct TransactionLog {
  std::vector<Transaction> transactions;
  Date first_date;
  Date last_date;

  // Sorts and computes the horizon from the data. Throws DataError when empty.
  static TransactionLog canonical(std::vector<Transaction> transactions);

  bool empty() const { return transactions.empty(); }
  Money total_monetary() const;
  bool operator==(const TransactionLog&) const = default;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  TransactionLog log;
  std::size_t rejected = 0;
  std::vector<LineError> errors;
};

// Whitespace-delimited "customer_id YYYYMMDD quantity monetary" lines, no header.
ParseResult parse_cdnow(std::istream& in);

// Column names for the comma-delimited format. An empty quantity name means
// the column is absent and every row counts one unit.
struct GenericSchema {
  std::string id = "customer_id";
  std::string date = "date";
  std::string quantity = "quantity";
  std::string monetary = "monetary";
};

ParseResult parse_generic(std::istream& in, const GenericSchema& schema = {});

// Writes the log in the generic format using the default schema's column names.
void write_generic(std::ostream& out, const TransactionLog& log);

// Uniform grid of fixed-length periods starting at the log's first date.
struct PeriodGrid {
  int period_length = 7;
  std::size_t num_periods = 1;
  Date origin;

  std::size_t period_of(Date d) const;
  Date period_start(std::size_t period) const { return origin + static_cast<std::int32_t>(period) * period_length; }
  Date period_end(std::size_t period) const { return period_start(period + 1) + -1; }
};

PeriodGrid bucketize(const TransactionLog& log, int period_length_days);

// Exact monetary total per period.
std::vector<Money> monetary_by_period(const TransactionLog& log, const PeriodGrid& grid);

// Restricts the log to periods [0, cutoff_period] and returns the matching
// grid. The horizon's last date becomes the last day observed up to the cutoff.
// Throws std::out_of_range when cutoff_period >= grid.num_periods.
std::pair<TransactionLog, PeriodGrid> observation_window(const TransactionLog& log, const PeriodGrid& grid,
                                                         std::size_t cutoff_period);

}  // namespace loyalty
