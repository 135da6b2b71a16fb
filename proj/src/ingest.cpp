#include "loyalty/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "loyalty/csv.hpp"
#include "loyalty/errors.hpp"

namespace loyalty {

namespace {

std::optional<std::int64_t> parse_quantity(std::string_view text) {
  std::int64_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

void strip_bom(std::string& line) {
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
}

// Validates the numeric fields shared by both formats; returns an error message
// or nothing when the transaction is acceptable.
std::optional<std::string> check_amounts(const std::optional<std::int64_t>& quantity,
                                         const std::optional<Money>& monetary) {
  if (!quantity) return "malformed quantity";
  if (*quantity < 0) return "negative quantity";
  if (!monetary) return "malformed monetary";
  if (*monetary < Money{}) return "negative monetary";
  return std::nullopt;
}

ParseResult finish(std::vector<Transaction> parsed, std::size_t rejected, std::vector<LineError> errors) {
  if (parsed.empty()) throw DataError("no transactions");
  return ParseResult{TransactionLog::canonical(std::move(parsed)), rejected, std::move(errors)};
}

}  // namespace

TransactionLog TransactionLog::canonical(std::vector<Transaction> transactions) {
  if (transactions.empty()) throw DataError("no transactions");
  std::stable_sort(transactions.begin(), transactions.end());
  TransactionLog log;
  const auto [lo, hi] = std::minmax_element(transactions.begin(), transactions.end(),
                                            [](const auto& a, const auto& b) { return a.date < b.date; });
  log.first_date = lo->date;
  log.last_date = hi->date;
  log.transactions = std::move(transactions);
  return log;
}

Money TransactionLog::total_monetary() const {
  Money total;
  for (const auto& t : transactions) total += t.monetary;
  return total;
}

ParseResult parse_cdnow(std::istream& in) {
  std::vector<Transaction> parsed;
  std::vector<LineError> errors;
  std::size_t rejected = 0;
  std::string line;
  std::size_t line_no = 0;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line_no == 1) strip_bom(line);
    std::istringstream fields(line);
    std::string id, date, quantity, monetary, extra;
    if (!(fields >> id)) continue;  // blank line
    auto reject = [&](std::string message) {
      ++rejected;
      errors.push_back({line_no, std::move(message)});
    };
    if (!(fields >> date >> quantity >> monetary) || (fields >> extra)) {
      reject("expected 4 fields: customer_id date quantity monetary");
      continue;
    }
    const auto day = Date::parse_compact(date);
    if (!day) {
      reject("malformed date '" + date + "'");
      continue;
    }
    const auto qty = parse_quantity(quantity);
    const auto amount = Money::parse(monetary);
    if (auto problem = check_amounts(qty, amount)) {
      reject(*problem);
      continue;
    }
    parsed.push_back({std::move(id), *day, *qty, *amount});
  }
  return finish(std::move(parsed), rejected, std::move(errors));
}

ParseResult parse_generic(std::istream& in, const GenericSchema& schema) {
  std::string line;
  if (!csv::read_line(in, line)) throw DataError("no transactions");
  strip_bom(line);
  const auto header = csv::split_line(line);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto required = [&](const std::string& name) {
    auto index = column(name);
    if (!index) throw ConfigError("schema column '" + name + "' not found in header");
    return *index;
  };
  const std::size_t id_col = required(schema.id);
  const std::size_t date_col = required(schema.date);
  const std::size_t monetary_col = required(schema.monetary);
  const std::optional<std::size_t> quantity_col =
      schema.quantity.empty() ? std::nullopt : column(schema.quantity);

  std::vector<Transaction> parsed;
  std::vector<LineError> errors;
  std::size_t rejected = 0;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    auto reject = [&](std::string message) {
      ++rejected;
      errors.push_back({line_no, std::move(message)});
    };
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    const std::string id{trim(fields[id_col])};
    if (id.empty()) {
      reject("empty customer id");
      continue;
    }
    const auto date_text = trim(fields[date_col]);
    const auto day = Date::parse_iso(date_text);
    if (!day) {
      reject("malformed date '" + std::string(date_text) + "'");
      continue;
    }
    std::optional<std::int64_t> qty = 1;
    if (quantity_col && !trim(fields[*quantity_col]).empty()) qty = parse_quantity(trim(fields[*quantity_col]));
    const auto amount = Money::parse(trim(fields[monetary_col]));
    if (auto problem = check_amounts(qty, amount)) {
      reject(*problem);
      continue;
    }
    parsed.push_back({id, *day, *qty, *amount});
  }
  return finish(std::move(parsed), rejected, std::move(errors));
}

void write_generic(std::ostream& out, const TransactionLog& log) {
  const GenericSchema schema;
  out << schema.id << ',' << schema.date << ',' << schema.quantity << ',' << schema.monetary << '\n';
  for (const auto& t : log.transactions) {
    out << csv::escape(t.customer_id) << ',' << t.date.iso() << ',' << t.quantity << ',' << t.monetary.str()
        << '\n';
  }
}

std::size_t PeriodGrid::period_of(Date d) const {
  const std::int32_t offset = d - origin;
  if (offset < 0) throw std::out_of_range("date " + d.iso() + " precedes the grid origin " + origin.iso());
  const auto period = static_cast<std::size_t>(offset / period_length);
  if (period >= num_periods) {
    throw std::out_of_range("date " + d.iso() + " lies beyond the last grid period");
  }
  return period;
}

PeriodGrid bucketize(const TransactionLog& log, int period_length_days) {
  if (period_length_days < 1) throw std::invalid_argument("period length must be at least 1 day");
  const std::int32_t span = (log.last_date - log.first_date) + 1;
  PeriodGrid grid;
  grid.period_length = period_length_days;
  grid.origin = log.first_date;
  grid.num_periods = static_cast<std::size_t>((span + period_length_days - 1) / period_length_days);
  return grid;
}

std::vector<Money> monetary_by_period(const TransactionLog& log, const PeriodGrid& grid) {
  std::vector<Money> totals(grid.num_periods);
  for (const auto& t : log.transactions) totals[grid.period_of(t.date)] += t.monetary;
  return totals;
}

std::pair<TransactionLog, PeriodGrid> observation_window(const TransactionLog& log, const PeriodGrid& grid,
                                                         std::size_t cutoff_period) {
  if (cutoff_period >= grid.num_periods) {
    throw std::out_of_range("cutoff period " + std::to_string(cutoff_period) + " outside grid of " +
                            std::to_string(grid.num_periods) + " periods");
  }
  const Date last_day = std::min(grid.period_end(cutoff_period), log.last_date);
  TransactionLog window;
  window.first_date = log.first_date;
  window.last_date = last_day;
  for (const auto& t : log.transactions) {
    if (t.date <= last_day) window.transactions.push_back(t);
  }
  PeriodGrid window_grid = grid;
  window_grid.num_periods = cutoff_period + 1;
  return {std::move(window), window_grid};
}

}  // namespace loyalty
