#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "loyalty/errors.hpp"
#include "loyalty/ingest.hpp"

using namespace loyalty;

namespace {

Date ymd(int y, unsigned m, unsigned d) { return *Date::from_ymd(y, m, d); }

ParseResult parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_cdnow(in);
}

std::vector<std::string> fixture_lines() {
  std::ifstream in(LOYALTY_TEST_DATA "/cdnow_first1000.txt");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(ParseCdnow, SingleLine) {
  auto r = parse_text("7 19970103 2 23.54\n");
  ASSERT_EQ(r.log.transactions.size(), 1u);
  const auto& t = r.log.transactions[0];
  EXPECT_EQ(t.customer_id, "7");
  EXPECT_EQ(t.date, ymd(1997, 1, 3));
  EXPECT_EQ(t.quantity, 2);
  EXPECT_EQ(t.monetary.cents(), 2354);
  EXPECT_EQ(r.rejected, 0u);
}

TEST(ParseCdnow, EmptyStreamThrows) {
  try {
    parse_text("");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no transactions"), std::string::npos);
  }
}

TEST(ParseCdnow, SortsByDate) {
  auto r = parse_text("5 19970301 1 1.00\n5 19970102 1 2.00\n");
  ASSERT_EQ(r.log.transactions.size(), 2u);
  EXPECT_EQ(r.log.transactions[0].date, ymd(1997, 1, 2));
  EXPECT_EQ(r.log.transactions[1].date, ymd(1997, 3, 1));
  EXPECT_EQ(r.log.first_date, ymd(1997, 1, 2));
  EXPECT_EQ(r.log.last_date, ymd(1997, 3, 1));
}

TEST(ParseCdnow, RejectsBadLines) {
  auto r = parse_text(
      "1 19970101 1 10.00\n"
      "2 19971301 1 10.00\n"
      "3 19970101 1 -4.00\n"
      "4 19970101 1\n"
      "5 19970105 3 7.25\n");
  EXPECT_EQ(r.log.transactions.size(), 2u);
  EXPECT_EQ(r.rejected, 3u);
  ASSERT_EQ(r.errors.size(), 3u);
  EXPECT_EQ(r.errors[0].line, 2u);
  EXPECT_NE(r.errors[0].message.find("19971301"), std::string::npos);
  EXPECT_EQ(r.errors[1].line, 3u);
  EXPECT_EQ(r.errors[2].line, 4u);
}

TEST(ParseCdnow, AllLinesBadThrows) {
  EXPECT_THROW(parse_text("1 1997xx01 1 1.0\n"), DataError);
}

TEST(ParseGeneric, QuantityDefaultsToOne) {
  std::istringstream in("cust,day,amt\nA,2018-02-01,5.0\n");
  GenericSchema schema{"cust", "day", "", "amt"};
  auto r = parse_generic(in, schema);
  ASSERT_EQ(r.log.transactions.size(), 1u);
  EXPECT_EQ(r.log.transactions[0].quantity, 1);
  EXPECT_EQ(r.log.transactions[0].monetary.cents(), 500);
  EXPECT_EQ(r.log.transactions[0].date, ymd(2018, 2, 1));
}

TEST(ParseGeneric, MissingColumnNamesIt) {
  std::istringstream in("cust,day,amt\nA,2018-02-01,5.0\n");
  GenericSchema schema{"cust", "day", "", "price"};
  try {
    parse_generic(in, schema);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("price"), std::string::npos);
  }
}

TEST(ParseGeneric, CountsRejects) {
  std::istringstream in(
      "customer_id,date,quantity,monetary\n"
      "A,2018-02-01,1,5.0\n"
      "B,2018-02-31,1,5.0\n"
      "C,2018-02-03,2,1.5\n"
      "A,2018-02-04 10:30:00,1,2.25\n");
  auto r = parse_generic(in);
  EXPECT_EQ(r.log.transactions.size(), 3u);
  EXPECT_EQ(r.rejected, 1u);
}

TEST(ParseGeneric, RoundTrip) {
  std::ifstream in(LOYALTY_TEST_DATA "/cdnow_first1000.txt");
  auto log = parse_cdnow(in).log;
  std::stringstream buf;
  write_generic(buf, log);
  auto back = parse_generic(buf).log;
  EXPECT_EQ(back, log);
}

TEST(ParseCdnow, ShuffledInputGivesSameLog) {
  auto lines = fixture_lines();
  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  const auto reference = parse_text(joined).log;
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(lines.begin(), lines.end(), gen);
    std::string shuffled;
    for (const auto& l : lines) shuffled += l + "\n";
    EXPECT_EQ(parse_text(shuffled).log, reference);
  }
}

TEST(Bucketize, PeriodCounts) {
  const Date d0 = ymd(2020, 1, 1);
  auto make = [&](int span_days) {
    std::vector<Transaction> txs{{"a", d0, 1, Money::from_cents(100)},
                                 {"b", d0 + (span_days - 1), 1, Money::from_cents(100)}};
    return TransactionLog::canonical(txs);
  };
  EXPECT_EQ(bucketize(make(63), 7).num_periods, 9u);
  EXPECT_EQ(bucketize(make(64), 7).num_periods, 10u);
  auto single = make(1);
  auto grid = bucketize(single, 7);
  EXPECT_EQ(grid.num_periods, 1u);
  for (const auto& t : single.transactions) EXPECT_EQ(grid.period_of(t.date), 0u);
}

TEST(Bucketize, EveryTransactionInRange) {
  std::ifstream in(LOYALTY_TEST_DATA "/cdnow_first1000.txt");
  auto log = parse_cdnow(in).log;
  for (int len : {1, 7, 30}) {
    auto grid = bucketize(log, len);
    for (const auto& t : log.transactions) EXPECT_LT(grid.period_of(t.date), grid.num_periods);
  }
}

TEST(Bucketize, MonetaryConservation) {
  std::ifstream in(LOYALTY_TEST_DATA "/cdnow_first1000.txt");
  auto log = parse_cdnow(in).log;
  for (int len : {1, 7, 14, 30}) {
    auto grid = bucketize(log, len);
    Money sum;
    for (auto m : monetary_by_period(log, grid)) sum += m;
    EXPECT_EQ(sum.cents(), log.total_monetary().cents());
  }
}

TEST(Money, ParseRounding) {
  EXPECT_EQ(Money::parse("23.54")->cents(), 2354);
  EXPECT_EQ(Money::parse("0.005")->cents(), 1);
  EXPECT_EQ(Money::parse("-0.005")->cents(), -1);
  EXPECT_EQ(Money::parse("7")->cents(), 700);
  EXPECT_FALSE(Money::parse("1.2.3").has_value());
  EXPECT_EQ(Money::from_cents(-5).str(), "-0.05");
}

TEST(ObservationWindow, RestrictsToCutoff) {
  const Date d0 = ymd(2020, 1, 1);
  std::vector<Transaction> txs{{"a", d0, 1, Money::from_cents(100)},
                               {"a", d0 + 8, 1, Money::from_cents(200)},
                               {"b", d0 + 20, 1, Money::from_cents(300)}};
  auto log = TransactionLog::canonical(txs);
  auto grid = bucketize(log, 7);
  auto [window, wgrid] = observation_window(log, grid, 1);
  EXPECT_EQ(window.transactions.size(), 2u);
  EXPECT_EQ(wgrid.num_periods, 2u);
  EXPECT_EQ(window.last_date, grid.period_end(1));
  EXPECT_THROW(observation_window(log, grid, 3), std::out_of_range);
}
