#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "loyalty/ingest.hpp"

namespace loyalty {

enum class Setting { NoRfm, Rfm, TsRfm, TdaRfm };

inline constexpr Setting kAllSettings[] = {Setting::NoRfm, Setting::Rfm, Setting::TsRfm, Setting::TdaRfm};

std::string_view setting_tag(Setting s);    // "NO_RFM", "RFM", "TS_RFM", "TDA_RFM"
std::string_view setting_label(Setting s);  // "No RFM", "RFM", "TS RFM", "TDA RFM"
std::optional<Setting> parse_setting(std::string_view text);  // accepts either spelling

// Cluster label per customer id.
using LabelMap = std::map<std::string, std::size_t>;

struct FeatureColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> values;
};

// One row per customer active in the observation window. The target is the
// customer's total spend in the periods after the cutoff.
struct FeatureTable {
  Setting setting = Setting::NoRfm;
  std::vector<std::string> customer_ids;
  std::vector<FeatureColumn> columns;
  std::vector<double> target;

  std::size_t rows() const { return customer_ids.size(); }
  const FeatureColumn* find(std::string_view name) const;
  FeatureTable select_rows(std::span<const std::size_t> rows) const;
};

// Base columns for every setting: txn_count, total_monetary, mean_gap_periods,
// tenure_periods, recency_periods. RFM adds numeric rfm_r/rfm_f/rfm_m; TS_RFM
// adds categorical ts_r/ts_f/ts_m and TDA_RFM categorical tda_r/tda_f/tda_m
// from the three label maps (R, F, M order). Throws ConfigError when labels
// are missing or incomplete, std::out_of_range when the cutoff leaves no
// target horizon.
FeatureTable build_features(const TransactionLog& log, const PeriodGrid& grid, std::size_t cutoff_period,
                            Setting setting, std::span<const LabelMap> labels = {});

// Header "customer_id,<columns>,target"; categorical columns carry a ":cat" suffix.
void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in);

// Customer-level random partition; the first round(ratio * n) shuffled rows
// train. Both halves keep the original row order.
std::pair<FeatureTable, FeatureTable> split(const FeatureTable& table, double ratio, std::uint64_t seed);

struct GbdtParams {
  std::size_t depth = 4;
  std::size_t rounds = 200;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> encoded_row) const;
};

// One model input. Categorical columns expand to one indicator per level
// seen in training; unseen levels leave every indicator at zero.
struct EncodedFeature {
  std::string source;
  bool categorical = false;
  double level = 0.0;

  std::string name() const;
};

struct GbdtModel {
  GbdtParams params;
  double base_prediction = 0.0;
  std::vector<EncodedFeature> features;
  std::vector<RegressionTree> trees;
  std::vector<double> training_rmse;  // entry r: after r trees
};

// Squared-error boosting with exact greedy splits. A round whose tree would
// not lower the training loss ends boosting early.
GbdtModel gbdt_fit(const FeatureTable& train, const GbdtParams& params);
std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureTable& rows);

double rmse(std::span<const double> predicted, std::span<const double> actual);

nlohmann::json to_json(const GbdtModel& model);
GbdtModel gbdt_model_from_json(const nlohmann::json& doc);

}  // namespace loyalty
