#include "loyalty/predict.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "loyalty/csv.hpp"
#include "loyalty/errors.hpp"
#include "loyalty/parallel.hpp"
#include "loyalty/random.hpp"
#include "loyalty/rfm.hpp"

namespace loyalty {

namespace {

constexpr std::string_view kCategoricalSuffix = ":cat";

struct CustomerWindow {
  std::string id;
  std::int64_t count = 0;
  Money spend;
  std::vector<std::size_t> active_periods;  // ascending, distinct
  Money future_spend;
};

std::vector<CustomerWindow> summarize(const TransactionLog& log, const PeriodGrid& grid, std::size_t cutoff) {
  std::vector<CustomerWindow> out;
  std::vector<CustomerWindow> all;
  for (const auto& t : log.transactions) {
    if (all.empty() || all.back().id != t.customer_id) {
      all.emplace_back();
      all.back().id = t.customer_id;
    }
    auto& c = all.back();
    const std::size_t p = grid.period_of(t.date);
    if (p <= cutoff) {
      ++c.count;
      c.spend += t.monetary;
      if (c.active_periods.empty() || c.active_periods.back() != p) c.active_periods.push_back(p);
    } else {
      c.future_spend += t.monetary;
    }
  }
  for (auto& c : all) {
    if (c.count > 0) out.push_back(std::move(c));
  }
  return out;
}

void add_label_columns(FeatureTable& table, std::string_view prefix, std::span<const LabelMap> labels) {
  static constexpr const char* kSuffix[] = {"r", "f", "m"};
  if (labels.size() != 3) {
    throw ConfigError("setting " + std::string(setting_tag(table.setting)) + " needs 3 label maps (R, F, M), got " +
                      std::to_string(labels.size()));
  }
  for (std::size_t c = 0; c < 3; ++c) {
    FeatureColumn column{std::string(prefix) + "_" + kSuffix[c], true, {}};
    for (const auto& id : table.customer_ids) {
      const auto it = labels[c].find(id);
      if (it == labels[c].end()) {
        throw ConfigError("setting " + std::string(setting_tag(table.setting)) + ": label map " + column.name +
                          " has no entry for customer '" + id + "'");
      }
      column.values.push_back(static_cast<double>(it->second));
    }
    table.columns.push_back(std::move(column));
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view setting_tag(Setting s) {
  switch (s) {
    case Setting::NoRfm: return "NO_RFM";
    case Setting::Rfm: return "RFM";
    case Setting::TsRfm: return "TS_RFM";
    case Setting::TdaRfm: return "TDA_RFM";
  }
  return "?";
}

std::string_view setting_label(Setting s) {
  switch (s) {
    case Setting::NoRfm: return "No RFM";
    case Setting::Rfm: return "RFM";
    case Setting::TsRfm: return "TS RFM";
    case Setting::TdaRfm: return "TDA RFM";
  }
  return "?";
}

std::optional<Setting> parse_setting(std::string_view text) {
  const auto key = lower(text);
  for (Setting s : kAllSettings) {
    if (key == lower(setting_tag(s)) || key == lower(setting_label(s))) return s;
  }
  return std::nullopt;
}

const FeatureColumn* FeatureTable::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable out;
  out.setting = setting;
  for (const auto& c : columns) out.columns.push_back({c.name, c.categorical, {}});
  for (auto r : rows) {
    out.customer_ids.push_back(customer_ids.at(r));
    out.target.push_back(target.at(r));
    for (std::size_t c = 0; c < columns.size(); ++c) out.columns[c].values.push_back(columns[c].values[r]);
  }
  return out;
}

FeatureTable build_features(const TransactionLog& log, const PeriodGrid& grid, std::size_t cutoff_period,
                            Setting setting, std::span<const LabelMap> labels) {
  if (cutoff_period + 1 >= grid.num_periods) {
    throw std::out_of_range("cutoff period " + std::to_string(cutoff_period) + " leaves no target horizon in " +
                            std::to_string(grid.num_periods) + " periods");
  }
  const auto customers = summarize(log, grid, cutoff_period);
  FeatureTable table;
  table.setting = setting;
  FeatureColumn count{"txn_count", false, {}}, spend{"total_monetary", false, {}},
      gap{"mean_gap_periods", false, {}}, tenure{"tenure_periods", false, {}}, recency{"recency_periods", false, {}};
  for (const auto& c : customers) {
    table.customer_ids.push_back(c.id);
    table.target.push_back(c.future_spend.to_double());
    const auto first = c.active_periods.front();
    const auto last = c.active_periods.back();
    count.values.push_back(static_cast<double>(c.count));
    spend.values.push_back(c.spend.to_double());
    gap.values.push_back(c.active_periods.size() > 1 ? static_cast<double>(last - first) /
                                                           static_cast<double>(c.active_periods.size() - 1)
                                                     : 0.0);
    tenure.values.push_back(static_cast<double>(cutoff_period - first + 1));
    recency.values.push_back(static_cast<double>(cutoff_period - last));
  }
  table.columns = {std::move(count), std::move(spend), std::move(gap), std::move(tenure), std::move(recency)};

  switch (setting) {
    case Setting::NoRfm: break;
    case Setting::Rfm: {
      const auto scores = rfm_score(rfm_snapshot(log, grid, cutoff_period));
      FeatureColumn r{"rfm_r", false, {}}, f{"rfm_f", false, {}}, m{"rfm_m", false, {}};
      for (const auto& id : table.customer_ids) {
        const auto& s = scores.at(id);
        r.values.push_back(s.r);
        f.values.push_back(s.f);
        m.values.push_back(s.m);
      }
      table.columns.push_back(std::move(r));
      table.columns.push_back(std::move(f));
      table.columns.push_back(std::move(m));
      break;
    }
    case Setting::TsRfm: add_label_columns(table, "ts", labels); break;
    case Setting::TdaRfm: add_label_columns(table, "tda", labels); break;
  }
  return table;
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
  out << "customer_id";
  for (const auto& c : table.columns) out << ',' << c.name << (c.categorical ? kCategoricalSuffix : "");
  out << ",target\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << csv::escape(table.customer_ids[r]);
    for (const auto& c : table.columns) out << ',' << csv::format_double(c.values[r]);
    out << ',' << csv::format_double(table.target[r]) << '\n';
  }
}

FeatureTable read_feature_table(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line)) throw DataError("feature table: missing header");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header.front() != "customer_id" || header.back() != "target") {
    throw DataError("feature table: header must start with customer_id and end with target");
  }
  FeatureTable table;
  for (std::size_t i = 1; i + 1 < header.size(); ++i) {
    std::string name = header[i];
    const bool categorical = name.ends_with(kCategoricalSuffix);
    if (categorical) name.resize(name.size() - kCategoricalSuffix.size());
    table.columns.push_back({name, categorical, {}});
    if (name.starts_with("rfm_")) table.setting = Setting::Rfm;
    if (name.starts_with("ts_")) table.setting = Setting::TsRfm;
    if (name.starts_with("tda_")) table.setting = Setting::TdaRfm;
  }
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw DataError("feature table line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    try {
      table.customer_ids.push_back(fields.front());
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        table.columns[c].values.push_back(csv::parse_double(fields[c + 1]));
      }
      table.target.push_back(csv::parse_double(fields.back()));
    } catch (const std::invalid_argument& e) {
      throw DataError("feature table line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

std::pair<FeatureTable, FeatureTable> split(const FeatureTable& table, double ratio, std::uint64_t seed) {
  const std::size_t n = table.rows();
  if (n < 2) throw std::invalid_argument("split: at least 2 rows required");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);
  const auto train_size =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {table.select_rows(train), table.select_rows(test)};
}

// ---------------------------------------------------------------------------
// Gradient boosting

std::string EncodedFeature::name() const {
  return categorical ? source + "=" + csv::format_double(level) : source;
}

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[node].value;
}

namespace {

// Column-major encoded inputs.
std::vector<std::vector<double>> encode(const std::vector<EncodedFeature>& features, const FeatureTable& table) {
  std::vector<std::vector<double>> encoded;
  encoded.reserve(features.size());
  for (const auto& f : features) {
    const FeatureColumn* column = table.find(f.source);
    if (!column) throw std::invalid_argument("feature table lacks model column '" + f.source + "'");
    if (column->categorical != f.categorical) {
      throw std::invalid_argument("column '" + f.source + "' changed between categorical and numeric");
    }
    if (!f.categorical) {
      encoded.push_back(column->values);
    } else {
      std::vector<double> indicator(column->values.size());
      for (std::size_t r = 0; r < indicator.size(); ++r) indicator[r] = column->values[r] == f.level ? 1.0 : 0.0;
      encoded.push_back(std::move(indicator));
    }
  }
  return encoded;
}

std::vector<EncodedFeature> learn_encoding(const FeatureTable& table) {
  std::vector<EncodedFeature> features;
  for (const auto& column : table.columns) {
    if (!column.categorical) {
      features.push_back({column.name, false, 0.0});
      continue;
    }
    std::vector<double> levels = column.values;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double level : levels) features.push_back({column.name, true, level});
  }
  return features;
}

double split_threshold(double below, double above) {
  const double mid = below + (above - below) / 2.0;
  return mid < above ? mid : below;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct NodeStats {
  std::size_t count = 0;
  double sum = 0.0;
};

// Grows one depth-limited tree on the residuals and returns it together with
// the leaf each training row lands in.
std::pair<RegressionTree, std::vector<int>> grow_tree(const std::vector<std::vector<double>>& x,
                                                      const std::vector<std::vector<std::size_t>>& order,
                                                      const std::vector<double>& residual, const GbdtParams& params) {
  const std::size_t n = residual.size();
  const std::size_t num_features = x.size();
  RegressionTree tree;
  std::vector<int> node_of(n, 0);
  std::vector<NodeStats> stats(1);
  for (double r : residual) {
    ++stats[0].count;
    stats[0].sum += r;
  }
  tree.nodes.push_back({});
  std::vector<int> frontier = {0};

  for (std::size_t level = 0; level < params.depth && !frontier.empty(); ++level) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    std::vector<int> active;
    for (int node : frontier) {
      if (stats[static_cast<std::size_t>(node)].count >= 2 * params.min_leaf) {
        slot_of[static_cast<std::size_t>(node)] = static_cast<int>(active.size());
        active.push_back(node);
      }
    }
    if (active.empty()) break;

    std::vector<std::vector<SplitCandidate>> per_feature(num_features,
                                                         std::vector<SplitCandidate>(active.size()));
    parallel_for(num_features, [&](std::size_t f) {
      auto& best = per_feature[f];
      std::vector<std::size_t> left_count(active.size(), 0);
      std::vector<double> left_sum(active.size(), 0.0);
      std::vector<double> last(active.size(), 0.0);
      for (std::size_t i : order[f]) {
        const int slot = slot_of[static_cast<std::size_t>(node_of[i])];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        const auto& node = stats[static_cast<std::size_t>(active[s])];
        const double v = x[f][i];
        const std::size_t nl = left_count[s];
        if (nl > 0 && v > last[s] && nl >= params.min_leaf && node.count - nl >= params.min_leaf) {
          const double sl = left_sum[s];
          const double sr = node.sum - sl;
          const double gain = sl * sl / static_cast<double>(nl) +
                              sr * sr / static_cast<double>(node.count - nl) -
                              node.sum * node.sum / static_cast<double>(node.count);
          if (gain > best[s].gain) best[s] = {gain, static_cast<int>(f), split_threshold(last[s], v)};
        }
        ++left_count[s];
        left_sum[s] += residual[i];
        last[s] = v;
      }
    });

    std::vector<int> next_frontier;
    for (std::size_t s = 0; s < active.size(); ++s) {
      SplitCandidate best;
      for (std::size_t f = 0; f < num_features; ++f) {
        if (per_feature[f][s].gain > best.gain) best = per_feature[f][s];
      }
      if (best.feature < 0) continue;
      const int node = active[s];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.resize(tree.nodes.size());
      auto& parent = tree.nodes[static_cast<std::size_t>(node)];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = left + 1;
      next_frontier.push_back(left);
      next_frontier.push_back(left + 1);
    }
    if (next_frontier.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& parent = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (parent.feature < 0) continue;
      const bool go_left = x[static_cast<std::size_t>(parent.feature)][i] <= parent.threshold;
      node_of[i] = go_left ? parent.left : parent.right;
      auto& child = stats[static_cast<std::size_t>(node_of[i])];
      ++child.count;
      child.sum += residual[i];
    }
    frontier = std::move(next_frontier);
  }
  for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
    if (tree.nodes[node].feature < 0 && stats[node].count > 0) {
      tree.nodes[node].value = stats[node].sum / static_cast<double>(stats[node].count);
    }
  }
  return {std::move(tree), std::move(node_of)};
}

double sum_squares(const std::vector<double>& residual) {
  double sum = 0.0;
  for (double r : residual) sum += r * r;
  return sum;
}

}  // namespace

GbdtModel gbdt_fit(const FeatureTable& train, const GbdtParams& params) {
  if (train.columns.empty()) throw std::invalid_argument("gbdt: empty feature set");
  const std::size_t n = train.rows();
  if (n == 0) throw std::invalid_argument("gbdt: no training rows");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw std::invalid_argument("gbdt: learning rate must lie in (0, 1]");
  }
  if (params.min_leaf == 0) throw std::invalid_argument("gbdt: min_leaf must be at least 1");

  GbdtModel model;
  model.params = params;
  model.features = learn_encoding(train);
  const auto x = encode(model.features, train);
  std::vector<std::vector<std::size_t>> order(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) { return x[f][a] < x[f][b]; });
  }

  model.base_prediction = std::accumulate(train.target.begin(), train.target.end(), 0.0) / static_cast<double>(n);
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = train.target[i] - model.base_prediction;
  double sse = sum_squares(residual);
  model.training_rmse.push_back(std::sqrt(sse / static_cast<double>(n)));

  std::vector<double> candidate(n);
  for (std::size_t round = 0; round < params.rounds; ++round) {
    auto [tree, leaf_of] = grow_tree(x, order, residual, params);
    for (std::size_t i = 0; i < n; ++i) {
      candidate[i] = residual[i] - params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    }
    const double next_sse = sum_squares(candidate);
    if (next_sse > sse) break;
    residual.swap(candidate);
    sse = next_sse;
    model.trees.push_back(std::move(tree));
    model.training_rmse.push_back(std::sqrt(sse / static_cast<double>(n)));
  }
  return model;
}

std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureTable& rows) {
  const auto x = encode(model.features, rows);
  std::vector<double> out(rows.rows(), model.base_prediction);
  parallel_for(rows.rows(), [&](std::size_t r) {
    std::vector<double> encoded(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) encoded[f] = x[f][r];
    double total = 0.0;
    for (const auto& tree : model.trees) total += tree.predict(encoded);
    out[r] = model.base_prediction + model.params.learning_rate * total;
  });
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("rmse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                                std::to_string(actual.size()) + ")");
  }
  if (predicted.empty()) throw std::invalid_argument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    const double diff = predicted[t] - actual[t];
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

namespace {

nlohmann::json node_to_json(const RegressionTree& tree, std::size_t index) {
  const auto& node = tree.nodes[index];
  if (node.feature < 0) return {{"leaf", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_to_json(tree, static_cast<std::size_t>(node.left))},
          {"right", node_to_json(tree, static_cast<std::size_t>(node.right))}};
}

int node_from_json(const nlohmann::json& doc, RegressionTree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  if (doc.contains("leaf")) {
    tree.nodes[static_cast<std::size_t>(index)].value = doc.at("leaf").get<double>();
    return index;
  }
  const int feature = doc.at("feature").get<int>();
  const double threshold = doc.at("threshold").get<double>();
  const int left = node_from_json(doc.at("left"), tree);
  const int right = node_from_json(doc.at("right"), tree);
  tree.nodes[static_cast<std::size_t>(index)] = {feature, threshold, left, right, 0.0};
  return index;
}

}  // namespace

nlohmann::json to_json(const GbdtModel& model) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : model.features) {
    features.push_back({{"source", f.source}, {"categorical", f.categorical}, {"level", f.level}});
  }
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(tree, 0));
  return {{"params",
           {{"depth", model.params.depth},
            {"rounds", model.params.rounds},
            {"learning_rate", model.params.learning_rate},
            {"min_leaf", model.params.min_leaf},
            {"seed", model.params.seed}}},
          {"base_prediction", model.base_prediction},
          {"features", features},
          {"training_rmse", model.training_rmse},
          {"trees", trees}};
}

GbdtModel gbdt_model_from_json(const nlohmann::json& doc) {
  GbdtModel model;
  const auto& p = doc.at("params");
  model.params = {p.at("depth").get<std::size_t>(), p.at("rounds").get<std::size_t>(),
                  p.at("learning_rate").get<double>(), p.at("min_leaf").get<std::size_t>(),
                  p.at("seed").get<std::uint64_t>()};
  model.base_prediction = doc.at("base_prediction").get<double>();
  model.training_rmse = doc.value("training_rmse", std::vector<double>{});
  for (const auto& f : doc.at("features")) {
    model.features.push_back({f.at("source").get<std::string>(), f.at("categorical").get<bool>(),
                              f.at("level").get<double>()});
  }
  for (const auto& t : doc.at("trees")) {
    RegressionTree tree;
    node_from_json(t, tree);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace loyalty
