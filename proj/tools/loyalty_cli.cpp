#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "loyalty/csv.hpp"
#include "loyalty/errors.hpp"
#include "loyalty/pipeline.hpp"
#include "loyalty/plot.hpp"

using namespace loyalty;
namespace fs = std::filesystem;

namespace {

// Flag values that override the configuration file when given.
struct Overrides {
  std::string config_path;
  std::optional<std::string> dataset, name, format, out;
  std::optional<std::string> id_col, date_col, qty_col, money_col;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats, kshape_k, kshape_iter, tda_dim, tda_delay, k_max, depth, rounds, min_leaf;
  std::optional<int> period;
  std::optional<double> cutoff, train_ratio, max_radius, learning_rate;
  bool h1_only = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--dataset", o.dataset, "transaction file");
  cmd->add_option("--name", o.name, "dataset label used in reports");
  cmd->add_option("--format", o.format, "cdnow or generic")->check(CLI::IsMember({"cdnow", "generic"}));
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "base random seed");
  cmd->add_option("--repeats", o.repeats, "split/fit repeats per setting");
  cmd->add_option("--settings", o.settings, "NO_RFM,RFM,TS_RFM,TDA_RFM")->delimiter(',');
  cmd->add_option("--period", o.period, "period length in days");
  cmd->add_option("--cutoff", o.cutoff, "fraction of periods observed");
  cmd->add_option("--train-ratio", o.train_ratio, "training share of customers");
  cmd->add_option("--id-col", o.id_col, "generic format: customer id column");
  cmd->add_option("--date-col", o.date_col, "generic format: date column");
  cmd->add_option("--qty-col", o.qty_col, "generic format: quantity column, empty for none");
  cmd->add_option("--monetary-col", o.money_col, "generic format: amount column");
  cmd->add_option("--k", o.kshape_k, "K-Shape clusters per component");
  cmd->add_option("--kshape-iter", o.kshape_iter, "K-Shape iteration limit");
  cmd->add_option("--tda-dim", o.tda_dim, "delay embedding dimension");
  cmd->add_option("--tda-delay", o.tda_delay, "delay embedding lag");
  cmd->add_option("--max-radius", o.max_radius, "Rips radius (default: cloud diameter)");
  cmd->add_flag("--h1-only", o.h1_only, "cluster on 1-dimensional features only");
  cmd->add_option("--k-max", o.k_max, "largest k tried by the elbow sweep");
  cmd->add_option("--depth", o.depth, "GBDT tree depth");
  cmd->add_option("--rounds", o.rounds, "GBDT boosting rounds");
  cmd->add_option("--learning-rate", o.learning_rate, "GBDT shrinkage");
  cmd->add_option("--min-leaf", o.min_leaf, "GBDT minimum leaf size");
}

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config '" + o.config_path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + o.config_path + "': " + e.what());
    }
    c = RunConfig::from_json(doc);
  }
  apply(o.dataset, c.dataset);
  apply(o.name, c.dataset_name);
  apply(o.format, c.format);
  apply(o.out, c.output_dir);
  apply(o.id_col, c.schema.id);
  apply(o.date_col, c.schema.date);
  apply(o.qty_col, c.schema.quantity);
  apply(o.money_col, c.schema.monetary);
  apply(o.seed, c.seed);
  apply(o.repeats, c.repeats);
  apply(o.period, c.period_length);
  apply(o.cutoff, c.cutoff_fraction);
  apply(o.train_ratio, c.train_ratio);
  apply(o.kshape_k, c.kshape_k);
  apply(o.kshape_iter, c.kshape_max_iter);
  apply(o.tda_dim, c.tda.dim);
  apply(o.tda_delay, c.tda.delay);
  if (o.max_radius) c.tda.max_radius = *o.max_radius;
  if (o.h1_only) c.tda.h1_only = true;
  apply(o.k_max, c.elbow_k_max);
  apply(o.depth, c.gbdt.depth);
  apply(o.rounds, c.gbdt.rounds);
  apply(o.learning_rate, c.gbdt.learning_rate);
  apply(o.min_leaf, c.gbdt.min_leaf);
  if (!o.settings.empty()) {
    c.settings.clear();
    for (const auto& s : o.settings) {
      const auto setting = parse_setting(s);
      if (!setting) throw ConfigError("unknown setting '" + s + "'");
      c.settings.push_back(*setting);
    }
  }
  c.validate();
  return c;
}

fs::path out_dir(const RunConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

void report_rejects(const PreparedData& data) {
  if (data.rejected > 0) std::cerr << "rejected: " << data.rejected << " lines\n";
}

int cmd_ingest(const RunConfig& c) {
  std::ifstream in(c.dataset, std::ios::binary);
  auto parsed = c.format == "cdnow" ? parse_cdnow(in) : parse_generic(in, c.schema);
  for (const auto& e : parsed.errors) std::cerr << "line " << e.line << ": " << e.message << '\n';
  const auto& log = parsed.log;
  const auto grid = bucketize(log, c.period_length);
  std::size_t customers = 0;
  for (std::size_t i = 0; i < log.transactions.size(); ++i) {
    if (i == 0 || log.transactions[i].customer_id != log.transactions[i - 1].customer_id) ++customers;
  }
  const auto dir = out_dir(c);
  auto out = open_out(dir / "transactions.csv");
  write_generic(out, log);
  auto periods = open_out(dir / "period_totals.csv");
  periods << "period,start,monetary\n";
  const auto totals = monetary_by_period(log, grid);
  for (std::size_t p = 0; p < totals.size(); ++p) {
    periods << p << ',' << grid.period_start(p).iso() << ',' << totals[p].str() << '\n';
  }
  std::cout << "transactions: " << log.transactions.size() << "\n"
            << "customers: " << customers << "\n"
            << "rejected: " << parsed.rejected << "\n"
            << "first date: " << log.first_date.iso() << "\n"
            << "last date: " << log.last_date.iso() << "\n"
            << "periods: " << grid.num_periods << " of " << c.period_length << " days\n"
            << "total monetary: " << log.total_monetary().str() << "\n";
  return 0;
}

int cmd_rfm(const RunConfig& c) {
  const auto data = prepare(c);
  report_rejects(data);
  const auto snapshot = rfm_snapshot(data.log, data.grid, data.cutoff_period);
  const auto scores = rfm_score(snapshot);
  const auto dir = out_dir(c);
  auto out = open_out(dir / "rfm_scores.csv");
  out << "customer_id,recency_days,frequency,monetary,R,F,M,score\n";
  for (const auto& r : snapshot.records) {
    const auto& s = scores.at(r.customer_id);
    out << csv::escape(r.customer_id) << ',' << r.recency_days << ',' << r.frequency << ',' << r.monetary.str() << ','
        << s.r << ',' << s.f << ',' << s.m << ',' << s.composite() << '\n';
  }
  auto series = open_out(dir / "rfm_series.csv");
  write_series_csv(series, data.series);
  std::cout << "customers: " << snapshot.records.size() << ", cutoff period " << data.cutoff_period << " of "
            << data.grid.num_periods << "\n";
  return 0;
}

int cmd_cluster_ts(const RunConfig& c) {
  const auto data = prepare(c);
  report_rejects(data);
  const auto models = cluster_time_series(data, c);
  const auto dir = out_dir(c);
  std::array<std::vector<std::size_t>, 3> labels;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string code(1, component_code(kComponents[i]));
    labels[i] = models[i].labels;
    write_text(dir / ("kshape_" + code + ".json"), to_json(models[i]).dump(2) + "\n");
    write_text(dir / ("centroids_" + code + ".svg"), render_centroids_svg(models[i]));
    std::cout << code << ": k=" << models[i].k << " inertia=" << csv::format_double(models[i].inertia)
              << " iterations=" << models[i].iterations_run << " sizes=";
    for (auto s : models[i].cluster_sizes()) std::cout << ' ' << s;
    std::cout << '\n';
  }
  auto out = open_out(dir / "labels_ts.csv");
  write_label_csv(out, label_maps(models[0].keys, labels));
  return 0;
}

int cmd_cluster_tda(const RunConfig& c, bool dump_barcodes) {
  const auto data = prepare(c);
  report_rejects(data);
  const auto result = cluster_topological(data, c);
  const auto dir = out_dir(c);
  std::array<std::vector<std::size_t>, 3> labels;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string code(1, component_code(kComponents[i]));
    labels[i] = result.models[i].labels;
    write_text(dir / ("kmeans_" + code + ".json"), to_json(result.models[i], result.keys).dump(2) + "\n");
    std::cout << code << ": elbow k=" << result.elbows[i].k << " inertia curve";
    for (double v : result.elbows[i].inertia) std::cout << ' ' << csv::format_double(v);
    std::cout << '\n';
  }
  auto out = open_out(dir / "labels_tda.csv");
  write_label_csv(out, label_maps(result.keys, labels));
  auto features = open_out(dir / "topo_features.csv");
  features << "customer_id,component";
  auto names = topo_feature_names();
  if (c.tda.h1_only) names.erase(names.begin(), names.begin() + kFeaturesPerDim);
  for (const auto& n : names) features << ',' << n;
  features << '\n';
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t r = 0; r < result.keys.size(); ++r) {
      features << csv::escape(result.keys[r]) << ',' << component_code(kComponents[i]);
      for (double v : result.features[i][r]) features << ',' << csv::format_double(v);
      features << '\n';
    }
  }
  if (dump_barcodes) {
    auto bars = open_out(dir / "barcodes.csv");
    write_barcode_csv_header(bars);
    for (const auto& s : data.series) {
      for (auto comp : kComponents) {
        write_barcode_csv(bars, s.customer_id, component_code(comp), series_barcode(s.component(comp), c.tda).first);
      }
    }
  }
  return 0;
}

std::vector<LabelMap> load_labels(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("this setting needs --") + what);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label file '" + path + "'");
  return read_label_csv(in);
}

int cmd_predict(const RunConfig& c, const std::string& ts_path, const std::string& tda_path) {
  const auto data = prepare(c);
  report_rejects(data);
  const auto dir = out_dir(c);
  RunReport report;
  report.dataset = c.label();
  for (Setting s : c.settings) {
    std::vector<LabelMap> labels;
    if (s == Setting::TsRfm) labels = load_labels(ts_path, "ts-labels");
    if (s == Setting::TdaRfm) labels = load_labels(tda_path, "tda-labels");
    const auto table = build_features(data.log, data.grid, data.cutoff_period, s, labels);
    const std::string tag(setting_tag(s));
    auto features = open_out(dir / ("features_" + tag + ".csv"));
    write_feature_table(features, table);
    const auto [train, test] = split(table, c.train_ratio, c.seed);
    write_text(dir / ("gbdt_" + tag + ".json"), to_json(gbdt_fit(train, c.gbdt)).dump(2) + "\n");
    report.rows.push_back(evaluate_setting(data, c, s, labels));
  }
  auto out = open_out(dir / "report.csv");
  write_report_csv(out, report);
  std::cout << emit_results_table(std::span<const RunReport>(&report, 1)).text;
  return 0;
}

int cmd_run(const RunConfig& c) {
  const auto report = run_pipeline(c);
  std::cout << emit_results_table(std::span<const RunReport>(&report, 1)).text;
  std::cout << "customers: " << report.customers << ", periods: " << report.num_periods
            << ", cutoff period: " << report.cutoff_period << ", runtime: " << csv::format_double(report.runtime_seconds)
            << " s\n";
  return 0;
}

struct PlotArgs {
  std::string kshape_model;
  std::string barcodes;
  std::string customer;
  std::string component = "R";
  std::optional<double> cap;
  std::string output;
};

int cmd_plot(const PlotArgs& a) {
  if (a.output.empty()) throw ConfigError("plot needs --output");
  if (!a.kshape_model.empty()) {
    std::ifstream in(a.kshape_model);
    if (!in) throw ConfigError("cannot open '" + a.kshape_model + "'");
    const auto model = kshape_model_from_json(nlohmann::json::parse(in));
    write_text(a.output, render_centroids_svg(model));
    return 0;
  }
  if (a.barcodes.empty() || a.customer.empty()) {
    throw ConfigError("plot needs --kshape-model, or --barcodes with --customer");
  }
  std::ifstream in(a.barcodes);
  if (!in) throw ConfigError("cannot open '" + a.barcodes + "'");
  std::string line;
  csv::read_line(in, line);
  Barcode barcode;
  double extent = 0.0;
  bool found = false;
  while (csv::read_line(in, line)) {
    const auto f = csv::split_line(line);
    if (f.size() != 5) throw DataError("barcode file: expected 5 fields in '" + line + "'");
    if (f[0] != a.customer || f[1] != a.component) continue;
    found = true;
    const Interval iv{csv::parse_double(f[3]), csv::parse_double(f[4])};
    barcode.bars.at(std::stoul(f[2])).push_back(iv);
    if (!iv.infinite()) extent = std::max(extent, iv.death);
  }
  if (!found) throw DataError("no bars for customer '" + a.customer + "' component " + a.component);
  barcode.canonicalize();
  write_text(a.output, render_barcode_svg(barcode, a.cap ? *a.cap : extent));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Customer loyalty prediction with RFM, K-Shape and persistent homology features"};
  app.require_subcommand(1);

  Overrides o;
  std::string ts_labels, tda_labels;
  bool dump_barcodes = false;
  PlotArgs plot;

  auto* ingest = app.add_subcommand("ingest", "parse a transaction file and write the canonical log");
  auto* rfm = app.add_subcommand("rfm", "RFM scores at the cutoff and per-period RFM series");
  auto* cts = app.add_subcommand("cluster-ts", "K-Shape clustering of the R, F and M series");
  auto* ctda = app.add_subcommand("cluster-tda", "barcode features and elbow-selected k-means");
  auto* predict = app.add_subcommand("predict", "feature tables, GBDT fit and RMSE per setting");
  auto* run = app.add_subcommand("run", "full experiment over all requested settings");
  auto* plt = app.add_subcommand("plot", "render a barcode or centroid figure");
  for (auto* cmd : {ingest, rfm, cts, ctda, predict, run}) add_common(cmd, o);
  ctda->add_flag("--barcodes", dump_barcodes, "also write every barcode to barcodes.csv");
  predict->add_option("--ts-labels", ts_labels, "labels_ts.csv from cluster-ts");
  predict->add_option("--tda-labels", tda_labels, "labels_tda.csv from cluster-tda");
  plt->add_option("--kshape-model", plot.kshape_model, "kshape_*.json to draw centroids from");
  plt->add_option("--barcodes", plot.barcodes, "barcodes.csv from cluster-tda --barcodes");
  plt->add_option("--customer", plot.customer, "customer id to draw");
  plt->add_option("--component", plot.component, "R, F or M")->check(CLI::IsMember({"R", "F", "M"}));
  plt->add_option("--cap", plot.cap, "right end of infinite bars");
  plt->add_option("--output", plot.output, "SVG file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (plt->parsed()) return cmd_plot(plot);
    const auto config = resolve(o);
    if (ingest->parsed()) return cmd_ingest(config);
    if (rfm->parsed()) return cmd_rfm(config);
    if (cts->parsed()) return cmd_cluster_ts(config);
    if (ctda->parsed()) return cmd_cluster_tda(config, dump_barcodes);
    if (predict->parsed()) return cmd_predict(config, ts_labels, tda_labels);
    if (run->parsed()) return cmd_run(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
