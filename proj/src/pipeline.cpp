#include "loyalty/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "loyalty/csv.hpp"
#include "loyalty/errors.hpp"
#include "loyalty/parallel.hpp"
#include "loyalty/plot.hpp"

namespace loyalty {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto run_stage(const std::string& stage, const std::string& dataset, Fn&& fn) -> decltype(fn()) {
  const std::string where = "stage '" + stage + "' on dataset '" + dataset + "': ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

template <typename T>
void read_key(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key) && !doc.at(key).is_null()) target = doc.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& doc, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown configuration key '" + where + key + "'");
  }
}

std::array<std::size_t, 3> distinct_labels(std::span<const LabelMap> labels) {
  std::array<std::size_t, 3> counts{};
  for (std::size_t c = 0; c < 3; ++c) {
    std::set<std::size_t> seen;
    for (const auto& [id, label] : labels[c]) seen.insert(label);
    counts[c] = seen.size();
  }
  return counts;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  try {
    reject_unknown(doc,
                   {"dataset", "dataset_name", "format", "schema", "period_length", "cutoff_fraction", "train_ratio",
                    "kshape_k", "kshape_max_iter", "tda", "elbow_k_max", "gbdt", "seed", "repeats", "settings",
                    "output_dir"},
                   "");
    read_key(doc, "dataset", c.dataset);
    read_key(doc, "dataset_name", c.dataset_name);
    read_key(doc, "format", c.format);
    if (doc.contains("schema")) {
      const auto& s = doc.at("schema");
      reject_unknown(s, {"id", "date", "quantity", "monetary"}, "schema.");
      read_key(s, "id", c.schema.id);
      read_key(s, "date", c.schema.date);
      read_key(s, "quantity", c.schema.quantity);
      read_key(s, "monetary", c.schema.monetary);
    }
    read_key(doc, "period_length", c.period_length);
    read_key(doc, "cutoff_fraction", c.cutoff_fraction);
    read_key(doc, "train_ratio", c.train_ratio);
    read_key(doc, "kshape_k", c.kshape_k);
    read_key(doc, "kshape_max_iter", c.kshape_max_iter);
    if (doc.contains("tda")) {
      const auto& t = doc.at("tda");
      reject_unknown(t, {"dim", "delay", "max_radius", "h1_only"}, "tda.");
      read_key(t, "dim", c.tda.dim);
      read_key(t, "delay", c.tda.delay);
      if (t.contains("max_radius") && !t.at("max_radius").is_null()) c.tda.max_radius = t.at("max_radius").get<double>();
      read_key(t, "h1_only", c.tda.h1_only);
    }
    read_key(doc, "elbow_k_max", c.elbow_k_max);
    if (doc.contains("gbdt")) {
      const auto& g = doc.at("gbdt");
      reject_unknown(g, {"depth", "rounds", "learning_rate", "min_leaf", "seed"}, "gbdt.");
      read_key(g, "depth", c.gbdt.depth);
      read_key(g, "rounds", c.gbdt.rounds);
      read_key(g, "learning_rate", c.gbdt.learning_rate);
      read_key(g, "min_leaf", c.gbdt.min_leaf);
      read_key(g, "seed", c.gbdt.seed);
    }
    read_key(doc, "seed", c.seed);
    read_key(doc, "repeats", c.repeats);
    if (doc.contains("settings")) {
      c.settings.clear();
      for (const auto& s : doc.at("settings")) {
        const auto setting = parse_setting(s.get<std::string>());
        if (!setting) throw ConfigError("unknown setting '" + s.get<std::string>() + "'");
        c.settings.push_back(*setting);
      }
    }
    read_key(doc, "output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json settings_json = nlohmann::json::array();
  for (Setting s : settings) settings_json.push_back(std::string(setting_tag(s)));
  return {{"dataset", dataset},
          {"dataset_name", label()},
          {"format", format},
          {"schema", {{"id", schema.id}, {"date", schema.date}, {"quantity", schema.quantity}, {"monetary", schema.monetary}}},
          {"period_length", period_length},
          {"cutoff_fraction", cutoff_fraction},
          {"train_ratio", train_ratio},
          {"kshape_k", kshape_k},
          {"kshape_max_iter", kshape_max_iter},
          {"tda",
           {{"dim", tda.dim},
            {"delay", tda.delay},
            {"max_radius", tda.max_radius ? nlohmann::json(*tda.max_radius) : nlohmann::json(nullptr)},
            {"h1_only", tda.h1_only}}},
          {"elbow_k_max", elbow_k_max},
          {"gbdt",
           {{"depth", gbdt.depth},
            {"rounds", gbdt.rounds},
            {"learning_rate", gbdt.learning_rate},
            {"min_leaf", gbdt.min_leaf},
            {"seed", gbdt.seed}}},
          {"seed", seed},
          {"repeats", repeats},
          {"settings", settings_json},
          {"output_dir", output_dir}};
}

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("no dataset given");
  if (!fs::exists(dataset)) throw ConfigError("dataset '" + dataset + "' does not exist");
  if (format != "cdnow" && format != "generic") throw ConfigError("format must be 'cdnow' or 'generic'");
  if (period_length < 1) throw ConfigError("period_length must be at least 1 day");
  if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) throw ConfigError("cutoff_fraction must lie in (0, 1)");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must lie in (0, 1)");
  if (kshape_k < 1) throw ConfigError("kshape_k must be at least 1");
  if (kshape_max_iter < 1) throw ConfigError("kshape_max_iter must be at least 1");
  if (tda.dim < 2) throw ConfigError("tda.dim must be at least 2");
  if (tda.delay < 1) throw ConfigError("tda.delay must be at least 1");
  if (tda.max_radius && !(*tda.max_radius > 0.0)) throw ConfigError("tda.max_radius must be positive");
  if (elbow_k_max < 1) throw ConfigError("elbow_k_max must be at least 1");
  if (gbdt.depth < 1 || gbdt.min_leaf < 1) throw ConfigError("gbdt depth and min_leaf must be at least 1");
  if (!(gbdt.learning_rate > 0.0 && gbdt.learning_rate <= 1.0)) throw ConfigError("gbdt.learning_rate must lie in (0, 1]");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (settings.empty()) throw ConfigError("no settings requested");
  if (output_dir.empty()) throw ConfigError("no output directory given");
}

std::string RunConfig::label() const {
  if (!dataset_name.empty()) return dataset_name;
  return fs::path(dataset).stem().string();
}

std::size_t cutoff_period_for(std::size_t num_periods, double cutoff_fraction) {
  const auto observed = static_cast<std::size_t>(std::floor(cutoff_fraction * static_cast<double>(num_periods)));
  if (observed < 1 || observed >= num_periods) {
    throw ConfigError("cutoff fraction " + csv::format_double(cutoff_fraction) + " of " +
                      std::to_string(num_periods) + " periods leaves no observation or no target period");
  }
  return observed - 1;
}

PreparedData prepare(const RunConfig& config) {
  PreparedData data;
  std::ifstream in(config.dataset, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + config.dataset + "'");
  auto parsed = config.format == "cdnow" ? parse_cdnow(in) : parse_generic(in, config.schema);
  data.rejected = parsed.rejected;
  data.log = std::move(parsed.log);
  data.grid = bucketize(data.log, config.period_length);
  data.cutoff_period = cutoff_period_for(data.grid.num_periods, config.cutoff_fraction);
  std::tie(data.window_log, data.window_grid) = observation_window(data.log, data.grid, data.cutoff_period);
  data.series = rfm_series(data.window_log, data.window_grid);
  return data;
}

std::array<KShapeModel, 3> cluster_time_series(const PreparedData& data, const RunConfig& config) {
  std::array<KShapeModel, 3> models;
  for (std::size_t c = 0; c < 3; ++c) {
    SeriesMatrix matrix;
    for (const auto& s : data.series) {
      matrix.rows.push_back(s.component(kComponents[c]));
      matrix.keys.push_back(s.customer_id);
    }
    models[c] = kshape_fit(matrix, config.kshape_k, config.seed, config.kshape_max_iter);
  }
  return models;
}

std::pair<Barcode, double> series_barcode(std::span<const double> series, const TdaConfig& tda) {
  const auto cloud = delay_embed(series, tda.dim, tda.delay);
  const double cap = tda.max_radius ? *tda.max_radius : cloud.diameter();
  if (cap > 0.0) return {rips_barcode(cloud, cap), cap};
  // Every point coincides: one component that never dies, no loops.
  Barcode barcode;
  barcode.bars[0].push_back({0.0, std::numeric_limits<double>::infinity()});
  return {barcode, 0.0};
}

std::vector<double> series_topo_features(std::span<const double> series, const TdaConfig& tda) {
  const auto [barcode, cap] = series_barcode(series, tda);
  const auto all = barcode_features(barcode, cap);
  if (tda.h1_only) return std::vector<double>(all.begin() + kFeaturesPerDim, all.end());
  return std::vector<double>(all.begin(), all.end());
}

TdaClustering cluster_topological(const PreparedData& data, const RunConfig& config) {
  TdaClustering result;
  for (const auto& s : data.series) result.keys.push_back(s.customer_id);
  for (std::size_t c = 0; c < 3; ++c) {
    // Many customers share identical series; each distinct series is embedded once.
    std::map<std::vector<double>, std::size_t> distinct;
    std::vector<std::size_t> slot(data.series.size());
    for (std::size_t i = 0; i < data.series.size(); ++i) {
      const auto& values = data.series[i].component(kComponents[c]);
      slot[i] = distinct.emplace(values, distinct.size()).first->second;
    }
    std::vector<const std::vector<double>*> unique(distinct.size());
    for (const auto& [values, index] : distinct) unique[index] = &values;
    std::vector<std::vector<double>> features(unique.size());
    parallel_for(unique.size(), [&](std::size_t u) { features[u] = series_topo_features(*unique[u], config.tda); });
    result.features[c].reserve(slot.size());
    for (auto u : slot) result.features[c].push_back(features[u]);

    result.elbows[c] = elbow_sweep(result.features[c], config.elbow_k_max, config.seed);
    result.models[c] = kmeans_fit(result.features[c], result.elbows[c].k, config.seed);
  }
  return result;
}

std::vector<LabelMap> label_maps(const std::vector<std::string>& keys,
                                 const std::array<std::vector<std::size_t>, 3>& labels) {
  std::vector<LabelMap> maps(3);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < keys.size(); ++i) maps[c][keys[i]] = labels[c].at(i);
  }
  return maps;
}

void write_label_csv(std::ostream& out, const std::vector<LabelMap>& maps) {
  out << "customer_id,R,F,M\n";
  for (const auto& [id, label] : maps.at(0)) {
    out << csv::escape(id) << ',' << label << ',' << maps.at(1).at(id) << ',' << maps.at(2).at(id) << '\n';
  }
}

std::vector<LabelMap> read_label_csv(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line) || csv::split_line(line) != std::vector<std::string>{"customer_id", "R", "F", "M"}) {
    throw DataError("label file must start with the header customer_id,R,F,M");
  }
  std::vector<LabelMap> maps(3);
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 4) throw DataError("label file line " + std::to_string(line_no) + ": expected 4 fields");
    for (std::size_t c = 0; c < 3; ++c) {
      try {
        maps[c][fields[0]] = std::stoul(fields[c + 1]);
      } catch (const std::exception&) {
        throw DataError("label file line " + std::to_string(line_no) + ": malformed label");
      }
    }
  }
  return maps;
}

SettingResult evaluate_setting(const PreparedData& data, const RunConfig& config, Setting setting,
                               std::span<const LabelMap> labels) {
  const auto table = build_features(data.log, data.grid, data.cutoff_period, setting, labels);
  SettingResult result;
  result.setting = setting;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    const auto [train, test] = split(table, config.train_ratio, config.seed + r);
    GbdtParams params = config.gbdt;
    params.seed = config.gbdt.seed + r;
    const auto model = gbdt_fit(train, params);
    result.rmse_runs.push_back(rmse(gbdt_predict(model, test), test.target));
  }
  const double n = static_cast<double>(result.rmse_runs.size());
  double sum = 0.0;
  for (double v : result.rmse_runs) sum += v;
  result.rmse_mean = sum / n;
  double var = 0.0;
  for (double v : result.rmse_runs) var += (v - result.rmse_mean) * (v - result.rmse_mean);
  result.rmse_std = result.rmse_runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  if (setting == Setting::TsRfm || setting == Setting::TdaRfm) result.clusters = distinct_labels(labels);
  return result;
}

RunReport run_pipeline(const RunConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const std::string name = config.label();
  run_stage("config", name, [&] { config.validate(); });
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);

  const auto data = run_stage("ingest", name, [&] { return prepare(config); });
  if (data.rejected > 0) std::cerr << "rejected: " << data.rejected << " lines\n";

  auto wants = [&](Setting s) { return std::find(config.settings.begin(), config.settings.end(), s) != config.settings.end(); };
  nlohmann::json meta = {{"dataset", name},
                         {"customers", data.series.size()},
                         {"transactions", data.log.transactions.size()},
                         {"rejected_lines", data.rejected},
                         {"num_periods", data.grid.num_periods},
                         {"cutoff_period", data.cutoff_period},
                         {"tda_dims_used", config.tda.h1_only ? "H1" : "H0+H1"}};

  std::vector<LabelMap> ts_labels, tda_labels;
  if (wants(Setting::TsRfm)) {
    const auto models = run_stage("kshape", name, [&] { return cluster_time_series(data, config); });
    std::array<std::vector<std::size_t>, 3> labels;
    for (std::size_t c = 0; c < 3; ++c) {
      const char code = component_code(kComponents[c]);
      labels[c] = models[c].labels;
      write_file(out_dir / ("kshape_" + std::string(1, code) + ".json"), to_json(models[c]).dump(2) + "\n");
      write_file(out_dir / ("centroids_" + std::string(1, code) + ".svg"), render_centroids_svg(models[c]));
      meta["kshape"][std::string(1, code)] = {{"iterations", models[c].iterations_run}, {"inertia", models[c].inertia}};
    }
    ts_labels = label_maps(models[0].keys, labels);
    std::ofstream out(out_dir / "labels_ts.csv", std::ios::binary);
    write_label_csv(out, ts_labels);
  }
  if (wants(Setting::TdaRfm)) {
    const auto tda = run_stage("tda", name, [&] { return cluster_topological(data, config); });
    std::array<std::vector<std::size_t>, 3> labels;
    for (std::size_t c = 0; c < 3; ++c) {
      const std::string code(1, component_code(kComponents[c]));
      labels[c] = tda.models[c].labels;
      write_file(out_dir / ("kmeans_" + code + ".json"), to_json(tda.models[c], tda.keys).dump(2) + "\n");
      meta["elbow"][code] = {{"k", tda.elbows[c].k}, {"inertia", tda.elbows[c].inertia}};
      if (!data.series.empty()) {
        const auto [barcode, cap] = series_barcode(data.series.front().component(kComponents[c]), config.tda);
        write_file(out_dir / ("barcode_" + data.series.front().customer_id + "_" + code + ".svg"),
                   render_barcode_svg(barcode, cap));
      }
    }
    tda_labels = label_maps(tda.keys, labels);
    std::ofstream out(out_dir / "labels_tda.csv", std::ios::binary);
    write_label_csv(out, tda_labels);
  }

  RunReport report;
  report.dataset = name;
  report.customers = data.series.size();
  report.num_periods = data.grid.num_periods;
  report.cutoff_period = data.cutoff_period;
  report.config = config.to_json();
  for (Setting s : config.settings) {
    const auto& labels = s == Setting::TsRfm ? ts_labels : tda_labels;
    report.rows.push_back(run_stage(std::string("predict ") + std::string(setting_tag(s)), name,
                                    [&] { return evaluate_setting(data, config, s, labels); }));
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  meta["runtime_seconds"] = report.runtime_seconds;

  std::ostringstream report_csv;
  write_report_csv(report_csv, report);
  write_file(out_dir / "report.csv", report_csv.str());
  const auto table = emit_results_table(std::span<const RunReport>(&report, 1));
  write_file(out_dir / "results.txt", table.text);
  write_file(out_dir / "config.json", report.config.dump(2) + "\n");
  write_file(out_dir / "run_meta.json", meta.dump(2) + "\n");
  return report;
}

void write_report_csv(std::ostream& out, const RunReport& report) {
  out << "Dataset,Model,RMSE,RMSE_std,Repeats,Clusters_R,Clusters_F,Clusters_M\n";
  for (const auto& row : report.rows) {
    out << csv::escape(report.dataset) << ',' << setting_label(row.setting) << ','
        << csv::format_double(row.rmse_mean) << ',' << csv::format_double(row.rmse_std) << ','
        << row.rmse_runs.size();
    for (std::size_t c = 0; c < 3; ++c) {
      out << ',';
      if (row.clusters) out << (*row.clusters)[c];
    }
    out << '\n';
  }
}

RunReport read_report_csv(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line)) throw DataError("report: missing header");
  RunReport report;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != 8) throw DataError("report line " + std::to_string(line_no) + ": expected 8 fields");
    report.dataset = f[0];
    SettingResult row;
    const auto setting = parse_setting(f[1]);
    if (!setting) throw DataError("report line " + std::to_string(line_no) + ": unknown model '" + f[1] + "'");
    row.setting = *setting;
    row.rmse_mean = csv::parse_double(f[2]);
    row.rmse_std = csv::parse_double(f[3]);
    row.rmse_runs.resize(std::stoul(f[4]));
    if (!f[5].empty()) row.clusters = std::array<std::size_t, 3>{std::stoul(f[5]), std::stoul(f[6]), std::stoul(f[7])};
    report.rows.push_back(std::move(row));
  }
  return report;
}

ResultsTable emit_results_table(std::span<const RunReport> reports) {
  ResultsTable table;
  std::vector<std::array<std::string, 3>> cells = {{"Dataset", "Model", "RMSE"}};
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      cells.push_back({report.dataset, std::string(setting_label(row.setting)), csv::format_double(row.rmse_mean)});
    }
  }
  std::array<std::size_t, 3> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream csv_out, text_out;
  for (const auto& row : cells) {
    csv_out << csv::escape(row[0]) << ',' << csv::escape(row[1]) << ',' << row[2] << '\n';
    text_out << std::left << std::setw(static_cast<int>(width[0])) << row[0] << "  "
             << std::setw(static_cast<int>(width[1])) << row[1] << "  " << std::right
             << std::setw(static_cast<int>(width[2])) << row[2] << '\n';
  }
  table.csv = csv_out.str();
  table.text = text_out.str();
  return table;
}

}  // namespace loyalty
