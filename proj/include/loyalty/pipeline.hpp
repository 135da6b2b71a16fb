#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "loyalty/cluster.hpp"
#include "loyalty/ingest.hpp"
#include "loyalty/kshape.hpp"
#include "loyalty/predict.hpp"
#include "loyalty/rfm.hpp"
#include "loyalty/tda.hpp"

namespace loyalty {

struct TdaConfig {
  std::size_t dim = 3;
  std::size_t delay = 1;
  std::optional<double> max_radius;  // unset: each cloud's diameter
  bool h1_only = false;
};

struct RunConfig {
  std::string dataset;
  std::string dataset_name;  // report label; defaults to the file stem
  std::string format = "cdnow";
  GenericSchema schema;
  int period_length = 7;
  double cutoff_fraction = 0.7;
  double train_ratio = 0.7;
  std::size_t kshape_k = 4;
  std::size_t kshape_max_iter = 100;
  TdaConfig tda;
  std::size_t elbow_k_max = 10;
  GbdtParams gbdt;
  std::uint64_t seed = 42;
  std::size_t repeats = 5;
  std::vector<Setting> settings = {Setting::NoRfm, Setting::Rfm, Setting::TsRfm, Setting::TdaRfm};
  std::string output_dir = "out";

  // Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  // Throws ConfigError on any invalid field or a dataset path that does not exist.
  void validate() const;
  std::string label() const;
};

// Ingested data cut at the configured cutoff.
struct PreparedData {
  TransactionLog log;
  PeriodGrid grid;
  std::size_t cutoff_period = 0;
  std::size_t rejected = 0;
  TransactionLog window_log;
  PeriodGrid window_grid;
  std::vector<RfmSeries> series;  // observation window only
};

// Last observed period: floor(cutoff_fraction * num_periods) - 1, which must
// leave at least one observation and one target period.
std::size_t cutoff_period_for(std::size_t num_periods, double cutoff_fraction);

PreparedData prepare(const RunConfig& config);

std::array<KShapeModel, 3> cluster_time_series(const PreparedData& data, const RunConfig& config);

struct TdaClustering {
  std::vector<std::string> keys;
  std::array<FeatureMatrix, 3> features;
  std::array<ElbowResult, 3> elbows;
  std::array<KMeansModel, 3> models;
};

// Barcode of one series' delay embedding, and the cap used for its features.
std::pair<Barcode, double> series_barcode(std::span<const double> series, const TdaConfig& tda);
std::vector<double> series_topo_features(std::span<const double> series, const TdaConfig& tda);

TdaClustering cluster_topological(const PreparedData& data, const RunConfig& config);

std::vector<LabelMap> label_maps(const std::vector<std::string>& keys,
                                 const std::array<std::vector<std::size_t>, 3>& labels);
void write_label_csv(std::ostream& out, const std::vector<LabelMap>& maps);
std::vector<LabelMap> read_label_csv(std::istream& in);

struct SettingResult {
  Setting setting = Setting::NoRfm;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  // sample standard deviation over repeats, 0 for one repeat
  std::vector<double> rmse_runs;
  std::optional<std::array<std::size_t, 3>> clusters;  // per R, F, M when the setting clusters

  bool operator==(const SettingResult&) const = default;
};

struct RunReport {
  std::string dataset;
  std::vector<SettingResult> rows;
  std::size_t customers = 0;
  std::size_t num_periods = 0;
  std::size_t cutoff_period = 0;
  double runtime_seconds = 0.0;
  nlohmann::json config;
};

// Repeated split / fit / score of one setting. Repeat r uses seed + r.
SettingResult evaluate_setting(const PreparedData& data, const RunConfig& config, Setting setting,
                               std::span<const LabelMap> labels);

// Runs every requested setting and writes the report, models, label maps,
// figures and the config echo into config.output_dir. Stage failures are
// rethrown with the stage name and dataset in the message.
RunReport run_pipeline(const RunConfig& config);

// "Dataset,Model,RMSE,RMSE_std,Repeats,Clusters_R,Clusters_F,Clusters_M"
void write_report_csv(std::ostream& out, const RunReport& report);
RunReport read_report_csv(std::istream& in);

struct ResultsTable {
  std::string csv;   // Dataset,Model,RMSE
  std::string text;  // aligned columns
};
ResultsTable emit_results_table(std::span<const RunReport> reports);

}  // namespace loyalty
