#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/grid.hpp"
#include "gridhedonic/ledger.hpp"

namespace gridhedonic::synth {

struct Betas {
  double post = 0.106;
  double near = 0.030;  // coefficient on the treatment variable itself
  double post_near = 0.084;
  double multi = 0.0;
  double post_multi = 0.0;
  double post_near_multi = -0.173;
};

struct Gamma {
  double log_lot_size = 1.071;
  double premium = 0.420;
  double log_btc = 1.650;
  double paid_sand = 0.121;
  double paid_weth = -0.380;
};

struct FeScales {
  double day = 0.05;
  double mint_wave = 0.2;
};

struct SideRange {
  int min = 0;
  int max = 0;
};

struct DGPConfig {
  std::uint64_t seed = 20211028;
  int map_size = grid::kDefaultMapSize;
  // Analysis groups; numbered after the seed groups.
  int n_groups = 10;
  // Weight per wave count, keys 1, 4 and 5.
  std::map<int, double> waves_per_group{{1, 0.6}, {4, 0.2}, {5, 0.2}};
  int min_multi_groups = 2;
  int min_single_groups = 2;
  int transactions_per_group = 1000;
  econ::Treatment treatment = econ::Treatment::discrete_near;
  Betas true_betas;
  Gamma gamma;
  FeScales fe_scales;
  double noise_sigma = 0.5;
  double intercept = -9.5;
  // Planted log price change from the first to the last transaction week,
  // linear in the week number.
  double total_log_drift = 0.0;
  // Probabilities for ETH, SAND, WETH.
  std::map<ledger::Token, double> token_mix{
      {ledger::Token::eth, 0.807}, {ledger::Token::sand, 0.054}, {ledger::Token::weth, 0.139}};
  double premium_rate = 0.062;
  // Probability per lot edge: 1x1, 3x3, 6x6.
  std::map<int, double> lot_size_law{{1, 0.953}, {3, 0.045}, {6, 0.002}};

  Date start_date = parse_date("2021-01-04");
  int window_days = 7;
  int min_gap_days = 15;
  int max_gap_days = 30;
  int min_sale_lag = 5;
  int max_sale_lag = 12;
  // Groups 1..seed_groups release the land traded in the analysis windows.
  int seed_groups = 7;
  SideRange seed_side{30, 60};
  SideRange wave_side{10, 30};

  // Defaults with the continuous treatment and its planted coefficients.
  static DGPConfig continuous();

  // Throws ConfigError on any violated invariant.
  void validate() const;
  bool has_multi_effects() const;

  // Missing keys keep their defaults; unknown keys are rejected.
  static DGPConfig from_json(const nlohmann::json& doc);
  static DGPConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Ground truth for one emitted transaction.
struct PlantedRow {
  std::string tx_id;
  int group_id = 0;
  double distance = 0.0;
  bool near = false;
  bool post = false;
  double log_price_usd = 0.0;
};

struct SyntheticMarket {
  std::vector<grid::Wave> waves;
  std::vector<grid::AnnouncementGroup> groups;
  std::vector<ledger::RawTransaction> rows;
  // Same sales as `rows`, parcels resolved and price_usd set.
  std::vector<ledger::Transaction> transactions;
  std::vector<PlantedRow> planted;
  ledger::RateTable rates;
  DGPConfig truth;

  ledger::MapMetadata map() const;
  std::string transactions_csv() const;
};

// Throws CapacityError when the wave rectangles do not fit on the map.
SyntheticMarket generate_market(const DGPConfig& config);

// waves.json, transactions.csv, rates.csv and truth.json.
void write_market(const SyntheticMarket& market, const std::filesystem::path& out_dir);

struct RecoveryOptions {
  int replications = 1;
  // Every group by default; the synthetic numbering need not match the
  // default screening range.
  ledger::PanelOptions panel{.groups = std::nullopt};
  // Defaults to the treatment of the config, day + mint-wave FE, and the
  // lot, premium and token controls; the triple difference when the config
  // plants multi effects.
  std::optional<econ::ModelSpec> spec;
  double ci_z = 1.959963984540054;
};

struct RecoveryRow {
  std::string parameter;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double empirical_sd = 0.0;
  double mean_std_error = 0.0;
  double coverage = 0.0;
  int n = 0;
};

struct RecoveryFailure {
  int replication = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  std::vector<RecoveryFailure> failures;
  int replications = 0;

  const RecoveryRow& at(const std::string& parameter) const;
};

// Seed of replication r, derived from the master seed.
std::uint64_t replication_seed(std::uint64_t master, int r);

econ::ModelSpec default_recovery_spec(const DGPConfig& config);

// Planted value of a fitted term, if the DGP plants one.
std::optional<double> planted_value(const DGPConfig& config, const std::string& term);

// generate -> CSV -> ingest -> panel -> estimate, once per replication.
RecoveryReport recovery_report(const DGPConfig& config, const RecoveryOptions& options = {});

std::string format_recovery_csv(const RecoveryReport& report);

}  // namespace gridhedonic::synth
