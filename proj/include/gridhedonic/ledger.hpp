#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridhedonic/calendar.hpp"
#include "gridhedonic/grid.hpp"

namespace gridhedonic::ledger {

enum class Token { eth, sand, weth };

std::optional<Token> parse_token(std::string_view text);  // case-insensitive
std::string_view token_name(Token t);

inline constexpr std::string_view kZeroAddress = "0x0000000000000000000000000000000000000000";

// One secondary-market sale after ingestion.
struct Transaction {
  std::string tx_id;
  Timestamp timestamp;
  std::vector<grid::Coord> parcels;
  // Mint wave of each parcel, parallel to `parcels`.
  std::vector<int> mint_waves;
  bool premium = false;
  Token token = Token::eth;
  double price_token = 0.0;
  // Unset (NaN) until convert_to_usd.
  double price_usd = std::numeric_limits<double>::quiet_NaN();

  std::size_t lot_size() const { return parcels.size(); }
};

// One row of the transaction dump as written to disk.
struct RawTransaction {
  std::string tx_id;
  Timestamp timestamp;
  std::vector<std::string> nft_ids;
  bool premium = false;
  std::string token;
  double price_token = 0.0;
  std::string seller;
  std::string buyer;
};

struct ParcelInfo {
  grid::Coord coord;
  int mint_wave_id = 0;
};

// Resolves NFT ids to parcels and identifies primary-sale sellers.
class MapMetadata {
 public:
  MapMetadata() = default;

  // {"creators": ["0x..", ...], "parcels": {"<nft_id>": {"coord": [x, y], "mint_wave_id": w}}}
  static MapMetadata from_json(const nlohmann::json& doc, int map_size = grid::kDefaultMapSize);
  static MapMetadata load(const std::filesystem::path& path, int map_size = grid::kDefaultMapSize);

  // Derives the table from wave regions using nft_id = y * map_size + x.
  // Parcels not covered by any wave do not resolve.
  static MapMetadata from_waves(std::span<const grid::Wave> waves,
                                int map_size = grid::kDefaultMapSize);
  static std::string nft_id_for(grid::Coord c, int map_size = grid::kDefaultMapSize);

  void add_parcel(std::string nft_id, ParcelInfo info);
  void add_creator(std::string address);

  std::optional<ParcelInfo> resolve(std::string_view nft_id) const;
  bool is_creator(std::string_view address) const;

 private:
  std::map<std::string, ParcelInfo, std::less<>> parcels_;
  std::vector<std::string> creators_{std::string(kZeroAddress)};
};

enum class RejectReason {
  malformed_row,
  unresolved_nft,
  zero_payment,
  unsupported_token,
  primary_sale,
  missing_rate,
  outside_window,
  group_filtered,
  scattered_bundle,
  zero_distance,
};

std::string_view reason_name(RejectReason r);

struct Rejection {
  std::string tx_id;
  RejectReason reason = RejectReason::malformed_row;
  std::string detail;
};

struct IngestResult {
  std::vector<Transaction> transactions;
  std::vector<Rejection> rejections;
};

// CSV header: tx_id,timestamp_iso8601,nft_ids,lot_size,premium,token,price_token,seller,buyer
// Each row yields either a Transaction or one Rejection; the first failing
// rule decides the reason, checked in the order malformed, zero payment,
// unsupported token, primary sale, unresolved NFT.
IngestResult ingest_transactions(std::string_view csv_text, const MapMetadata& map);
IngestResult load_transactions(const std::filesystem::path& path, const MapMetadata& map);

std::string format_transactions_csv(std::span<const RawTransaction> rows);

// Daily USD close per settlement token plus the daily BTC price.
class RateTable {
 public:
  void set_rate(Token token, Date day, double usd);
  void set_btc(Date day, double usd);

  std::optional<double> rate(Token token, Date day) const;
  std::optional<double> btc(Date day) const;

  // CSV `date,token,usd_rate`; BTC rows carry token "BTC".
  static RateTable parse_csv(std::string_view text);
  static RateTable load(const std::filesystem::path& path);
  std::string to_csv() const;

 private:
  // Series 0..2 are the tokens, 3 is BTC.
  std::map<std::pair<Date, int>, double> rates_;
};

// price_usd = price_token * rate(token, UTC date). Throws ConversionError
// naming the date and token when the rate is missing.
Transaction convert_to_usd(Transaction tx, const RateTable& rates);

// Converts every transaction; missing rates become rejections.
IngestResult convert_all(std::vector<Transaction> txs, const RateTable& rates);

// Interpolated lower_q and upper_q quantiles.
std::pair<double, double> winsorize_bounds(std::span<const double> values, double lower_q = 0.001,
                                           double upper_q = 0.999);
std::vector<double> clip(std::span<const double> values, double lo, double hi);

// Clips to the [lower_q, upper_q] interpolated quantiles of the input.
// Applying it a second time recomputes the quantiles from the clipped data,
// which can move the clipped values inward when the quantile falls between
// order statistics.
std::vector<double> winsorize(std::span<const double> values, double lower_q = 0.001,
                              double upper_q = 0.999);

// One regression row.
struct EventSample {
  std::string tx_id;
  int group_id = 0;
  double log_price = 0.0;
  double distance = 0.0;
  double log_distance = 0.0;
  bool near = false;
  bool post = false;
  bool multi = false;
  double log_lot_size = 0.0;
  bool premium = false;
  bool paid_sand = false;
  bool paid_weth = false;
  double log_btc = 0.0;
  int mint_wave_id = 0;
  Date day;
  int week = 0;
  // Days from the group's announcement date (-window..+window).
  int event_day = 0;
  // Winsorized USD price.
  double price_usd = 0.0;
  int lot_size = 1;

  Date announce_date() const { return day - std::chrono::days{event_day}; }
};

struct GroupRange {
  int first = 8;
  int last = 17;
  bool contains(int g) const { return g >= first && g <= last; }
};

struct PanelOptions {
  int window_days = 7;
  // Empty means keep every group.
  std::optional<GroupRange> groups = GroupRange{};
  int contiguity_threshold = grid::kDefaultContiguityThreshold;
  double winsor_lower = 0.001;
  double winsor_upper = 0.999;
};

struct Panel {
  std::vector<EventSample> samples;
  std::vector<Rejection> rejections;
};

// Throws ConfigError when two groups' [announce - w, announce + w] windows share a day.
void validate_windows(std::span<const grid::AnnouncementGroup> groups, int window_days);

// Builds the event-window panel from USD-converted transactions.
Panel build_event_samples(std::span<const Transaction> transactions,
                          std::span<const grid::AnnouncementGroup> groups, const RateTable& rates,
                          const PanelOptions& options = {});

std::string format_panel_csv(std::span<const EventSample> samples);

struct SummaryRow {
  std::string label;  // group id or "All"
  std::size_t n = 0;
  double price_mean = 0.0;
  double price_sd = 0.0;
  double distance_mean = 0.0;
  double distance_median = 0.0;
  double lot_size_mean = 0.0;
  double premium_share = 0.0;
  double sand_share = 0.0;
  double weth_share = 0.0;
};

// One row per group (ascending) followed by the pooled "All" row.
std::vector<SummaryRow> summary_stats(std::span<const EventSample> samples);
std::string format_summary_csv(std::span<const SummaryRow> rows);

// Full ingestion path: ingest, convert, build the panel. Rejections from all
// stages are concatenated in stage order.
Panel prepare_panel(std::string_view transactions_csv, const MapMetadata& map,
                    std::span<const grid::AnnouncementGroup> groups, const RateTable& rates,
                    const PanelOptions& options = {});

}  // namespace gridhedonic::ledger
