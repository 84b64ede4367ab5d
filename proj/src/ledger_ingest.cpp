#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "gridhedonic/errors.hpp"
#include "gridhedonic/io.hpp"
#include "gridhedonic/ledger.hpp"

namespace gridhedonic::ledger {

using nlohmann::json;

namespace {

constexpr std::string_view kTransactionHeader =
    "tx_id,timestamp_iso8601,nft_ids,lot_size,premium,token,price_token,seller,buyer";
constexpr std::string_view kRatesHeader = "date,token,usd_rate";
constexpr int kBtcSeries = 3;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool parse_bool(std::string_view text) {
  const std::string v = lower(io::trim(text));
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw InvalidInput("not a boolean: '" + std::string(text) + "'");
}

// Yields the non-empty lines after the header; the header itself must match.
std::vector<std::string_view> body_lines(std::string_view text, std::string_view header,
                                         std::string_view what) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  bool seen_header = false;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = io::trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header)
        throw InvalidInput(std::string(what) + " header must be '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    lines.push_back(line);
  }
  if (!seen_header) throw InvalidInput(std::string(what) + " is empty");
  return lines;
}

}  // namespace

std::optional<Token> parse_token(std::string_view text) {
  const std::string v = lower(io::trim(text));
  if (v == "eth") return Token::eth;
  if (v == "sand") return Token::sand;
  if (v == "weth") return Token::weth;
  return std::nullopt;
}

std::string_view token_name(Token t) {
  switch (t) {
    case Token::eth: return "ETH";
    case Token::sand: return "SAND";
    case Token::weth: return "WETH";
  }
  return "?";
}

std::string_view reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::malformed_row: return "malformed_row";
    case RejectReason::unresolved_nft: return "unresolved_nft";
    case RejectReason::zero_payment: return "zero_payment";
    case RejectReason::unsupported_token: return "unsupported_token";
    case RejectReason::primary_sale: return "primary_sale";
    case RejectReason::missing_rate: return "missing_rate";
    case RejectReason::outside_window: return "outside_window";
    case RejectReason::group_filtered: return "group_filtered";
    case RejectReason::scattered_bundle: return "scattered_bundle";
    case RejectReason::zero_distance: return "zero_distance";
  }
  return "?";
}

// ---- map metadata ----------------------------------------------------------

MapMetadata MapMetadata::from_json(const json& doc, int map_size) {
  MapMetadata map;
  try {
    if (doc.contains("creators")) {
      map.creators_.clear();
      for (const auto& c : doc.at("creators")) map.add_creator(c.get<std::string>());
    }
    for (const auto& [id, entry] : doc.at("parcels").items()) {
      const auto& c = entry.at("coord");
      grid::Coord coord{c.at(0).get<int>(), c.at(1).get<int>()};
      if (!grid::in_map(coord, map_size))
        throw InvalidInput("parcel " + id + " lies outside the map");
      map.add_parcel(id, {coord, entry.at("mint_wave_id").get<int>()});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed map metadata: ") + e.what());
  }
  return map;
}

MapMetadata MapMetadata::load(const std::filesystem::path& path, int map_size) {
  try {
    return from_json(json::parse(io::read_file(path)), map_size);
  } catch (const json::parse_error& e) {
    throw InvalidInput("cannot parse '" + path.string() + "': " + e.what());
  }
}

MapMetadata MapMetadata::from_waves(std::span<const grid::Wave> waves, int map_size) {
  MapMetadata map;
  for (const grid::Wave& w : waves)
    for (grid::Coord c : w.region.parcels()) map.add_parcel(nft_id_for(c, map_size), {c, w.wave_id});
  return map;
}

std::string MapMetadata::nft_id_for(grid::Coord c, int map_size) {
  return std::to_string(static_cast<long long>(c.y) * map_size + c.x);
}

void MapMetadata::add_parcel(std::string nft_id, ParcelInfo info) {
  parcels_.insert_or_assign(std::move(nft_id), info);
}

void MapMetadata::add_creator(std::string address) { creators_.push_back(lower(address)); }

std::optional<ParcelInfo> MapMetadata::resolve(std::string_view nft_id) const {
  auto it = parcels_.find(nft_id);
  if (it == parcels_.end()) return std::nullopt;
  return it->second;
}

bool MapMetadata::is_creator(std::string_view address) const {
  const std::string a = lower(io::trim(address));
  return std::find(creators_.begin(), creators_.end(), a) != creators_.end();
}

// ---- transaction dump ------------------------------------------------------

IngestResult ingest_transactions(std::string_view csv_text, const MapMetadata& map) {
  IngestResult out;
  std::size_t row = 0;
  for (std::string_view line : body_lines(csv_text, kTransactionHeader, "transaction dump")) {
    ++row;
    const auto fields = io::split(line);
    const std::string tx_id = fields.empty() || fields[0].empty() ? "row" + std::to_string(row) : fields[0];
    auto reject = [&](RejectReason reason, std::string detail) {
      out.rejections.push_back({tx_id, reason, std::move(detail)});
    };

    Transaction tx;
    std::vector<std::string> nft_ids;
    std::string token_text, seller;
    try {
      if (fields.size() != 9)
        throw InvalidInput("expected 9 fields, got " + std::to_string(fields.size()));
      if (fields[0].empty()) throw InvalidInput("empty tx_id");
      tx.tx_id = fields[0];
      tx.timestamp = parse_timestamp(fields[1]);
      nft_ids = io::split(fields[2], ';');
      const long long lot = io::parse_int(fields[3]);
      if (nft_ids.empty() || nft_ids.front().empty() || lot != static_cast<long long>(nft_ids.size()))
        throw InvalidInput("lot_size " + fields[3] + " does not match nft_ids");
      if (std::set<std::string>(nft_ids.begin(), nft_ids.end()).size() != nft_ids.size())
        throw InvalidInput("nft_ids repeat a parcel");
      tx.premium = parse_bool(fields[4]);
      token_text = fields[5];
      tx.price_token = io::parse_double(fields[6]);
      if (tx.price_token < 0.0 || !std::isfinite(tx.price_token))
        throw InvalidInput("negative or non-finite price");
      seller = fields[7];
    } catch (const InvalidInput& e) {
      reject(RejectReason::malformed_row, e.what());
      continue;
    }

    if (tx.price_token == 0.0) {
      reject(RejectReason::zero_payment, "transfer without payment");
      continue;
    }
    const auto token = parse_token(token_text);
    if (!token) {
      reject(RejectReason::unsupported_token, "settled in " + token_text);
      continue;
    }
    tx.token = *token;
    if (map.is_creator(seller)) {
      reject(RejectReason::primary_sale, "seller " + seller + " is the creator");
      continue;
    }
    bool resolved = true;
    for (const auto& id : nft_ids) {
      auto info = map.resolve(id);
      if (!info) {
        reject(RejectReason::unresolved_nft, "nft id " + id + " has no coordinates");
        resolved = false;
        break;
      }
      tx.parcels.push_back(info->coord);
      tx.mint_waves.push_back(info->mint_wave_id);
    }
    if (resolved) out.transactions.push_back(std::move(tx));
  }
  return out;
}

IngestResult load_transactions(const std::filesystem::path& path, const MapMetadata& map) {
  return ingest_transactions(io::read_file(path), map);
}

std::string format_transactions_csv(std::span<const RawTransaction> rows) {
  std::string out(kTransactionHeader);
  out += '\n';
  for (const RawTransaction& r : rows) {
    std::string ids;
    for (std::size_t i = 0; i < r.nft_ids.size(); ++i) {
      if (i) ids += ';';
      ids += r.nft_ids[i];
    }
    out += r.tx_id + ',' + format_timestamp(r.timestamp) + ',' + ids + ',' +
           std::to_string(r.nft_ids.size()) + ',' + (r.premium ? "1" : "0") + ',' + r.token + ',' +
           io::format_double(r.price_token) + ',' + r.seller + ',' + r.buyer + '\n';
  }
  return out;
}

// ---- rates -----------------------------------------------------------------

void RateTable::set_rate(Token token, Date day, double usd) {
  if (!(usd > 0.0)) throw InvalidInput("rate must be positive");
  rates_[{day, static_cast<int>(token)}] = usd;
}

void RateTable::set_btc(Date day, double usd) {
  if (!(usd > 0.0)) throw InvalidInput("BTC price must be positive");
  rates_[{day, kBtcSeries}] = usd;
}

std::optional<double> RateTable::rate(Token token, Date day) const {
  auto it = rates_.find({day, static_cast<int>(token)});
  if (it == rates_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> RateTable::btc(Date day) const {
  auto it = rates_.find({day, kBtcSeries});
  if (it == rates_.end()) return std::nullopt;
  return it->second;
}

RateTable RateTable::parse_csv(std::string_view text) {
  RateTable table;
  for (std::string_view line : body_lines(text, kRatesHeader, "rates file")) {
    const auto f = io::split(line);
    if (f.size() != 3) throw InvalidInput("rates row needs 3 fields: '" + std::string(line) + "'");
    const Date day = parse_date(f[0]);
    const double value = io::parse_double(f[2]);
    if (lower(f[1]) == "btc") {
      table.set_btc(day, value);
    } else if (auto token = parse_token(f[1])) {
      table.set_rate(*token, day, value);
    } else {
      throw InvalidInput("rates file names unknown token '" + f[1] + "'");
    }
  }
  return table;
}

RateTable RateTable::load(const std::filesystem::path& path) { return parse_csv(io::read_file(path)); }

std::string RateTable::to_csv() const {
  std::ostringstream out;
  out << kRatesHeader << '\n';
  for (const auto& [key, value] : rates_) {
    const auto& [day, series] = key;
    out << format_date(day) << ','
        << (series == kBtcSeries ? std::string_view("BTC") : token_name(static_cast<Token>(series)))
        << ',' << io::format_double(value) << '\n';
  }
  return out.str();
}

Transaction convert_to_usd(Transaction tx, const RateTable& rates) {
  const Date day = utc_day(tx.timestamp);
  const auto rate = rates.rate(tx.token, day);
  if (!rate)
    throw ConversionError("no " + std::string(token_name(tx.token)) + " rate for " + format_date(day));
  tx.price_usd = tx.price_token * *rate;
  return tx;
}

IngestResult convert_all(std::vector<Transaction> txs, const RateTable& rates) {
  IngestResult out;
  out.transactions.reserve(txs.size());
  for (Transaction& tx : txs) {
    std::string id = tx.tx_id;
    try {
      out.transactions.push_back(convert_to_usd(std::move(tx), rates));
    } catch (const ConversionError& e) {
      out.rejections.push_back({std::move(id), RejectReason::missing_rate, e.what()});
    }
  }
  return out;
}

}  // namespace gridhedonic::ledger
