#include "gridhedonic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "gridhedonic/errors.hpp"
#include "gridhedonic/grid_io.hpp"
#include "gridhedonic/io.hpp"
#include "gridhedonic/stats.hpp"

namespace gridhedonic::synth {

using nlohmann::json;
using std::chrono::days;
using std::chrono::seconds;

namespace {

// Independent streams so that, e.g., a different noise level leaves the
// geometry unchanged.
enum Stream : std::uint32_t { kGeometry = 1, kRates, kEffects, kTrades, kNoise };

std::mt19937_64 stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

std::string treatment_name(econ::Treatment t) {
  switch (t) {
    case econ::Treatment::discrete_near: return "near";
    case econ::Treatment::continuous_log_distance: return "logdist";
    case econ::Treatment::none: break;
  }
  return "none";
}

econ::Treatment parse_treatment(const std::string& s) {
  if (s == "near" || s == "discrete") return econ::Treatment::discrete_near;
  if (s == "logdist" || s == "continuous") return econ::Treatment::continuous_log_distance;
  throw ConfigError("unknown treatment '" + s + "' (expected near or logdist)");
}

void check_distribution(const std::string& name, const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ConfigError(name + ": probabilities must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(name + ": probabilities must sum to 1");
}

template <class K>
std::vector<double> values_of(const std::map<K, double>& m) {
  std::vector<double> out;
  for (const auto& [k, v] : m) out.push_back(v);
  return out;
}

template <class K>
K draw_key(const std::map<K, double>& weights, std::mt19937_64& rng) {
  std::vector<K> keys;
  std::vector<double> w;
  for (const auto& [k, v] : weights) {
    keys.push_back(k);
    w.push_back(v);
  }
  std::discrete_distribution<std::size_t> d(w.begin(), w.end());
  return keys[d(rng)];
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::map<int, double> read_int_weights(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::map<int, double> out;
  for (const auto& [k, v] : obj.items()) {
    int key = 0;
    try {
      key = static_cast<int>(io::parse_int(k));
    } catch (const Error&) {
      throw ConfigError("bad key '" + k + "' in " + where);
    }
    if (!v.is_number()) throw ConfigError(where + " weights must be numbers");
    out[key] = v.get<double>();
  }
  return out;
}

std::string random_address(std::mt19937_64& rng) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "0x";
  std::uniform_int_distribution<int> nibble(0, 15);
  for (int i = 0; i < 40; ++i) out += kHex[nibble(rng)];
  return out;
}

// Occupancy bitmap for rectangle placement.
class Occupancy {
 public:
  explicit Occupancy(int size) : size_(size), cells_(static_cast<std::size_t>(size) * size, 0) {}

  bool free(const grid::Rect& r) const {
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x)
        if (cells_[index(x, y)]) return false;
    return true;
  }
  void mark(const grid::Rect& r) {
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) cells_[index(x, y)] = 1;
  }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * size_ + x; }
  int size_;
  std::vector<char> cells_;
};

grid::Rect place_rect(Occupancy& occ, int map_size, SideRange side, std::mt19937_64& rng,
                      const std::string& what) {
  constexpr int kAttempts = 2000;
  std::uniform_int_distribution<int> edge(side.min, side.max);
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const int w = std::min(edge(rng), map_size);
    const int h = std::min(edge(rng), map_size);
    std::uniform_int_distribution<int> x0(0, map_size - w), y0(0, map_size - h);
    grid::Rect r{x0(rng), y0(rng), 0, 0};
    r.x1 = r.x0 + w - 1;
    r.y1 = r.y0 + h - 1;
    if (occ.free(r)) {
      occ.mark(r);
      return r;
    }
  }
  throw CapacityError("grid exhausted: no free " + std::to_string(side.min) + "+ parcel block for " +
                      what + " on a " + std::to_string(map_size) + "x" + std::to_string(map_size) +
                      " map");
}

// Wave counts per analysis group, honouring the minimum multi/single counts.
std::vector<int> draw_wave_counts(const DGPConfig& c, std::mt19937_64& rng) {
  std::vector<int> counts(static_cast<std::size_t>(c.n_groups));
  for (int& k : counts) k = draw_key(c.waves_per_group, rng);
  std::map<int, double> multi_weights, single_weights;
  for (const auto& [k, w] : c.waves_per_group) (k > 1 ? multi_weights : single_weights)[k] = w;
  auto total = [](const std::map<int, double>& m) {
    const std::vector<double> v = values_of(m);
    return std::accumulate(v.begin(), v.end(), 0.0);
  };
  if (total(multi_weights) == 0.0) multi_weights = {{4, 1.0}};
  if (total(single_weights) == 0.0) single_weights = {{1, 1.0}};

  auto count_multi = [&] { return std::count_if(counts.begin(), counts.end(), [](int k) { return k > 1; }); };
  auto convert = [&](bool to_multi) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < counts.size(); ++i)
      if ((counts[i] > 1) != to_multi) candidates.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    counts[candidates[pick(rng)]] = draw_key(to_multi ? multi_weights : single_weights, rng);
  };
  while (count_multi() < c.min_multi_groups) convert(true);
  while (c.n_groups - count_multi() < c.min_single_groups) convert(false);
  return counts;
}

struct Lot {
  int group_index = 0;
  Date day;
  int event_day = 0;
  Timestamp timestamp;
  std::vector<grid::Coord> parcels;
  int mint_wave = 0;
  bool premium = false;
  ledger::Token token = ledger::Token::eth;
  double distance = 0.0;
  bool near = false;
};

}  // namespace

// ---- config ----------------------------------------------------------------

DGPConfig DGPConfig::continuous() {
  DGPConfig c;
  c.treatment = econ::Treatment::continuous_log_distance;
  c.true_betas.near = -0.001;
  c.true_betas.post_near = -0.034;
  c.true_betas.post_near_multi = 0.0;
  return c;
}

bool DGPConfig::has_multi_effects() const {
  return true_betas.multi != 0.0 || true_betas.post_multi != 0.0 || true_betas.post_near_multi != 0.0;
}

void DGPConfig::validate() const {
  if (map_size < 1) throw ConfigError("map_size must be positive");
  if (n_groups < 2) throw ConfigError("n_groups must be at least 2");
  if (seed_groups < 1) throw ConfigError("seed_groups must be at least 1");
  if (transactions_per_group < 4) throw ConfigError("transactions_per_group must be at least 4");
  if (treatment == econ::Treatment::none) throw ConfigError("treatment must be near or logdist");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ConfigError("noise_sigma must be a non-negative number");
  if (!(fe_scales.day >= 0.0) || !(fe_scales.mint_wave >= 0.0))
    throw ConfigError("fe_scales must be non-negative");
  if (!(premium_rate >= 0.0 && premium_rate <= 1.0)) throw ConfigError("premium_rate must lie in [0, 1]");
  for (const auto& [k, w] : waves_per_group)
    if (k < 1) throw ConfigError("waves_per_group keys must be positive wave counts");
  for (const auto& [k, w] : lot_size_law)
    if (k < 1) throw ConfigError("lot_size_law keys must be positive lot edges");
  check_distribution("waves_per_group", values_of(waves_per_group));
  check_distribution("token_mix", values_of(token_mix));
  check_distribution("lot_size_law", values_of(lot_size_law));
  if (min_multi_groups < 0 || min_single_groups < 0 || min_multi_groups + min_single_groups > n_groups)
    throw ConfigError("min_multi_groups + min_single_groups exceeds n_groups");
  if (window_days < 1) throw ConfigError("window_days must be positive");
  if (min_gap_days <= 2 * window_days)
    throw ConfigError("min_gap_days must exceed twice window_days so event windows cannot overlap");
  if (max_gap_days < min_gap_days) throw ConfigError("max_gap_days must be at least min_gap_days");
  if (min_sale_lag < 0 || max_sale_lag < min_sale_lag) throw ConfigError("bad sale lag range");
  for (const SideRange* s : {&seed_side, &wave_side})
    if (s->min < 1 || s->max < s->min) throw ConfigError("bad rectangle side range");
  int largest_lot = 1;
  for (const auto& [k, w] : lot_size_law)
    if (w > 0.0) largest_lot = std::max(largest_lot, k);
  if (largest_lot > seed_side.min)
    throw ConfigError("lot edge " + std::to_string(largest_lot) + " exceeds the smallest seed block");
}

DGPConfig DGPConfig::from_json(const json& doc) {
  reject_unknown(doc, "DGP config",
                 {"seed", "map_size", "n_groups", "waves_per_group", "min_multi_groups",
                  "min_single_groups", "transactions_per_group", "treatment", "true_betas", "gamma",
                  "fe_scales", "noise_sigma", "intercept", "total_log_drift", "token_mix",
                  "premium_rate", "lot_size_law", "start_date", "window_days", "min_gap_days",
                  "max_gap_days", "min_sale_lag", "max_sale_lag", "seed_groups", "seed_side",
                  "wave_side"});
  DGPConfig c;
  if (doc.contains("treatment")) {
    if (!doc["treatment"].is_string()) throw ConfigError("treatment must be a string");
    if (parse_treatment(doc["treatment"].get<std::string>()) == econ::Treatment::continuous_log_distance)
      c = continuous();
  }
  read(doc, "seed", c.seed);
  read(doc, "map_size", c.map_size);
  read(doc, "n_groups", c.n_groups);
  read(doc, "min_multi_groups", c.min_multi_groups);
  read(doc, "min_single_groups", c.min_single_groups);
  read(doc, "transactions_per_group", c.transactions_per_group);
  read(doc, "noise_sigma", c.noise_sigma);
  read(doc, "intercept", c.intercept);
  read(doc, "total_log_drift", c.total_log_drift);
  read(doc, "premium_rate", c.premium_rate);
  read(doc, "window_days", c.window_days);
  read(doc, "min_gap_days", c.min_gap_days);
  read(doc, "max_gap_days", c.max_gap_days);
  read(doc, "min_sale_lag", c.min_sale_lag);
  read(doc, "max_sale_lag", c.max_sale_lag);
  read(doc, "seed_groups", c.seed_groups);
  if (doc.contains("waves_per_group")) c.waves_per_group = read_int_weights(doc["waves_per_group"], "waves_per_group");
  if (doc.contains("lot_size_law")) {
    const json& law = doc["lot_size_law"];
    reject_unknown(law, "lot_size_law", {"1x1", "3x3", "6x6"});
    c.lot_size_law.clear();
    for (const auto& [k, v] : law.items()) {
      if (!v.is_number()) throw ConfigError("lot_size_law weights must be numbers");
      c.lot_size_law[k[0] - '0'] = v.get<double>();
    }
  }
  if (doc.contains("token_mix")) {
    const json& mix = doc["token_mix"];
    reject_unknown(mix, "token_mix", {"ETH", "SAND", "WETH"});
    c.token_mix.clear();
    for (const auto& [k, v] : mix.items()) {
      if (!v.is_number()) throw ConfigError("token_mix weights must be numbers");
      c.token_mix[*ledger::parse_token(k)] = v.get<double>();
    }
  }
  if (doc.contains("true_betas")) {
    const json& b = doc["true_betas"];
    reject_unknown(b, "true_betas", {"post", "near", "post_near", "multi", "post_multi", "post_near_multi"});
    read(b, "post", c.true_betas.post);
    read(b, "near", c.true_betas.near);
    read(b, "post_near", c.true_betas.post_near);
    read(b, "multi", c.true_betas.multi);
    read(b, "post_multi", c.true_betas.post_multi);
    read(b, "post_near_multi", c.true_betas.post_near_multi);
  }
  if (doc.contains("gamma")) {
    const json& g = doc["gamma"];
    reject_unknown(g, "gamma", {"log_lot_size", "premium", "log_btc", "paid_sand", "paid_weth"});
    read(g, "log_lot_size", c.gamma.log_lot_size);
    read(g, "premium", c.gamma.premium);
    read(g, "log_btc", c.gamma.log_btc);
    read(g, "paid_sand", c.gamma.paid_sand);
    read(g, "paid_weth", c.gamma.paid_weth);
  }
  if (doc.contains("fe_scales")) {
    const json& f = doc["fe_scales"];
    reject_unknown(f, "fe_scales", {"day", "mint_wave"});
    read(f, "day", c.fe_scales.day);
    read(f, "mint_wave", c.fe_scales.mint_wave);
  }
  for (auto [key, side] : {std::pair{"seed_side", &c.seed_side}, std::pair{"wave_side", &c.wave_side}}) {
    if (!doc.contains(key)) continue;
    const json& s = doc[key];
    reject_unknown(s, key, {"min", "max"});
    read(s, "min", side->min);
    read(s, "max", side->max);
  }
  if (doc.contains("start_date")) {
    if (!doc["start_date"].is_string()) throw ConfigError("start_date must be a YYYY-MM-DD string");
    try {
      c.start_date = parse_date(doc["start_date"].get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(std::string("start_date: ") + e.what());
    }
  }
  c.validate();
  return c;
}

DGPConfig DGPConfig::load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json DGPConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["map_size"] = map_size;
  j["n_groups"] = n_groups;
  json wpg = json::object();
  for (const auto& [k, w] : waves_per_group) wpg[std::to_string(k)] = w;
  j["waves_per_group"] = wpg;
  j["min_multi_groups"] = min_multi_groups;
  j["min_single_groups"] = min_single_groups;
  j["transactions_per_group"] = transactions_per_group;
  j["treatment"] = treatment_name(treatment);
  j["true_betas"] = {{"post", true_betas.post},
                     {"near", true_betas.near},
                     {"post_near", true_betas.post_near},
                     {"multi", true_betas.multi},
                     {"post_multi", true_betas.post_multi},
                     {"post_near_multi", true_betas.post_near_multi}};
  j["gamma"] = {{"log_lot_size", gamma.log_lot_size},
                {"premium", gamma.premium},
                {"log_btc", gamma.log_btc},
                {"paid_sand", gamma.paid_sand},
                {"paid_weth", gamma.paid_weth}};
  j["fe_scales"] = {{"day", fe_scales.day}, {"mint_wave", fe_scales.mint_wave}};
  j["noise_sigma"] = noise_sigma;
  j["intercept"] = intercept;
  j["total_log_drift"] = total_log_drift;
  json mix = json::object();
  for (const auto& [t, p] : token_mix) mix[std::string(ledger::token_name(t))] = p;
  j["token_mix"] = mix;
  j["premium_rate"] = premium_rate;
  json law = json::object();
  for (const auto& [k, p] : lot_size_law) law[std::to_string(k) + "x" + std::to_string(k)] = p;
  j["lot_size_law"] = law;
  j["start_date"] = format_date(start_date);
  j["window_days"] = window_days;
  j["min_gap_days"] = min_gap_days;
  j["max_gap_days"] = max_gap_days;
  j["min_sale_lag"] = min_sale_lag;
  j["max_sale_lag"] = max_sale_lag;
  j["seed_groups"] = seed_groups;
  j["seed_side"] = {{"min", seed_side.min}, {"max", seed_side.max}};
  j["wave_side"] = {{"min", wave_side.min}, {"max", wave_side.max}};
  return j;
}

// ---- market ----------------------------------------------------------------

ledger::MapMetadata SyntheticMarket::map() const {
  return ledger::MapMetadata::from_waves(waves, truth.map_size);
}

std::string SyntheticMarket::transactions_csv() const { return ledger::format_transactions_csv(rows); }

SyntheticMarket generate_market(const DGPConfig& config) {
  config.validate();
  SyntheticMarket m;
  m.truth = config;
  const int total_groups = config.seed_groups + config.n_groups;

  // Geometry and calendar.
  auto geo = stream(config.seed, kGeometry);
  const std::vector<int> wave_counts = draw_wave_counts(config, geo);
  std::uniform_int_distribution<int> gap(config.min_gap_days, config.max_gap_days);
  std::uniform_int_distribution<int> lag(config.min_sale_lag, config.max_sale_lag);
  Occupancy occ(config.map_size);
  Date announce = config.start_date;
  int wave_id = 0;
  for (int g = 1; g <= total_groups; ++g) {
    if (g > 1) announce += days{gap(geo)};
    const bool seed = g <= config.seed_groups;
    const int n_waves = seed ? 1 : wave_counts[static_cast<std::size_t>(g - config.seed_groups - 1)];
    for (int k = 1; k <= n_waves; ++k) {
      ++wave_id;
      const grid::Rect r = place_rect(occ, config.map_size, seed ? config.seed_side : config.wave_side, geo,
                                      "wave " + std::to_string(k) + " of group " + std::to_string(g));
      grid::Wave w{wave_id,
                   g,
                   seed ? "Seed Land " + std::to_string(g)
                        : "Sale " + std::to_string(g - config.seed_groups) +
                              (n_waves > 1 ? " Wave " + std::to_string(k) : ""),
                   announce,
                   announce + days{lag(geo)},
                   grid::Region::from_rects({r}, config.map_size),
                   std::nullopt};
      w.land_offered = w.region.size();
      m.waves.push_back(std::move(w));
    }
  }
  m.groups = grid::group_waves(m.waves);

  // Trades: location, timing and attributes.
  auto trades = stream(config.seed, kTrades);
  std::uniform_int_distribution<int> offset(-config.window_days, config.window_days);
  std::uniform_int_distribution<int> second_of_day(0, 86399);
  std::bernoulli_distribution premium(config.premium_rate);
  std::vector<Lot> lots;
  for (std::size_t gi = static_cast<std::size_t>(config.seed_groups); gi < m.groups.size(); ++gi) {
    const grid::AnnouncementGroup& group = m.groups[gi];
    const Date cutoff = group.announce_date - days{config.window_days};
    std::vector<const grid::Wave*> released;
    for (const grid::Wave& w : m.waves)
      if (w.sale_date < cutoff) released.push_back(&w);

    const std::size_t first = lots.size();
    for (int t = 0; t < config.transactions_per_group; ++t) {
      Lot lot;
      lot.group_index = static_cast<int>(gi);
      lot.event_day = offset(trades);
      lot.day = group.announce_date + days{lot.event_day};
      lot.timestamp = Timestamp{lot.day} + seconds{second_of_day(trades)};
      const int edge = draw_key(config.lot_size_law, trades);
      std::vector<double> weights;
      for (const grid::Wave* w : released) {
        const grid::Rect& r = w->region.rects().front();
        const bool fits = r.x1 - r.x0 + 1 >= edge && r.y1 - r.y0 + 1 >= edge;
        weights.push_back(fits ? static_cast<double>(r.area()) : 0.0);
      }
      std::discrete_distribution<std::size_t> pick_wave(weights.begin(), weights.end());
      const grid::Wave& home = *released[pick_wave(trades)];
      const grid::Rect& r = home.region.rects().front();
      std::uniform_int_distribution<int> x0(r.x0, r.x1 - edge + 1), y0(r.y0, r.y1 - edge + 1);
      const int bx = x0(trades), by = y0(trades);
      for (int dy = 0; dy < edge; ++dy)
        for (int dx = 0; dx < edge; ++dx) lot.parcels.push_back({bx + dx, by + dy});
      lot.mint_wave = home.wave_id;
      lot.premium = premium(trades);
      lot.token = draw_key(config.token_mix, trades);
      lot.distance = grid::distance_to_announcement(lot.parcels, group);
      lots.push_back(std::move(lot));
    }
    std::vector<double> distances;
    for (std::size_t i = first; i < lots.size(); ++i) distances.push_back(lots[i].distance);
    const std::vector<bool> near = grid::near_flags(distances);
    for (std::size_t i = first; i < lots.size(); ++i) lots[i].near = near[i - first];
  }

  // Exchange rates over the whole calendar.
  auto fx = stream(config.seed, kRates);
  std::normal_distribution<double> z(0.0, 1.0);
  const Date first_day = config.start_date - days{config.window_days};
  const Date last_day = m.groups.back().announce_date + days{config.window_days + config.max_sale_lag};
  double log_eth = std::log(730.0), log_sand = std::log(0.45), log_btc = std::log(29000.0);
  std::map<Date, double> btc_by_day;
  for (Date d = first_day; d <= last_day; d += days{1}) {
    m.rates.set_rate(ledger::Token::eth, d, std::exp(log_eth));
    m.rates.set_rate(ledger::Token::weth, d, std::exp(log_eth));
    m.rates.set_rate(ledger::Token::sand, d, std::exp(log_sand));
    m.rates.set_btc(d, std::exp(log_btc));
    btc_by_day[d] = std::exp(log_btc);
    log_eth += 0.045 * z(fx);
    log_sand += 0.06 * z(fx);
    log_btc += 0.035 * z(fx);
  }

  // Fixed effects: one draw per calendar day and per wave, in order.
  auto fx_effects = stream(config.seed, kEffects);
  std::map<Date, double> day_fe;
  for (Date d = first_day; d <= last_day; d += days{1}) day_fe[d] = config.fe_scales.day * z(fx_effects);
  std::map<int, double> wave_fe;
  for (const grid::Wave& w : m.waves) wave_fe[w.wave_id] = config.fe_scales.mint_wave * z(fx_effects);

  int week_lo = 0, week_hi = 0;
  if (!lots.empty()) {
    auto [lo, hi] = std::minmax_element(lots.begin(), lots.end(), [](const Lot& a, const Lot& b) { return a.day < b.day; });
    week_lo = week_index(lo->day);
    week_hi = week_index(hi->day);
  }

  std::stable_sort(lots.begin(), lots.end(), [](const Lot& a, const Lot& b) { return a.timestamp < b.timestamp; });

  auto noise = stream(config.seed, kNoise);
  const Betas& b = config.true_betas;
  const Gamma& gm = config.gamma;
  const std::size_t width = std::max<std::size_t>(6, std::to_string(lots.size()).size());
  for (std::size_t i = 0; i < lots.size(); ++i) {
    const Lot& lot = lots[i];
    const grid::AnnouncementGroup& group = m.groups[static_cast<std::size_t>(lot.group_index)];
    const double post = lot.event_day >= 0 ? 1.0 : 0.0;
    const double multi = group.multi() ? 1.0 : 0.0;
    const double treat = config.treatment == econ::Treatment::discrete_near ? (lot.near ? 1.0 : 0.0)
                                                                             : std::log(lot.distance);
    const double drift = week_hi > week_lo
                             ? config.total_log_drift * (week_index(lot.day) - week_lo) / double(week_hi - week_lo)
                             : 0.0;
    const double log_usd =
        config.intercept + b.post * post + b.near * treat + b.post_near * post * treat + b.multi * multi +
        b.post_multi * post * multi + b.post_near_multi * post * treat * multi +
        gm.log_lot_size * std::log(double(lot.parcels.size())) + gm.premium * (lot.premium ? 1.0 : 0.0) +
        gm.log_btc * std::log(btc_by_day.at(lot.day)) +
        gm.paid_sand * (lot.token == ledger::Token::sand ? 1.0 : 0.0) +
        gm.paid_weth * (lot.token == ledger::Token::weth ? 1.0 : 0.0) + day_fe.at(lot.day) +
        wave_fe.at(lot.mint_wave) + drift + config.noise_sigma * z(noise);
    const double usd = std::exp(log_usd);

    std::string id = std::to_string(i + 1);
    id = "syn-" + std::string(width - id.size(), '0') + id;

    ledger::RawTransaction row;
    row.tx_id = id;
    row.timestamp = lot.timestamp;
    for (grid::Coord c : lot.parcels) row.nft_ids.push_back(ledger::MapMetadata::nft_id_for(c, config.map_size));
    row.premium = lot.premium;
    row.token = std::string(ledger::token_name(lot.token));
    row.price_token = usd / *m.rates.rate(lot.token, lot.day);
    row.seller = random_address(noise);
    row.buyer = random_address(noise);
    m.rows.push_back(row);

    ledger::Transaction tx;
    tx.tx_id = id;
    tx.timestamp = lot.timestamp;
    tx.parcels = lot.parcels;
    tx.mint_waves.assign(lot.parcels.size(), lot.mint_wave);
    tx.premium = lot.premium;
    tx.token = lot.token;
    tx.price_token = row.price_token;
    tx.price_usd = usd;
    m.transactions.push_back(std::move(tx));

    m.planted.push_back({id, group.group_id, lot.distance, lot.near, post > 0.0, log_usd});
  }
  return m;
}

void write_market(const SyntheticMarket& market, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  io::write_file_atomic(out_dir / "waves.json", grid::waves_to_json(market.waves).dump(2) + "\n");
  io::write_file_atomic(out_dir / "transactions.csv", market.transactions_csv());
  io::write_file_atomic(out_dir / "rates.csv", market.rates.to_csv());
  io::write_file_atomic(out_dir / "truth.json", market.truth.to_json().dump(2) + "\n");
}

// ---- recovery --------------------------------------------------------------

const RecoveryRow& RecoveryReport::at(const std::string& parameter) const {
  for (const RecoveryRow& r : rows)
    if (r.parameter == parameter) return r;
  throw InvalidInput("no recovery row for " + parameter);
}

std::uint64_t replication_seed(std::uint64_t master, int r) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(r), 0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

econ::ModelSpec default_recovery_spec(const DGPConfig& config) {
  econ::ModelSpec spec;
  spec.treatment = config.treatment;
  spec.include_multi_interactions = config.has_multi_effects();
  spec.controls = {econ::Control::log_lot_size, econ::Control::premium, econ::Control::paid_sand,
                   econ::Control::paid_weth};
  spec.fe_dimensions = {econ::FeDimension::day, econ::FeDimension::mint_wave};
  return spec;
}

std::optional<double> planted_value(const DGPConfig& config, const std::string& term) {
  const Betas& b = config.true_betas;
  const std::string t = config.treatment == econ::Treatment::discrete_near ? "near" : "log_distance";
  const std::map<std::string, double> table{
      {"post", b.post},
      {t, b.near},
      {"post_x_" + t, b.post_near},
      {"multi", b.multi},
      {"post_x_multi", b.post_multi},
      {t + "_x_multi", 0.0},
      {"post_x_" + t + "_x_multi", b.post_near_multi},
      {"log_lot_size", config.gamma.log_lot_size},
      {"premium", config.gamma.premium},
      {"log_btc", config.gamma.log_btc},
      {"paid_sand", config.gamma.paid_sand},
      {"paid_weth", config.gamma.paid_weth},
  };
  auto it = table.find(term);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

RecoveryReport recovery_report(const DGPConfig& config, const RecoveryOptions& options) {
  if (options.replications < 1) throw ConfigError("recovery needs at least one replication");
  const econ::ModelSpec spec = options.spec.value_or(default_recovery_spec(config));
  spec.validate();

  struct Acc {
    std::vector<double> estimates;
    std::vector<double> std_errors;
    int covered = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;

  RecoveryReport report;
  report.replications = options.replications;
  for (int r = 0; r < options.replications; ++r) {
    DGPConfig c = config;
    c.seed = options.replications == 1 ? config.seed : replication_seed(config.seed, r);
    try {
      const SyntheticMarket m = generate_market(c);
      const ledger::Panel panel =
          ledger::prepare_panel(m.transactions_csv(), m.map(), m.groups, m.rates, options.panel);
      const econ::FitResult fit = spec.include_multi_interactions ? econ::estimate_triple_diff(panel.samples, spec)
                                                                   : econ::estimate_did(panel.samples, spec);
      for (const econ::Coefficient& coef : fit.coefficients) {
        const auto truth = planted_value(config, coef.term);
        if (!truth) continue;
        if (!acc.count(coef.term)) order.push_back(coef.term);
        Acc& a = acc[coef.term];
        a.estimates.push_back(coef.estimate);
        a.std_errors.push_back(coef.std_error);
        if (std::abs(coef.estimate - *truth) <= options.ci_z * coef.std_error) ++a.covered;
      }
    } catch (const Error& e) {
      report.failures.push_back({r, c.seed, e.what()});
    }
  }
  for (const std::string& term : order) {
    const Acc& a = acc[term];
    RecoveryRow row;
    row.parameter = term;
    row.truth = *planted_value(config, term);
    row.n = static_cast<int>(a.estimates.size());
    row.mean_estimate = stats::mean(a.estimates);
    row.empirical_sd = stats::sample_sd(a.estimates);
    row.mean_std_error = stats::mean(a.std_errors);
    row.coverage = double(a.covered) / double(row.n);
    report.rows.push_back(row);
  }
  return report;
}

std::string format_recovery_csv(const RecoveryReport& report) {
  std::ostringstream out;
  out << "# replications: " << report.replications << "\n";
  out << "# failures: " << report.failures.size() << "\n";
  for (const RecoveryFailure& f : report.failures)
    out << "# failure " << f.replication << " (seed " << f.seed << "): " << f.message << "\n";
  out << "parameter,truth,mean_estimate,bias,empirical_sd,mean_std_error,coverage,n\n";
  for (const RecoveryRow& r : report.rows)
    out << r.parameter << ',' << io::format_double(r.truth) << ',' << io::format_double(r.mean_estimate) << ','
        << io::format_double(r.mean_estimate - r.truth) << ',' << io::format_double(r.empirical_sd) << ','
        << io::format_double(r.mean_std_error) << ',' << io::format_double(r.coverage) << ',' << r.n << "\n";
  return out.str();
}

}  // namespace gridhedonic::synth
