#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gridhedonic/errors.hpp"
#include "gridhedonic/io.hpp"
#include "gridhedonic/ledger.hpp"
#include "gridhedonic/stats.hpp"

namespace gridhedonic::ledger {

std::pair<double, double> winsorize_bounds(std::span<const double> values, double lower_q,
                                           double upper_q) {
  if (values.empty()) throw InvalidInput("winsorize needs at least one value");
  if (!(lower_q >= 0.0 && lower_q <= upper_q && upper_q <= 1.0))
    throw InvalidInput("winsorize quantiles must satisfy 0 <= lower <= upper <= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {stats::quantile_sorted(sorted, lower_q), stats::quantile_sorted(sorted, upper_q)};
}

std::vector<double> winsorize(std::span<const double> values, double lower_q, double upper_q) {
  const auto [lo, hi] = winsorize_bounds(values, lower_q, upper_q);
  return clip(values, lo, hi);
}

std::vector<double> clip(std::span<const double> values, double lo, double hi) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return std::clamp(v, lo, hi); });
  return out;
}

void validate_windows(std::span<const grid::AnnouncementGroup> groups, int window_days) {
  if (window_days < 0) throw ConfigError("window_days must be non-negative");
  std::vector<const grid::AnnouncementGroup*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->announce_date < b->announce_date; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const int gap = days_between(order[i - 1]->announce_date, order[i]->announce_date);
    if (gap <= 2 * window_days)
      throw ConfigError("event windows of groups " + std::to_string(order[i - 1]->group_id) +
                        " and " + std::to_string(order[i]->group_id) + " overlap (" +
                        format_date(order[i - 1]->announce_date) + " and " +
                        format_date(order[i]->announce_date) + " with +/-" +
                        std::to_string(window_days) + " days)");
  }
}

Panel build_event_samples(std::span<const Transaction> transactions,
                          std::span<const grid::AnnouncementGroup> groups, const RateTable& rates,
                          const PanelOptions& options) {
  validate_windows(groups, options.window_days);
  Panel panel;

  struct Pending {
    EventSample sample;
    std::size_t group_index;
  };
  std::vector<Pending> pending;

  for (const Transaction& tx : transactions) {
    if (std::isnan(tx.price_usd))
      throw InvalidInput("transaction " + tx.tx_id + " has no USD price; convert it first");
    if (tx.parcels.empty() || tx.mint_waves.size() != tx.parcels.size())
      throw InvalidInput("transaction " + tx.tx_id + " has inconsistent parcel data");
    auto reject = [&](RejectReason r, std::string detail) {
      panel.rejections.push_back({tx.tx_id, r, std::move(detail)});
    };

    const Date day = utc_day(tx.timestamp);
    std::optional<std::size_t> match;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (std::abs(days_between(groups[g].announce_date, day)) <= options.window_days) {
        if (match)
          throw ConfigError("transaction " + tx.tx_id + " falls in the windows of groups " +
                            std::to_string(groups[*match].group_id) + " and " +
                            std::to_string(groups[g].group_id));
        match = g;
      }
    }
    if (!match) {
      reject(RejectReason::outside_window, "no announcement within " +
                                               std::to_string(options.window_days) + " days");
      continue;
    }
    const grid::AnnouncementGroup& group = groups[*match];
    if (options.groups && !options.groups->contains(group.group_id)) {
      reject(RejectReason::group_filtered, "group " + std::to_string(group.group_id));
      continue;
    }
    if (!grid::contiguity_check(tx.parcels, options.contiguity_threshold)) {
      reject(RejectReason::scattered_bundle, "bundle spans more than " +
                                                 std::to_string(options.contiguity_threshold) +
                                                 " parcels");
      continue;
    }
    const auto btc = rates.btc(day);
    if (!btc) {
      reject(RejectReason::missing_rate, "no BTC price for " + format_date(day));
      continue;
    }
    const grid::NearestHit hit = grid::nearest_in_announcement(tx.parcels, group);
    if (hit.distance == 0.0) {
      reject(RejectReason::zero_distance, "parcel lies inside the announced region");
      continue;
    }

    EventSample s;
    s.tx_id = tx.tx_id;
    s.group_id = group.group_id;
    s.distance = hit.distance;
    s.log_distance = std::log(hit.distance);
    s.post = tx.timestamp >= Timestamp{group.announce_date};
    s.multi = group.multi();
    s.lot_size = static_cast<int>(tx.lot_size());
    s.log_lot_size = std::log(static_cast<double>(tx.lot_size()));
    s.premium = tx.premium;
    s.paid_sand = tx.token == Token::sand;
    s.paid_weth = tx.token == Token::weth;
    s.log_btc = std::log(*btc);
    s.mint_wave_id = tx.mint_waves[hit.parcel_index];
    s.day = day;
    s.week = week_index(day);
    s.event_day = days_between(group.announce_date, day);
    s.price_usd = tx.price_usd;
    pending.push_back({std::move(s), *match});
  }

  if (pending.empty()) return panel;

  std::vector<double> prices;
  prices.reserve(pending.size());
  for (const auto& p : pending) prices.push_back(p.sample.price_usd);
  const std::vector<double> clipped = winsorize(prices, options.winsor_lower, options.winsor_upper);

  std::map<std::size_t, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    pending[i].sample.price_usd = clipped[i];
    pending[i].sample.log_price = std::log(clipped[i]);
    by_group[pending[i].group_index].push_back(i);
  }
  for (const auto& [g, members] : by_group) {
    std::vector<double> distances;
    for (std::size_t i : members) distances.push_back(pending[i].sample.distance);
    std::vector<bool> near;
    try {
      near = grid::near_flags(distances);
    } catch (const DegenerateGroup& e) {
      throw DegenerateGroup("group " + std::to_string(groups[g].group_id) + ": " + e.what());
    }
    for (std::size_t k = 0; k < members.size(); ++k) pending[members[k]].sample.near = near[k];
  }

  panel.samples.reserve(pending.size());
  for (auto& p : pending) panel.samples.push_back(std::move(p.sample));
  return panel;
}

std::string format_panel_csv(std::span<const EventSample> samples) {
  std::ostringstream out;
  out << "tx_id,group_id,log_price,distance,log_distance,near,post,multi,log_lot_size,premium,"
         "paid_sand,paid_weth,log_btc,mint_wave_id,day,week,event_day,price_usd,lot_size\n";
  for (const EventSample& s : samples) {
    out << s.tx_id << ',' << s.group_id << ',' << io::format_double(s.log_price) << ','
        << io::format_double(s.distance) << ',' << io::format_double(s.log_distance) << ','
        << s.near << ',' << s.post << ',' << s.multi << ',' << io::format_double(s.log_lot_size)
        << ',' << s.premium << ',' << s.paid_sand << ',' << s.paid_weth << ','
        << io::format_double(s.log_btc) << ',' << s.mint_wave_id << ',' << format_date(s.day)
        << ',' << s.week << ',' << s.event_day << ',' << io::format_double(s.price_usd) << ','
        << s.lot_size << '\n';
  }
  return out.str();
}

namespace {

SummaryRow summarize(std::string label, std::span<const EventSample* const> rows) {
  std::vector<double> price, distance;
  double lot = 0.0, premium = 0.0, sand = 0.0, weth = 0.0;
  for (const EventSample* s : rows) {
    price.push_back(s->price_usd);
    distance.push_back(s->distance);
    lot += s->lot_size;
    premium += s->premium;
    sand += s->paid_sand;
    weth += s->paid_weth;
  }
  const double n = static_cast<double>(rows.size());
  return {std::move(label),        rows.size(),           stats::mean(price),
          stats::sample_sd(price), stats::mean(distance), stats::median(distance),
          lot / n,                 premium / n,           sand / n,
          weth / n};
}

}  // namespace

std::vector<SummaryRow> summary_stats(std::span<const EventSample> samples) {
  if (samples.empty()) throw InvalidInput("summary of an empty panel");
  std::map<int, std::vector<const EventSample*>> by_group;
  std::vector<const EventSample*> all;
  for (const EventSample& s : samples) {
    by_group[s.group_id].push_back(&s);
    all.push_back(&s);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [g, members] : by_group) rows.push_back(summarize(std::to_string(g), members));
  rows.push_back(summarize("All", all));
  return rows;
}

std::string format_summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "group,obs,price_mean,price_sd,distance_mean,distance_median,lot_size,premium,sand,weth\n";
  for (const SummaryRow& r : rows) {
    out << r.label << ',' << r.n << ',' << io::format_fixed(r.price_mean, 2) << ','
        << io::format_fixed(r.price_sd, 2) << ',' << io::format_fixed(r.distance_mean, 2) << ','
        << io::format_fixed(r.distance_median, 2) << ',' << io::format_fixed(r.lot_size_mean, 2)
        << ',' << io::format_fixed(r.premium_share, 4) << ',' << io::format_fixed(r.sand_share, 4)
        << ',' << io::format_fixed(r.weth_share, 4) << '\n';
  }
  return out.str();
}

Panel prepare_panel(std::string_view transactions_csv, const MapMetadata& map,
                    std::span<const grid::AnnouncementGroup> groups, const RateTable& rates,
                    const PanelOptions& options) {
  IngestResult ingested = ingest_transactions(transactions_csv, map);
  IngestResult converted = convert_all(std::move(ingested.transactions), rates);
  Panel panel = build_event_samples(converted.transactions, groups, rates, options);

  std::vector<Rejection> log = std::move(ingested.rejections);
  log.insert(log.end(), converted.rejections.begin(), converted.rejections.end());
  log.insert(log.end(), panel.rejections.begin(), panel.rejections.end());
  panel.rejections = std::move(log);
  return panel;
}

}  // namespace gridhedonic::ledger
