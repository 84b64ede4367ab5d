#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gridhedonic/ledger.hpp"

namespace fixtures {

using gridhedonic::Date;
using gridhedonic::ledger::EventSample;

inline const Date kBase = gridhedonic::parse_date("2021-06-19");

inline std::vector<EventSample> random_samples(std::mt19937& rng, std::size_t n, int n_days = 9, int n_waves = 4) {
  std::uniform_int_distribution<int> day(-n_days / 2, n_days / 2), wave(1, n_waves), coin(0, 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<EventSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    EventSample& s = out[i];
    s.tx_id = "s" + std::to_string(i);
    s.group_id = 12;
    s.event_day = day(rng);
    s.day = kBase + std::chrono::days{s.event_day};
    s.week = gridhedonic::week_index(s.day);
    s.post = s.event_day >= 0;
    s.near = coin(rng);
    s.multi = coin(rng);
    s.distance = std::exp(3.0 + z(rng));
    s.log_distance = std::log(s.distance);
    s.lot_size = 1 + coin(rng) * 8;
    s.log_lot_size = std::log(double(s.lot_size));
    s.premium = coin(rng) && coin(rng);
    s.paid_sand = coin(rng) && coin(rng);
    s.paid_weth = !s.paid_sand && coin(rng) && coin(rng);
    s.log_btc = 10.5 + 0.05 * s.event_day + 0.01 * z(rng);
    s.mint_wave_id = wave(rng);
    s.log_price = 7.0 + 0.1 * s.post + 0.03 * s.near + 0.084 * s.post * s.near + 1.07 * s.log_lot_size +
                  0.4 * s.premium + 0.12 * s.paid_sand - 0.38 * s.paid_weth + 0.2 * s.mint_wave_id +
                  0.05 * s.event_day + 0.5 * z(rng);
  }
  return out;
}

}  // namespace fixtures
