// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gridhedonic/cli.hpp"
#include "gridhedonic/econ.hpp"
#include "gridhedonic/errors.hpp"
#include "gridhedonic/grid.hpp"
#include "gridhedonic/io.hpp"
#include "gridhedonic/ledger.hpp"
#include "gridhedonic/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gridhedonic;
using Clock = std::chrono::steady_clock;
using std::chrono::days;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Coefficient of `term` against the columns of the design.
double column_estimate(const econ::Design& d, const Eigen::VectorXd& ref, const std::string& term) {
  const auto j = std::find(d.columns.begin(), d.columns.end(), term) - d.columns.begin();
  return ref(j);
}

Outcome fwl_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> size(30, 200), waves(2, 6), span(3, 15);
  const std::vector<std::vector<econ::FeDimension>> dims{
      {econ::FeDimension::day}, {econ::FeDimension::mint_wave}, {econ::FeDimension::week, econ::FeDimension::mint_wave},
      {econ::FeDimension::day, econ::FeDimension::mint_wave}};
  double worst = 0.0;
  int compared = 0;
  for (int k = 0; k < 25; ++k) {
    const auto samples = fixtures::random_samples(rng, static_cast<std::size_t>(size(rng)), span(rng), waves(rng));
    econ::ModelSpec spec;
    spec.controls = {econ::Control::log_lot_size, econ::Control::premium, econ::Control::paid_sand,
                     econ::Control::paid_weth};
    spec.fe_dimensions = dims[static_cast<std::size_t>(k) % dims.size()];
    const econ::FitResult fit = econ::fit_model(samples, spec);
    const econ::Design d = econ::build_design(samples, spec);
    std::vector<std::vector<int>> codes;
    for (const auto& f : d.fe) codes.push_back(f.codes);
    const Eigen::VectorXd ref = oracle::dummy_ols(d.y, d.X, codes);
    for (const auto& c : fit.coefficients) {
      worst = std::max(worst, std::abs(c.estimate - column_estimate(d, ref, c.term)));
      ++compared;
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-6 && elapsed < 5.0,
          fmt("max |absorbed - dummy| = %.2e over %d slopes in 25 fixtures, %.2f s", worst, compared, elapsed)};
}

Outcome saturated_did() {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> reps(1, 5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    double m[2][2];
    std::vector<ledger::EventSample> samples;
    for (int near = 0; near < 2; ++near)
      for (int post = 0; post < 2; ++post) {
        m[near][post] = u(rng);
        // Symmetric deviations keep the cell mean exact.
        const int n = reps(rng);
        for (int i = 0; i < n; ++i)
          for (double sign : {-1.0, 1.0}) {
            ledger::EventSample s;
            s.near = near;
            s.post = post;
            s.log_price = m[near][post] + sign * 0.1 * (i + 1);
            samples.push_back(s);
          }
      }
    const double closed = (m[1][1] - m[1][0]) - (m[0][1] - m[0][0]);
    const double est = econ::estimate_did(samples, econ::ModelSpec{}).at("post_x_near").estimate;
    worst = std::max(worst, std::abs(est - closed));
  }
  return {worst <= 1e-10, fmt("max |beta3 - DiD of cell means| = %.2e over 100 draws", worst)};
}

struct Recovery {
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  const synth::SyntheticMarket* market = nullptr;
};

// generate -> CSV -> ingest -> panel -> estimate.
econ::FitResult pipeline_fit(const synth::SyntheticMarket& m, bool triple) {
  ledger::PanelOptions opts;
  opts.groups = std::nullopt;
  const ledger::Panel panel = ledger::prepare_panel(m.transactions_csv(), m.map(), m.groups, m.rates, opts);
  const econ::ModelSpec spec = synth::default_recovery_spec(m.truth);
  return triple ? econ::estimate_triple_diff(panel.samples, spec) : econ::estimate_did(panel.samples, spec);
}

Outcome planted(const synth::DGPConfig& config, const std::string& term, double truth, bool triple,
                double budget, const std::string& extra = "") {
  const auto t0 = Clock::now();
  const synth::SyntheticMarket m = synth::generate_market(config);
  const econ::FitResult fit = pipeline_fit(m, triple);
  const econ::Coefficient& c = fit.at(term);
  const double elapsed = seconds_since(t0);
  const double z = (c.estimate - truth) / c.std_error;
  return {std::abs(z) <= 3.0 && elapsed < budget && fit.n_obs == 10000,
          fmt("%s = %.4f (SE %.4f) vs planted %.3f, %.2f SEs, n = %zu, %.2f s%s", term.c_str(), c.estimate,
              c.std_error, truth, z, fit.n_obs, elapsed, extra.c_str())};
}

Outcome discrete_recovery() {
  synth::DGPConfig c;
  c.seed = 84;
  c.true_betas.post_near_multi = 0.0;  // the DiD model is then correctly specified
  return planted(c, "post_x_near", 0.084, false, 10.0);
}

Outcome continuous_recovery() {
  synth::DGPConfig c = synth::DGPConfig::continuous();
  c.seed = 34;
  return planted(c, "post_x_log_distance", -0.034, false, 10.0);
}

Outcome triple_recovery() {
  synth::DGPConfig c;
  c.seed = 173;
  const synth::SyntheticMarket m = synth::generate_market(c);
  int multi = 0, single = 0;
  for (const auto& g : m.groups)
    if (g.group_id > c.seed_groups) (g.multi() ? multi : single)++;
  Outcome o = planted(c, "post_x_near_x_multi", -0.173, true, 10.0,
                      fmt(", %d multi / %d single groups", multi, single));
  o.pass = o.pass && multi >= 2 && single >= 2;
  return o;
}

Outcome coverage() {
  const auto t0 = Clock::now();
  synth::DGPConfig c;
  c.seed = 6;
  synth::RecoveryOptions o;
  o.replications = 200;
  const synth::RecoveryReport r = synth::recovery_report(c, o);
  const synth::RecoveryRow& row = r.at("post_x_near");
  const double elapsed = seconds_since(t0);
  const double bias = row.mean_estimate - row.truth;
  return {r.failures.empty() && row.n == 200 && row.coverage >= 0.90 && row.coverage <= 0.99 && elapsed < 300.0,
          fmt("coverage %.3f over %d replications (%zu failed), bias %.4f vs empirical SD %.4f, %.1f s",
              row.coverage, row.n, r.failures.size(), bias, row.empirical_sd, elapsed)};
}

Outcome index_properties() {
  std::vector<ledger::EventSample> flat;
  const Date start = parse_date("2021-01-04");
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> lot(0, 1);
  for (int d = 0; d < 350; d += 2)
    for (int k = 0; k < 3; ++k) {
      ledger::EventSample s;
      s.day = start + days{d};
      s.week = week_index(s.day);
      s.lot_size = lot(rng) ? 9 : 1;
      s.log_lot_size = std::log(double(s.lot_size));
      s.premium = k == 0;
      s.log_price = std::log(2500.0);
      flat.push_back(s);
    }
  econ::IndexOptions bare;
  bare.controls = {};
  const econ::IndexSeries series = econ::hedonic_index(flat, bare);
  bool exact = true;
  for (const auto& p : series.points) exact = exact && p.value && *p.value == 1.0;
  double with_controls = 0.0;
  for (const auto& p : econ::hedonic_index(flat).points)
    if (p.value) with_controls = std::max(with_controls, std::abs(*p.value - 1.0));

  synth::DGPConfig c;
  c.seed = 83;
  c.total_log_drift = std::log(83.0);
  c.gamma.log_btc = 0.0;  // drift is then the only common time component
  const synth::SyntheticMarket m = synth::generate_market(c);
  ledger::PanelOptions opts;
  opts.groups = std::nullopt;
  const ledger::Panel panel = ledger::prepare_panel(m.transactions_csv(), m.map(), m.groups, m.rates, opts);
  const econ::IndexSeries drift = econ::hedonic_index(panel.samples);
  double last = 0.0;
  for (const auto& p : drift.points)
    if (p.value) last = *p.value;
  const double rel = std::abs(last / 83.0 - 1.0);
  return {exact && rel < 0.05,
          fmt("flat input %s over %zu weeks (max |index - 1| %.1e with lot and premium controls); "
              "planted ln(83) drift gives final index %.2f (%.1f%% off)",
              exact ? "exactly 1" : "NOT exactly 1", series.points.size(), with_controls, last, 100.0 * rel)};
}

Outcome geometry() {
  std::mt19937 rng(408);
  int distance_mismatch = 0, near_mismatch = 0, checks = 0;
  for (int k = 0; k < 1000; ++k) {
    const int size = std::uniform_int_distribution<int>(10, 120)(rng);
    std::uniform_int_distribution<int> coord(0, size - 1);
    std::set<grid::Coord> cells;
    const int rects = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int r = 0; r < rects; ++r) {
      const int x0 = coord(rng), y0 = coord(rng);
      const int x1 = std::min(size - 1, x0 + std::uniform_int_distribution<int>(0, 12)(rng));
      const int y1 = std::min(size - 1, y0 + std::uniform_int_distribution<int>(0, 12)(rng));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) cells.insert({x, y});
    }
    for (int s = std::uniform_int_distribution<int>(0, 6)(rng); s > 0; --s) cells.insert({coord(rng), coord(rng)});
    const std::vector<grid::Coord> parcels(cells.begin(), cells.end());
    const grid::Region region(parcels, size);

    const int n_tx = std::uniform_int_distribution<int>(2, 25)(rng);
    std::vector<std::pair<std::string, double>> dist;
    for (int t = 0; t < n_tx; ++t) {
      std::vector<grid::Coord> bundle;
      for (int b = std::uniform_int_distribution<int>(1, 4)(rng); b > 0; --b) bundle.push_back({coord(rng), coord(rng)});
      long long best = -1;
      for (auto p : bundle)
        for (auto q : parcels) {
          const long long dx = p.x - q.x, dy = p.y - q.y;
          const long long d2 = dx * dx + dy * dy;
          if (best < 0 || d2 < best) best = d2;
        }
      const double brute = std::sqrt(static_cast<double>(best));
      const double got = grid::distance_to_region(bundle, region);
      distance_mismatch += got != brute;
      ++checks;
      dist.emplace_back("t" + std::to_string(t), brute);
    }
    std::vector<double> sorted;
    for (const auto& [id, d] : dist) sorted.push_back(d);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const auto near = grid::assign_near(dist);
    for (const auto& [id, d] : dist) near_mismatch += near.at(id) != (d < median);
  }
  return {distance_mismatch == 0 && near_mismatch == 0,
          fmt("1000 configurations, %d bundle distances: %d distance and %d near mismatches", checks,
              distance_mismatch, near_mismatch)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  return out;
}

Outcome determinism() {
  const fs::path root = fs::path(GRIDHEDONIC_TEST_TMP) / "acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const fs::path sim = root / name / "sim", est = root / name / "est";
    if (cli::cmd_simulate({}, sim, 20211028) != 0) return {false, "simulate failed"};
    cli::RunConfig run;
    run.transactions = sim / "transactions.csv";
    run.waves = sim / "waves.json";
    run.rates = sim / "rates.csv";
    run.out = est;
    run.meta_cut = econ::kMetaCut;
    std::ostringstream console;
    auto* saved = std::cout.rdbuf(console.rdbuf());
    const int code = cli::cmd_estimate(run);
    std::cout.rdbuf(saved);
    if (code != 0) return {false, "estimate failed"};
    runs.push_back(snapshot(root / name));
  }
  std::size_t bytes = 0;
  for (const auto& [f, text] : runs[0]) bytes += text.size();
  return {runs[0] == runs[1] && runs[0].size() >= 4 + 13,
          fmt("%zu files (%zu bytes) identical across two seeded runs", runs[0].size(), bytes)};
}

Outcome cleaning() {
  using ledger::RejectReason;
  const Date announce = parse_date("2021-01-26");
  std::vector<grid::Wave> waves{
      grid::Wave{1, 1, "Seed", parse_date("2020-01-10"), parse_date("2020-02-02"),
                 grid::Region::from_rects({{0, 0, 49, 49}}), std::nullopt},
      grid::Wave{16, 8, "Public Sale Wave 1", announce, parse_date("2021-02-11"),
                 grid::Region::from_rects({{100, 0, 109, 9}}), std::nullopt}};
  const auto map = ledger::MapMetadata::from_waves(waves);
  const auto groups = grid::group_waves(waves);
  ledger::RateTable rates;
  for (Date d = parse_date("2021-01-15"); d <= parse_date("2021-03-05"); d += days{1}) {
    if (d != parse_date("2021-01-22")) rates.set_rate(ledger::Token::eth, d, 1300.0);
    rates.set_rate(ledger::Token::weth, d, 1300.0);
    rates.set_rate(ledger::Token::sand, d, 0.08);
    rates.set_btc(d, 32000.0);
  }
  auto id = [](int x, int y) { return ledger::MapMetadata::nft_id_for({x, y}); };
  std::string bundle3;
  for (int y = 10; y <= 12; ++y)
    for (int x = 10; x <= 12; ++x) bundle3 += (bundle3.empty() ? "" : ";") + id(x, y);
  const std::string csv =
      "tx_id,timestamp_iso8601,nft_ids,lot_size,premium,token,price_token,seller,buyer\n"
      "a01,2021-01-20T10:00:00Z," + id(1, 1) + ",1,0,ETH,1.5,0xaa,0xbb\n"
      "a02,2021-01-21T10:00:00Z," + id(2, 1) + ",1,0,ETH,0,0xaa,0xbb\n"
      "a03,2021-01-21T11:00:00Z," + id(3, 1) + ",1,0,USDC,900,0xaa,0xbb\n"
      "a04,2021-01-21T12:00:00Z," + id(4, 1) + ",1,1,ETH,0.8,0x0000000000000000000000000000000000000000,0xbb\n"
      "a05,2021-01-23T09:30:00Z," + id(0, 0) + ";" + id(40, 40) + ",2,0,ETH,3.2,0xaa,0xbb\n"
      "a06,2021-01-22T08:00:00Z," + id(5, 1) + ",1,0,ETH,1.1,0xaa,0xbb\n"
      "a07,2021-01-27T16:45:00+02:00," + id(2, 2) + ",1,0,SAND,12000,0xcc,0xdd\n"
      "a08,2021-01-28T00:00:00Z," + bundle3 + ",9,0,wETH,9.75,0xcc,0xdd\n"
      "a09,2021-01-29T23:59:59Z," + id(3, 3) + ",1,1,ETH,2.25,0xcc,0xdd\n"
      "a10,2021-01-25T07:00:00Z," + id(49, 49) + ",1,0,ETH,1.4,0xee,0xff\n"
      "a11,2021-03-01T12:00:00Z," + id(6, 6) + ",1,0,ETH,1.2,0xee,0xff\n"
      "a12,2021-01-30T18:00:00Z," + id(5, 5) + ",1,0,WETH,1.3,0xee,0xff\n";
  const ledger::Panel panel = ledger::prepare_panel(csv, map, groups, rates);

  const std::set<std::string> expected_kept{"a01", "a07", "a08", "a09", "a10", "a12"};
  const std::set<std::pair<std::string, RejectReason>> expected_log{
      {"a02", RejectReason::zero_payment},     {"a03", RejectReason::unsupported_token},
      {"a04", RejectReason::primary_sale},     {"a05", RejectReason::scattered_bundle},
      {"a06", RejectReason::missing_rate},     {"a11", RejectReason::outside_window}};
  std::set<std::string> kept;
  for (const auto& s : panel.samples) kept.insert(s.tx_id);
  std::set<std::pair<std::string, RejectReason>> log;
  for (const auto& r : panel.rejections) log.insert({r.tx_id, r.reason});
  for (const auto& r : panel.rejections)
    if (!expected_log.contains({r.tx_id, r.reason}))
      std::printf("  unexpected rejection %s: %s (%s)\n", r.tx_id.c_str(), std::string(ledger::reason_name(r.reason)).c_str(),
                  r.detail.c_str());
  for (const auto& k : kept)
    if (!expected_kept.contains(k)) std::printf("  unexpected retained %s\n", k.c_str());
  const bool ok = kept == expected_kept && log == expected_log &&
                  panel.rejections.size() == expected_log.size() &&
                  panel.samples.size() == expected_kept.size();
  return {ok, fmt("%zu retained (expected %zu), %zu rejections (expected %zu)%s", kept.size(), expected_kept.size(),
                  panel.rejections.size(), expected_log.size(), ok ? "; sets match" : "; sets differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fwl-equivalence", fwl_equivalence},
      {"saturated-2x2-oracle", saturated_did},
      {"recovery-discrete-did", discrete_recovery},
      {"recovery-continuous-did", continuous_recovery},
      {"recovery-triple-diff", triple_recovery},
      {"monte-carlo-coverage", coverage},
      {"index-properties", index_properties},
      {"geometry-oracles", geometry},
      {"pipeline-determinism", determinism},
      {"cleaning-conformance", cleaning},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
