#include <doctest.h>

#include <cmath>
#include <random>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace gridhedonic;
using namespace gridhedonic::econ;
using std::chrono::days;
using fixtures::kBase;
using fixtures::random_samples;

namespace {

ModelSpec full_spec(std::vector<FeDimension> fe) {
  ModelSpec spec;
  spec.controls = {Control::log_lot_size, Control::premium, Control::paid_sand, Control::paid_weth};
  spec.fe_dimensions = std::move(fe);
  return spec;
}

}  // namespace

TEST_CASE("ols exact fit") {
  Eigen::VectorXd x(5), y(5);
  x << 0, 1, 2, 3, 4;
  y = 2.0 * x.array() + 1.0;
  Eigen::MatrixXd X(5, 2);
  X.col(0).setOnes();
  X.col(1) = x;
  std::vector<std::string> names{"intercept", "x"};
  const FitResult fit = ols_fit(y, X, names);
  CHECK(fit.at("x").estimate == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.at("intercept").estimate == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.residuals.norm() < 1e-13);
  CHECK(fit.at("x").stars == "***");
}

TEST_CASE("ols matches the normal-equations oracle on a 200-sample fixture") {
  std::mt19937 rng(42);
  std::normal_distribution<double> z;
  const Eigen::Index n = 200, k = 5;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) X(i, j) = z(rng) * double(j);
    y(i) = 0.5 + X(i, 1) - 0.3 * X(i, 2) + 0.1 * X(i, 4) + z(rng) * (1.0 + std::abs(X(i, 1)));
  }
  std::vector<std::string> names{"intercept", "a", "b", "c", "d"};
  const auto ref = oracle::normal_equations(y, X);
  const FitResult classical = ols_fit(y, X, names);
  const FitResult robust = ols_fit(y, X, names, {SeType::hc1});
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& c = classical.coefficients[static_cast<std::size_t>(j)];
    CHECK(c.estimate == doctest::Approx(ref.beta(j)).epsilon(1e-8));
    CHECK(c.std_error == doctest::Approx(ref.se_classical(j)).epsilon(1e-8));
    CHECK(robust.coefficients[static_cast<std::size_t>(j)].std_error ==
          doctest::Approx(ref.se_hc1(j)).epsilon(1e-8));
  }
  CHECK(classical.adj_r2 == doctest::Approx(ref.adj_r2).epsilon(1e-8));
  CHECK(classical.dof == 195);
  CHECK(classical.se_type == SeType::classical);
  CHECK(robust.se_type == SeType::hc1);

  // Absorbed-parameter charge enters the dof and the HC1 scale.
  const FitResult charged = ols_fit(y, X, names, {SeType::hc1, 7});
  const auto ref7 = oracle::normal_equations(y, X, 7.0);
  CHECK(charged.dof == 188);
  CHECK(charged.at("a").std_error == doctest::Approx(ref7.se_hc1(1)).epsilon(1e-8));
  CHECK(charged.adj_r2 == doctest::Approx(ref7.adj_r2).epsilon(1e-8));
}

TEST_CASE("ols drops the later copy of a duplicated column") {
  std::mt19937 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(30, 3);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = 1;
    X(i, 1) = z(rng);
    X(i, 2) = X(i, 1);
    y(i) = X(i, 1) + z(rng);
  }
  std::vector<std::string> names{"intercept", "x", "x_copy"};
  const FitResult fit = ols_fit(y, X, names);
  REQUIRE(fit.dropped_columns.size() == 1);
  CHECK(fit.dropped_columns[0] == "x_copy");
  CHECK(fit.coefficients.size() == 2);
  CHECK(fit.find("x_copy") == nullptr);
  CHECK(fit.dof == 28);

  Eigen::MatrixXd small(2, 2);
  small << 1, 0, 1, 1;
  Eigen::VectorXd ys(2);
  ys << 1, 2;
  std::vector<std::string> two{"intercept", "x"};
  CHECK_THROWS_AS(ols_fit(ys, small, two), InsufficientData);
}

TEST_CASE("single-dimension absorption is exact group demeaning") {
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 10, 20, 30;
  Eigen::MatrixXd X(6, 1);
  X << 1, 1, 4, 0, 2, 4;
  FeLabels f{"g", {0, 0, 0, 1, 1, 1}, {"a", "b"}};
  const auto a = absorb_fixed_effects(y, X, std::span(&f, 1));
  Eigen::VectorXd ey(6), ex(6);
  ey << -1, 0, 1, -10, 0, 10;
  ex << -1, -1, 2, -2, 0, 2;
  CHECK((a.y - ey).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a.X.col(0) - ex).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(a.sweeps == 1);

  FeLabels one{"g", {0, 0, 0, 0, 0, 0}, {"all"}};
  const auto g = absorb_fixed_effects(y, X, std::span(&one, 1));
  CHECK(std::abs(g.y.sum()) < 1e-12);
  CHECK(g.y(0) == doctest::Approx(1 - y.mean()));

  FeLabels bad{"g", {0, 0, 0}, {"a"}};
  CHECK_THROWS_AS(absorb_fixed_effects(y, X, std::span(&bad, 1)), InvalidInput);
}

TEST_CASE("absorption reports non-convergence at the sweep cap") {
  std::mt19937 rng(3);
  auto samples = random_samples(rng, 60);
  const Design d = build_design(samples, full_spec({FeDimension::day, FeDimension::mint_wave}));
  CHECK_THROWS_AS(absorb_fixed_effects(d.y, d.X, d.fe, {1e-300, 3}), NumericalError);
}

TEST_CASE("two-dimension FE slopes equal explicit-dummy OLS on a 20-sample fixture") {
  std::mt19937 rng(20);
  auto samples = random_samples(rng, 20, 5, 3);
  ModelSpec spec = full_spec({FeDimension::day, FeDimension::mint_wave});
  spec.controls = {Control::log_lot_size};
  const FitResult fit = estimate_did(samples, spec);
  const Design d = build_design(samples, spec);
  const Eigen::VectorXd ref = oracle::dummy_ols(d.y, d.X, {d.fe[0].codes, d.fe[1].codes});
  for (const Coefficient& c : fit.coefficients) {
    const auto j = std::find(d.columns.begin(), d.columns.end(), c.term) - d.columns.begin();
    CHECK(c.estimate == doctest::Approx(ref(j)).epsilon(1e-6));
  }
  CHECK(std::find(fit.dropped_columns.begin(), fit.dropped_columns.end(), "post") != fit.dropped_columns.end());
}

TEST_CASE("Frisch-Waugh-Lovell on random fixtures with up to three FE dimensions") {
  std::mt19937 rng(99);
  const std::vector<std::vector<FeDimension>> dims{
      {FeDimension::mint_wave}, {FeDimension::week, FeDimension::mint_wave},
      {FeDimension::day, FeDimension::mint_wave}, {FeDimension::day, FeDimension::week, FeDimension::mint_wave}};
  for (int trial = 0; trial < 20; ++trial) {
    auto samples = random_samples(rng, 40 + 8 * trial, 15, 2 + trial % 5);
    ModelSpec spec = full_spec(dims[trial % dims.size()]);
    const FitResult fit = fit_model(samples, spec);
    const Design d = build_design(samples, spec);
    std::vector<std::vector<int>> codes;
    for (const auto& f : d.fe) codes.push_back(f.codes);
    const Eigen::VectorXd ref = oracle::dummy_ols(d.y, d.X, codes);
    for (const Coefficient& c : fit.coefficients) {
      const auto j = std::find(d.columns.begin(), d.columns.end(), c.term) - d.columns.begin();
      CHECK(std::abs(c.estimate - ref(j)) < 1e-6);
    }
    // FE recovery reproduces the fit: y - X b - sum FE = residual.
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double fitted = 0.0;
      for (const Coefficient& c : fit.coefficients) {
        const auto j = std::find(d.columns.begin(), d.columns.end(), c.term) - d.columns.begin();
        fitted += c.estimate * d.X(static_cast<Eigen::Index>(i), j);
      }
      for (const auto& f : d.fe)
        fitted += fit.fe_estimates.at(f.name).at(f.levels[static_cast<std::size_t>(f.codes[i])]);
      CHECK(std::abs(d.y(static_cast<Eigen::Index>(i)) - fitted - fit.residuals(static_cast<Eigen::Index>(i))) < 1e-7);
    }
  }
}

TEST_CASE("residuals are orthogonal to regressors and FE indicators") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto samples = random_samples(rng, 150);
    ModelSpec spec = full_spec(trial % 2 ? std::vector{FeDimension::week, FeDimension::mint_wave}
                                         : std::vector<FeDimension>{});
    spec.include_multi_interactions = true;
    if (spec.fe_dimensions.empty()) spec.controls.push_back(Control::log_btc);
    const FitResult fit = estimate_triple_diff(samples, spec);
    const Design d = build_design(samples, spec);
    const double scale = d.X.cwiseAbs().maxCoeff() * fit.residuals.cwiseAbs().maxCoeff() * double(samples.size());
    for (const Coefficient& c : fit.coefficients) {
      const auto j = std::find(d.columns.begin(), d.columns.end(), c.term) - d.columns.begin();
      CHECK(std::abs(d.X.col(j).dot(fit.residuals)) < 1e-8 * scale);
    }
    for (const auto& f : d.fe) {
      std::vector<double> sums(f.levels.size(), 0.0);
      for (std::size_t i = 0; i < samples.size(); ++i) sums[static_cast<std::size_t>(f.codes[i])] += fit.residuals(static_cast<Eigen::Index>(i));
      for (double s : sums) CHECK(std::abs(s) < 1e-8 * scale);
    }
  }
}

TEST_CASE("saturated 2x2 DiD equals the difference of cell means") {
  // Cell means: ctrl-pre 1.0, ctrl-post 1.2, treat-pre 1.1, treat-post 1.5.
  std::vector<EventSample> samples;
  const double means[2][2] = {{1.0, 1.2}, {1.1, 1.5}};
  for (int near = 0; near < 2; ++near)
    for (int post = 0; post < 2; ++post)
      for (double dev : {-0.3, 0.1, 0.2}) {
        EventSample s;
        s.near = near;
        s.post = post;
        s.day = kBase + days{post ? 1 : -1};
        s.log_price = means[near][post] + dev;
        samples.push_back(s);
      }
  ModelSpec spec;
  const FitResult fit = estimate_did(samples, spec);
  CHECK(std::abs(fit.at("post_x_near").estimate - 0.2) < 1e-12);
  CHECK(std::abs(fit.at("near").estimate - 0.1) < 1e-12);
  CHECK(std::abs(fit.at("post").estimate - 0.2) < 1e-12);

  // A constant shift in log prices leaves the DiD unchanged.
  for (auto& s : samples) s.log_price += std::log(37.0);
  CHECK(std::abs(estimate_did(samples, spec).at("post_x_near").estimate - 0.2) < 1e-12);

  // Relabelling the arms flips the sign of the arm and interaction terms.
  for (auto& s : samples) s.near = !s.near;
  const FitResult flipped = estimate_did(samples, spec);
  CHECK(std::abs(flipped.at("post_x_near").estimate + 0.2) < 1e-12);
  CHECK(std::abs(flipped.at("near").estimate + 0.1) < 1e-12);
}

TEST_CASE("saturated 2x2x2 triple difference equals the closed form of cell means") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    double m[2][2][2];
    std::vector<EventSample> samples;
    for (int multi = 0; multi < 2; ++multi)
      for (int near = 0; near < 2; ++near)
        for (int post = 0; post < 2; ++post) {
          m[multi][near][post] = u(rng);
          for (double dev : {-0.5, 0.5, 0.0}) {
            EventSample s;
            s.multi = multi;
            s.near = near;
            s.post = post;
            s.log_price = m[multi][near][post] + dev;
            samples.push_back(s);
          }
        }
    auto did = [&](int multi) {
      return (m[multi][1][1] - m[multi][1][0]) - (m[multi][0][1] - m[multi][0][0]);
    };
    ModelSpec spec;
    spec.include_treat_multi = true;
    const FitResult fit = estimate_triple_diff(samples, spec);
    CHECK(std::abs(fit.at("post_x_near_x_multi").estimate - (did(1) - did(0))) < 1e-10);
    CHECK(std::abs(fit.at("post_x_near").estimate - did(0)) < 1e-10);
  }
}

TEST_CASE("design columns follow the model specification") {
  std::mt19937 rng(4);
  auto samples = random_samples(rng, 50);
  ModelSpec did_spec = full_spec({FeDimension::day, FeDimension::mint_wave});
  const Design d2 = build_design(samples, did_spec);
  CHECK(d2.columns == std::vector<std::string>{"post", "near", "post_x_near", "log_lot_size", "premium",
                                               "paid_sand", "paid_weth"});
  CHECK(d2.fe.size() == 2);

  ModelSpec triple_spec = did_spec;
  triple_spec.treatment = Treatment::continuous_log_distance;
  triple_spec.include_multi_interactions = true;
  const Design d3 = build_design(samples, triple_spec);
  CHECK(d3.columns == std::vector<std::string>{"post", "log_distance", "post_x_log_distance", "multi",
                                               "post_x_multi", "post_x_log_distance_x_multi",
                                               "log_lot_size", "premium", "paid_sand", "paid_weth"});
  for (Eigen::Index i = 0; i < d3.X.rows(); ++i) {
    CHECK(d3.X(i, 2) == d3.X(i, 0) * d3.X(i, 1));
    CHECK(d3.X(i, 5) == d3.X(i, 0) * d3.X(i, 1) * d3.X(i, 3));
  }

  ModelSpec intercept_only;
  intercept_only.treatment = Treatment::none;
  const Design d1 = build_design(std::span(samples).first(1), intercept_only);
  CHECK(d1.X.rows() == 1);
  CHECK(d1.X.cols() == 1);
  CHECK(d1.X(0, 0) == 1.0);
  CHECK(d1.columns == std::vector<std::string>{"intercept"});

  ModelSpec bad = did_spec;
  bad.controls.push_back(Control::log_btc);
  CHECK_THROWS_AS(build_design(samples, bad), ConfigError);

  auto constant = samples;
  for (auto& s : constant) s.near = true;
  CHECK_THROWS_AS(build_design(constant, did_spec), DegenerateDesign);
}

TEST_CASE("degenerate DiD and triple-diff designs") {
  std::mt19937 rng(6);
  auto samples = random_samples(rng, 80);
  std::vector<EventSample> no_treated_post;
  for (const auto& s : samples)
    if (!(s.near && s.post)) no_treated_post.push_back(s);
  CHECK_THROWS_WITH_AS(estimate_did(no_treated_post, ModelSpec{}), "empty 2x2 cell treated/post", DegenerateDesign);

  auto single = samples;
  for (auto& s : single) s.multi = false;
  CHECK_THROWS_AS(estimate_triple_diff(single, ModelSpec{}), DegenerateDesign);

  ModelSpec none;
  none.treatment = Treatment::none;
  CHECK_THROWS_AS(estimate_did(samples, none), ConfigError);
}

TEST_CASE("significance stars and p-values") {
  CHECK(significance_stars(0.005) == "***");
  CHECK(significance_stars(0.02) == "**");
  CHECK(significance_stars(0.07) == "*");
  CHECK(significance_stars(0.2) == "");
  CHECK(two_sided_p(1.959963984540054, 1000, 990) == doctest::Approx(0.05).epsilon(1e-9));
  // t distribution with 10 dof: two-sided 5% critical value 2.228138851986.
  CHECK(two_sided_p(2.228138851986, 20, 10) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("hedonic index") {
  std::vector<EventSample> samples;
  for (int d = 0; d < 21; ++d)
    for (int k = 0; k < 3; ++k) {
      EventSample s;
      s.day = kBase + days{d};
      s.week = week_index(s.day);
      s.lot_size = 1 + 8 * (k == 2);
      s.log_lot_size = std::log(double(s.lot_size));
      s.premium = k == 1;
      s.log_price = 5.0;
      samples.push_back(s);
    }
  const IndexSeries flat = hedonic_index(samples);
  REQUIRE(flat.points.size() == 4);
  for (const auto& p : flat.points) CHECK(p.value.value() == 1.0);

  // Second-week prices e times the first, same covariates.
  std::vector<EventSample> two;
  for (const auto& s : samples)
    if (s.week <= samples.front().week + 1) two.push_back(s);
  for (auto& s : two)
    if (s.week > two.front().week) s.log_price += 1.0;
  IndexOptions no_controls;
  no_controls.controls.clear();
  const IndexSeries jump = hedonic_index(two, no_controls);
  REQUIRE(jump.points.size() == 2);
  CHECK(jump.points[0].value.value() == 1.0);
  CHECK(jump.points[1].value.value() == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

  // Multiplying every price by a constant leaves the index unchanged.
  std::mt19937 rng(12);
  std::normal_distribution<double> z;
  auto noisy = samples;
  for (auto& s : noisy) s.log_price += 0.1 * z(rng) + 0.3 * s.premium + 0.02 * (s.day - kBase).count();
  const IndexSeries a = hedonic_index(noisy);
  for (auto& s : noisy) s.log_price += std::log(123.0);
  const IndexSeries b = hedonic_index(noisy);
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(std::abs(*a.points[i].value - *b.points[i].value) < 1e-12 * *a.points[i].value);

  // A week without transactions is a gap, not an interpolated value.
  std::vector<EventSample> gap;
  for (const auto& s : noisy)
    if (s.week != noisy[8].week) gap.push_back(s);
  const IndexSeries g = hedonic_index(gap);
  REQUIRE(g.points.size() == a.points.size());
  CHECK(g.points[1].n == 0);
  CHECK_FALSE(g.points[1].value.has_value());
  CHECK(format_index_csv(g).find(g.points[1].label + ",\n") != std::string::npos);

  std::vector<EventSample> one_week(samples.begin(), samples.begin() + 3);
  CHECK_THROWS_AS(hedonic_index(one_week), InsufficientData);
}

TEST_CASE("residual trend series") {
  // Exact fit: log price is a function of week and lot size only.
  std::vector<EventSample> samples;
  for (int d = -7; d <= 7; ++d)
    for (int k = 0; k < 4; ++k) {
      EventSample s;
      s.event_day = d;
      s.day = kBase + days{d};
      s.week = week_index(s.day);
      s.post = d >= 0;
      s.near = k % 2;
      s.lot_size = 1 + k;
      s.log_lot_size = std::log(double(s.lot_size));
      s.log_price = 3.0 + 0.5 * s.week + 1.1 * s.log_lot_size;
      samples.push_back(s);
    }
  TrendOptions opts;
  opts.controls = {Control::log_lot_size};
  const auto rows = residual_trend_series(samples, opts);
  REQUIRE(rows.size() == 30);
  CHECK(rows.front().event_day == -7);
  CHECK_FALSE(rows.front().near);
  CHECK(rows[1].near);
  CHECK(rows.back().event_day == 7);
  for (const auto& r : rows) {
    CHECK(r.n == 2);
    CHECK(std::abs(r.mean_residual.value()) < 1e-12);
  }

  // Hand-built residuals average directly.
  std::vector<EventSample> hand(5);
  hand[0].event_day = -1;
  hand[1].event_day = -1;
  hand[2].event_day = -1, hand[2].near = true;
  hand[3].event_day = 2, hand[3].near = true;
  hand[4].event_day = 2, hand[4].near = true;
  Eigen::VectorXd res(5);
  res << 1.0, 3.0, -2.0, 0.5, 1.5;
  const auto t = trend_from_residuals(hand, res, 2);
  REQUIRE(t.size() == 10);
  CHECK(t[2].event_day == -1);
  CHECK(*t[2].mean_residual == 2.0);
  CHECK(*t[3].mean_residual == -2.0);
  CHECK(t[8].event_day == 2);
  CHECK_FALSE(t[8].mean_residual.has_value());
  CHECK(*t[9].mean_residual == 1.0);
  CHECK(t[9].n == 2);
  const std::string csv = format_trend_csv(t);
  CHECK(csv.rfind("event_day,group,mean_residual,n\n-2,far,,0\n", 0) == 0);

  std::vector<EventSample> pre_only;
  for (const auto& s : samples)
    if (!s.post) pre_only.push_back(s);
  CHECK_THROWS_AS(residual_trend_series(pre_only, opts), DegenerateDesign);
}

TEST_CASE("partition around the meta cut") {
  auto make = [](const char* announce, int offset) {
    EventSample s;
    s.event_day = offset;
    s.day = parse_date(announce) + days{offset};
    return s;
  };
  std::vector<EventSample> samples{make("2021-09-09", 3), make("2021-11-03", -5), make("2021-10-28", 0),
                                   make("2021-09-09", -7)};
  auto [pre, post] = partition_meta(samples);
  CHECK(pre.size() == 2);
  CHECK(post.size() == 2);
  CHECK(pre[0].announce_date() == parse_date("2021-09-09"));
  CHECK(post[0].announce_date() == parse_date("2021-11-03"));

  auto [none, all] = partition_meta(samples, parse_date("2020-01-01"));
  CHECK(none.empty());
  CHECK(all.size() == samples.size());
}

TEST_CASE("coefficient exports") {
  std::mt19937 rng(31);
  auto samples = random_samples(rng, 120);
  const FitResult fit = estimate_did(samples, full_spec({FeDimension::day, FeDimension::mint_wave}));
  const std::string csv = format_coefficients_csv(fit);
  CHECK(csv.find("# n_obs: 120\n") != std::string::npos);
  CHECK(csv.find("# dropped_columns: post\n") != std::string::npos);
  CHECK(csv.find("# fe_dimensions: day;mint_wave\n") != std::string::npos);
  CHECK(csv.find("term,estimate,std_error,t_stat,stars\n") != std::string::npos);
  const auto j = fit_to_json(fit);
  CHECK(j["metadata"]["n_obs"] == 120);
  CHECK(j["metadata"]["se_type"] == "classical");
  CHECK(j["coefficients"][0]["term"] == "near");

  NamedFit named[] = {{"full", &fit, ""}, {"broken", nullptr, "empty 2x2 cell"}};
  const std::string table = format_console_table(named);
  CHECK(table.find("Post * Near") != std::string::npos);
  CHECK(table.find("Observations") != std::string::npos);
  CHECK(table.find("(1) full; dropped post\n") != std::string::npos);
  CHECK(table.find("(2) broken: empty 2x2 cell\n") != std::string::npos);
}
