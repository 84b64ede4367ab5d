#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridhedonic/calendar.hpp"
#include "gridhedonic/ledger.hpp"

namespace gridhedonic::econ {

using ledger::EventSample;

enum class Treatment { none, discrete_near, continuous_log_distance };
enum class FeDimension { day, week, mint_wave };
enum class SeType { classical, hc1 };
enum class Control { log_lot_size, premium, log_btc, paid_sand, paid_weth };

std::string_view to_string(Treatment t);
std::string_view to_string(FeDimension d);
std::string_view to_string(SeType s);
std::string_view to_string(Control c);

struct ModelSpec {
  std::string dependent = "log_price";
  Treatment treatment = Treatment::discrete_near;
  // Adds Multi, Post x Multi and Post x Treat x Multi.
  bool include_multi_interactions = false;
  // Also adds Treat x Multi, making the 2x2x2 design saturated.
  bool include_treat_multi = false;
  std::vector<Control> controls;
  std::vector<FeDimension> fe_dimensions;
  SeType se_type = SeType::classical;

  // Throws ConfigError: unknown dependent, log_btc together with day FE,
  // duplicated controls or FE dimensions.
  void validate() const;
};

struct FeLabels {
  std::string name;
  std::vector<int> codes;           // per sample, 0..levels.size()-1
  std::vector<std::string> levels;  // ascending
};

// Response, named regressors and FE labels. An intercept column leads the
// regressors exactly when no FE dimension is absorbed.
struct Design {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> columns;
  std::vector<FeLabels> fe;
};

Design build_design(std::span<const EventSample> samples, const ModelSpec& spec);

struct AbsorbOptions {
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

struct Absorbed {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  int sweeps = 0;
  double last_change = 0.0;
};

// Alternating projections: subtract within-group means dimension by
// dimension until a full sweep changes no cell by tolerance or more.
// Throws NumericalError at max_sweeps.
Absorbed absorb_fixed_effects(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                              std::span<const FeLabels> fe, const AbsorbOptions& options = {});

// Parameters soaked up by absorbed FE: the grand mean plus (levels - 1) per dimension.
std::size_t absorbed_parameter_count(std::span<const FeLabels> fe);

struct Coefficient {
  std::string term;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  std::string stars;
};

struct FitResult {
  std::vector<Coefficient> coefficients;
  std::size_t n_obs = 0;
  std::size_t k_total = 0;  // retained columns plus absorbed FE parameters
  double dof = 0.0;
  double sigma = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd vcov;
  // dimension -> level -> estimate. Levels of every dimension after the
  // first are measured relative to that dimension's first level.
  std::map<std::string, std::map<std::string, double>> fe_estimates;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> fe_dimensions;
  SeType se_type = SeType::classical;
  int absorb_sweeps = 0;

  const Coefficient* find(std::string_view term) const;
  const Coefficient& at(std::string_view term) const;  // throws InvalidInput
};

struct OlsOptions {
  SeType se_type = SeType::classical;
  // Extra parameters charged to the degrees of freedom (absorbed FE).
  std::size_t absorbed_params = 0;
  // Centered total sum of squares for R^2; defaults to that of `y`.
  std::optional<double> total_ss;
  // A column is dropped when its norm after projecting out the columns kept
  // before it falls below rank_tolerance times the largest column norm.
  double rank_tolerance = 1e-10;
};

// Least squares by Householder QR, scanning columns in order so that the
// later of two collinear columns is the one dropped.
FitResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  std::span<const std::string> columns, const OlsOptions& options = {});

// "***" p < 0.01, "**" p < 0.05, "*" p < 0.10.
std::string significance_stars(double p_value);
// Two-sided p-value: normal approximation when n_obs > 100, Student t otherwise.
double two_sided_p(double t_stat, std::size_t n_obs, double dof);

// build_design, absorb_fixed_effects, ols_fit and FE recovery.
FitResult fit_model(std::span<const EventSample> samples, const ModelSpec& spec);

// Difference-in-differences; the effect of interest is post_x_<treatment>.
FitResult estimate_did(std::span<const EventSample> samples, const ModelSpec& spec);
// Triple differences; forces the Multi interactions on.
FitResult estimate_triple_diff(std::span<const EventSample> samples, ModelSpec spec);

// Term names as they appear in FitResult.
std::string treatment_term(Treatment t);
std::string post_treatment_term(Treatment t);
std::string triple_term(Treatment t);

enum class Period { week, day };

struct IndexPoint {
  int period = 0;          // week index or days since epoch
  std::string label;       // first day of the period, YYYY-MM-DD
  std::size_t n = 0;
  std::optional<double> value;  // empty for a period without transactions
};

struct IndexSeries {
  std::vector<IndexPoint> points;
  FitResult fit;
};

struct IndexOptions {
  Period period = Period::week;
  std::vector<Control> controls{Control::log_lot_size, Control::premium};
};

// Hedonic regression with period FE only; value = exp(tau_t - tau_first).
IndexSeries hedonic_index(std::span<const EventSample> samples, const IndexOptions& options = {});

struct TrendRow {
  int event_day = 0;
  bool near = false;
  std::size_t n = 0;
  std::optional<double> mean_residual;
};

struct TrendOptions {
  int window_days = 7;
  std::vector<Control> controls{Control::log_lot_size, Control::premium, Control::log_btc};
};

// Residuals of log price on controls and weekly FE (no DiD terms), averaged
// by event day for the far and near arms. Rows run event_day -w..w, far
// before near within a day.
std::vector<TrendRow> residual_trend_series(std::span<const EventSample> samples,
                                            const TrendOptions& options = {});
std::vector<TrendRow> trend_from_residuals(std::span<const EventSample> samples,
                                           const Eigen::VectorXd& residuals, int window_days);

inline constexpr Date kMetaCut{std::chrono::year{2021} / std::chrono::October / 28};

// Splits by the sample's announcement date: before cut_date, or on/after it.
std::pair<std::vector<EventSample>, std::vector<EventSample>> partition_meta(
    std::span<const EventSample> samples, Date cut_date = kMetaCut);

// ---- reporting ----

std::string term_label(std::string_view term);

// CSV `term,estimate,std_error,t_stat,stars` preceded by `# key: value`
// metadata lines.
std::string format_coefficients_csv(const FitResult& fit);
nlohmann::json fit_to_json(const FitResult& fit);

struct NamedFit {
  std::string name;
  const FitResult* fit = nullptr;  // null when the specification failed
  std::string error;
};

// Aligned console table: estimates with stars, standard errors in
// parentheses beneath, three decimals.
std::string format_console_table(std::span<const NamedFit> fits);

std::string format_index_csv(const IndexSeries& index);
std::string format_trend_csv(std::span<const TrendRow> rows);

}  // namespace gridhedonic::econ
