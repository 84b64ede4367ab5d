#include <algorithm>
#include <cmath>
#include <map>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/errors.hpp"

namespace gridhedonic::econ {
namespace {

constexpr double kFeTolerance = 1e-10;
constexpr int kFeMaxSweeps = 10000;

// Solves for the FE levels given the slope fit: Gauss-Seidel over dimensions
// on y - X beta, then pins the first level of every dimension after the first.
void recover_fixed_effects(const Design& d, FitResult& fit) {
  Eigen::VectorXd r = d.y;
  for (const Coefficient& c : fit.coefficients) {
    const auto col = std::find(d.columns.begin(), d.columns.end(), c.term) - d.columns.begin();
    r -= c.estimate * d.X.col(col);
  }

  std::vector<std::vector<double>> values;
  for (const FeLabels& f : d.fe) values.emplace_back(f.levels.size(), 0.0);

  const auto n = static_cast<std::size_t>(r.size());
  for (int sweep = 0; sweep < kFeMaxSweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t dim = 0; dim < d.fe.size(); ++dim) {
      // Running means: a constant level comes back exactly.
      std::vector<double> means(values[dim].size(), 0.0), seen(values[dim].size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double v = r(static_cast<Eigen::Index>(i));
        for (std::size_t other = 0; other < d.fe.size(); ++other)
          if (other != dim) v -= values[other][static_cast<std::size_t>(d.fe[other].codes[i])];
        const auto g = static_cast<std::size_t>(d.fe[dim].codes[i]);
        means[g] += (v - means[g]) / (seen[g] += 1.0);
      }
      for (std::size_t g = 0; g < means.size(); ++g) {
        change = std::max(change, std::abs(means[g] - values[dim][g]));
        values[dim][g] = means[g];
      }
    }
    if (d.fe.size() == 1 || change < kFeTolerance) break;
  }

  for (std::size_t dim = 1; dim < d.fe.size(); ++dim) {
    const double shift = values[dim][0];
    for (double& v : values[dim]) v -= shift;
    for (double& v : values[0]) v += shift;
  }
  for (std::size_t dim = 0; dim < d.fe.size(); ++dim) {
    auto& out = fit.fe_estimates[d.fe[dim].name];
    for (std::size_t g = 0; g < values[dim].size(); ++g) out[d.fe[dim].levels[g]] = values[dim][g];
  }
}

void require_did_cells(std::span<const EventSample> samples, Treatment treatment) {
  if (treatment == Treatment::none) throw ConfigError("difference-in-differences needs a treatment");
  std::size_t cells[2][2] = {{0, 0}, {0, 0}};
  for (const EventSample& s : samples) ++cells[s.near ? 1 : 0][s.post ? 1 : 0];
  if (treatment == Treatment::discrete_near) {
    const char* arm[] = {"control", "treated"};
    const char* period[] = {"pre", "post"};
    for (int a = 0; a < 2; ++a)
      for (int p = 0; p < 2; ++p)
        if (cells[a][p] == 0)
          throw DegenerateDesign(std::string("empty 2x2 cell ") + arm[a] + "/" + period[p]);
  } else {
    if (cells[0][0] + cells[1][0] == 0) throw DegenerateDesign("no pre-announcement samples");
    if (cells[0][1] + cells[1][1] == 0) throw DegenerateDesign("no post-announcement samples");
  }
}

}  // namespace

FitResult fit_model(std::span<const EventSample> samples, const ModelSpec& spec) {
  const Design d = build_design(samples, spec);
  const double tss = (d.y.array() - d.y.mean()).square().sum();
  FitResult fit;
  if (d.fe.empty()) {
    fit = ols_fit(d.y, d.X, d.columns, {spec.se_type, 0, tss});
  } else {
    const Absorbed a = absorb_fixed_effects(d.y, d.X, d.fe);
    fit = ols_fit(a.y, a.X, d.columns, {spec.se_type, absorbed_parameter_count(d.fe), tss});
    fit.absorb_sweeps = a.sweeps;
    recover_fixed_effects(d, fit);
  }
  for (const FeLabels& f : d.fe) fit.fe_dimensions.push_back(f.name);
  return fit;
}

FitResult estimate_did(std::span<const EventSample> samples, const ModelSpec& spec) {
  require_did_cells(samples, spec.treatment);
  return fit_model(samples, spec);
}

FitResult estimate_triple_diff(std::span<const EventSample> samples, ModelSpec spec) {
  spec.include_multi_interactions = true;
  if (!samples.empty()) {
    const bool first = samples.front().multi;
    if (std::all_of(samples.begin(), samples.end(), [&](const EventSample& s) { return s.multi == first; }))
      throw DegenerateDesign(std::string("every sample has multi = ") + (first ? "1" : "0"));
  }
  require_did_cells(samples, spec.treatment);
  return fit_model(samples, spec);
}

IndexSeries hedonic_index(std::span<const EventSample> samples, const IndexOptions& options) {
  std::map<int, std::size_t> counts;
  for (const EventSample& s : samples)
    ++counts[options.period == Period::week ? s.week
                                            : static_cast<int>(s.day.time_since_epoch().count())];
  if (counts.size() < 2) throw InsufficientData("price index needs at least two periods with data");

  ModelSpec spec;
  spec.treatment = Treatment::none;
  spec.controls = options.controls;
  spec.fe_dimensions = {options.period == Period::week ? FeDimension::week : FeDimension::day};
  IndexSeries series;
  series.fit = fit_model(samples, spec);

  const auto& tau = series.fit.fe_estimates.at(std::string(to_string(spec.fe_dimensions[0])));
  auto label_of = [&](int period) {
    return options.period == Period::week ? format_date(week_start(period))
                                          : format_date(Date{std::chrono::days{period}});
  };
  const double base = tau.at(label_of(counts.begin()->first));
  for (int p = counts.begin()->first; p <= counts.rbegin()->first; ++p) {
    IndexPoint point;
    point.period = p;
    point.label = label_of(p);
    if (auto it = counts.find(p); it != counts.end()) {
      point.n = it->second;
      point.value = std::exp(tau.at(point.label) - base);
    }
    series.points.push_back(std::move(point));
  }
  return series;
}

std::vector<TrendRow> trend_from_residuals(std::span<const EventSample> samples,
                                           const Eigen::VectorXd& residuals, int window_days) {
  if (static_cast<std::size_t>(residuals.size()) != samples.size())
    throw InvalidInput("residuals do not match samples");
  const std::size_t width = static_cast<std::size_t>(2 * window_days + 1);
  std::vector<double> sums(2 * width, 0.0);
  std::vector<std::size_t> counts(2 * width, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int offset = samples[i].event_day + window_days;
    if (offset < 0 || offset >= static_cast<int>(width)) continue;
    const std::size_t slot = static_cast<std::size_t>(offset) * 2 + (samples[i].near ? 1 : 0);
    sums[slot] += residuals(static_cast<Eigen::Index>(i));
    ++counts[slot];
  }
  std::vector<TrendRow> rows;
  for (std::size_t slot = 0; slot < 2 * width; ++slot) {
    TrendRow row;
    row.event_day = static_cast<int>(slot / 2) - window_days;
    row.near = slot % 2 == 1;
    row.n = counts[slot];
    if (row.n > 0) row.mean_residual = sums[slot] / static_cast<double>(row.n);
    rows.push_back(row);
  }
  return rows;
}

std::vector<TrendRow> residual_trend_series(std::span<const EventSample> samples,
                                            const TrendOptions& options) {
  const bool has_pre = std::any_of(samples.begin(), samples.end(), [](auto& s) { return !s.post; });
  const bool has_post = std::any_of(samples.begin(), samples.end(), [](auto& s) { return s.post; });
  if (!has_pre || !has_post) throw DegenerateDesign("trend series needs pre and post days");
  ModelSpec spec;
  spec.treatment = Treatment::none;
  spec.controls = options.controls;
  spec.fe_dimensions = {FeDimension::week};
  const FitResult fit = fit_model(samples, spec);
  return trend_from_residuals(samples, fit.residuals, options.window_days);
}

std::pair<std::vector<EventSample>, std::vector<EventSample>> partition_meta(
    std::span<const EventSample> samples, Date cut_date) {
  std::pair<std::vector<EventSample>, std::vector<EventSample>> out;
  for (const EventSample& s : samples)
    (s.announce_date() < cut_date ? out.first : out.second).push_back(s);
  return out;
}

}  // namespace gridhedonic::econ
