#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/errors.hpp"

namespace gridhedonic::econ {

std::string_view to_string(Treatment t) {
  switch (t) {
    case Treatment::none: return "none";
    case Treatment::discrete_near: return "discrete_near";
    case Treatment::continuous_log_distance: return "continuous_log_distance";
  }
  return "?";
}

std::string_view to_string(FeDimension d) {
  switch (d) {
    case FeDimension::day: return "day";
    case FeDimension::week: return "week";
    case FeDimension::mint_wave: return "mint_wave";
  }
  return "?";
}

std::string_view to_string(SeType s) { return s == SeType::classical ? "classical" : "hc1"; }

std::string_view to_string(Control c) {
  switch (c) {
    case Control::log_lot_size: return "log_lot_size";
    case Control::premium: return "premium";
    case Control::log_btc: return "log_btc";
    case Control::paid_sand: return "paid_sand";
    case Control::paid_weth: return "paid_weth";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (dependent != "log_price") throw ConfigError("unsupported dependent variable '" + dependent + "'");
  const bool day_fe = std::find(fe_dimensions.begin(), fe_dimensions.end(), FeDimension::day) !=
                      fe_dimensions.end();
  const bool btc = std::find(controls.begin(), controls.end(), Control::log_btc) != controls.end();
  if (day_fe && btc) throw ConfigError("log_btc is collinear with daily fixed effects");
  if (std::set<Control>(controls.begin(), controls.end()).size() != controls.size())
    throw ConfigError("a control is listed twice");
  if (std::set<FeDimension>(fe_dimensions.begin(), fe_dimensions.end()).size() != fe_dimensions.size())
    throw ConfigError("a fixed-effect dimension is listed twice");
  if (include_treat_multi && !include_multi_interactions)
    throw ConfigError("treat x multi requires the multi interactions");
}

std::string treatment_term(Treatment t) {
  switch (t) {
    case Treatment::discrete_near: return "near";
    case Treatment::continuous_log_distance: return "log_distance";
    case Treatment::none: break;
  }
  throw ConfigError("model has no treatment variable");
}

std::string post_treatment_term(Treatment t) { return "post_x_" + treatment_term(t); }
std::string triple_term(Treatment t) { return "post_x_" + treatment_term(t) + "_x_multi"; }

namespace {

double control_value(const EventSample& s, Control c) {
  switch (c) {
    case Control::log_lot_size: return s.log_lot_size;
    case Control::premium: return s.premium;
    case Control::log_btc: return s.log_btc;
    case Control::paid_sand: return s.paid_sand;
    case Control::paid_weth: return s.paid_weth;
  }
  return 0.0;
}

FeLabels make_labels(std::span<const EventSample> samples, FeDimension dim) {
  // Keys sort in time / wave order; labels are rendered afterwards.
  std::vector<int> keys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (dim) {
      case FeDimension::day: keys[i] = static_cast<int>(samples[i].day.time_since_epoch().count()); break;
      case FeDimension::week: keys[i] = samples[i].week; break;
      case FeDimension::mint_wave: keys[i] = samples[i].mint_wave_id; break;
    }
  }
  std::map<int, int> index;
  for (int k : keys) index.emplace(k, 0);
  FeLabels labels;
  labels.name = std::string(to_string(dim));
  int next = 0;
  for (auto& [key, code] : index) {
    code = next++;
    switch (dim) {
      case FeDimension::day: labels.levels.push_back(format_date(Date{std::chrono::days{key}})); break;
      case FeDimension::week: labels.levels.push_back(format_date(week_start(key))); break;
      case FeDimension::mint_wave: labels.levels.push_back(std::to_string(key)); break;
    }
  }
  labels.codes.reserve(keys.size());
  for (int k : keys) labels.codes.push_back(index.at(k));
  return labels;
}

}  // namespace

Design build_design(std::span<const EventSample> samples, const ModelSpec& spec) {
  spec.validate();
  if (samples.empty()) throw InvalidInput("design needs at least one sample");
  const std::size_t n = samples.size();

  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  auto add = [&](std::string name, auto&& value_of) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = value_of(samples[i]);
    names.push_back(std::move(name));
    cols.push_back(std::move(c));
  };

  if (spec.fe_dimensions.empty()) add("intercept", [](const EventSample&) { return 1.0; });

  if (spec.treatment != Treatment::none) {
    const bool discrete = spec.treatment == Treatment::discrete_near;
    auto treat = [discrete](const EventSample& s) { return discrete ? double(s.near) : s.log_distance; };
    const std::string t = treatment_term(spec.treatment);

    const double first = treat(samples.front());
    if (std::all_of(samples.begin(), samples.end(), [&](const EventSample& s) { return treat(s) == first; }))
      throw DegenerateDesign("treatment column '" + t + "' is constant");

    add("post", [](const EventSample& s) { return double(s.post); });
    add(t, treat);
    add("post_x_" + t, [&](const EventSample& s) { return double(s.post) * treat(s); });
    if (spec.include_multi_interactions) {
      add("multi", [](const EventSample& s) { return double(s.multi); });
      add("post_x_multi", [](const EventSample& s) { return double(s.post && s.multi); });
      if (spec.include_treat_multi)
        add(t + "_x_multi", [&](const EventSample& s) { return double(s.multi) * treat(s); });
      add("post_x_" + t + "_x_multi",
          [&](const EventSample& s) { return double(s.post && s.multi) * treat(s); });
    }
  }
  for (Control c : spec.controls)
    add(std::string(to_string(c)), [c](const EventSample& s) { return control_value(s, c); });

  Design d;
  d.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) d.y(static_cast<Eigen::Index>(i)) = samples[i].log_price;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i)
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  d.columns = std::move(names);
  for (FeDimension dim : spec.fe_dimensions) d.fe.push_back(make_labels(samples, dim));
  return d;
}

std::size_t absorbed_parameter_count(std::span<const FeLabels> fe) {
  if (fe.empty()) return 0;
  std::size_t count = 1;
  for (const FeLabels& f : fe) count += f.levels.size() - 1;
  return count;
}

namespace {

// Subtracts group means in place; returns the largest absolute change.
double demean_once(Eigen::Ref<Eigen::VectorXd> v, const FeLabels& f, const std::vector<double>& counts,
                   std::vector<double>& sums) {
  std::fill(sums.begin(), sums.end(), 0.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) sums[static_cast<std::size_t>(f.codes[static_cast<std::size_t>(i)])] += v(i);
  double change = 0.0;
  for (std::size_t g = 0; g < sums.size(); ++g) {
    sums[g] /= counts[g];
    change = std::max(change, std::abs(sums[g]));
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) -= sums[static_cast<std::size_t>(f.codes[static_cast<std::size_t>(i)])];
  return change;
}

}  // namespace

Absorbed absorb_fixed_effects(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                              std::span<const FeLabels> fe, const AbsorbOptions& options) {
  const auto n = y.size();
  if (X.rows() != n) throw InvalidInput("response and regressors differ in length");
  std::vector<std::vector<double>> counts;
  for (const FeLabels& f : fe) {
    if (f.codes.size() != static_cast<std::size_t>(n))
      throw InvalidInput("fixed-effect dimension '" + f.name + "' does not label every sample");
    if (f.levels.empty()) throw InvalidInput("fixed-effect dimension '" + f.name + "' has no groups");
    std::vector<double> c(f.levels.size(), 0.0);
    for (int code : f.codes) {
      if (code < 0 || static_cast<std::size_t>(code) >= c.size())
        throw InvalidInput("fixed-effect code out of range in '" + f.name + "'");
      c[static_cast<std::size_t>(code)] += 1.0;
    }
    counts.push_back(std::move(c));
  }

  Absorbed out{y, X, 0, 0.0};
  if (fe.empty()) return out;

  // Column 0 is the response, then the regressors.
  Eigen::MatrixXd work(n, X.cols() + 1);
  work.col(0) = y;
  work.rightCols(X.cols()) = X;

  std::vector<double> sums;
  for (Eigen::Index j = 0; j < work.cols(); ++j) {
    auto col = work.col(j);
    int sweep = 0;
    double change = 0.0;
    while (true) {
      ++sweep;
      change = 0.0;
      for (std::size_t d = 0; d < fe.size(); ++d) {
        sums.assign(counts[d].size(), 0.0);
        change = std::max(change, demean_once(col, fe[d], counts[d], sums));
      }
      // One projection is exact for a single dimension.
      if (fe.size() == 1 || change < options.tolerance) break;
      if (sweep >= options.max_sweeps)
        throw NumericalError("fixed-effect absorption did not converge after " +
                             std::to_string(sweep) + " sweeps (last change " +
                             std::to_string(change) + ")");
    }
    out.sweeps = std::max(out.sweeps, sweep);
    out.last_change = std::max(out.last_change, fe.size() == 1 ? 0.0 : change);
  }
  out.y = work.col(0);
  out.X = work.rightCols(X.cols());
  return out;
}

}  // namespace gridhedonic::econ
