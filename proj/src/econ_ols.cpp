#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/errors.hpp"

namespace gridhedonic::econ {

const Coefficient* FitResult::find(std::string_view term) const {
  auto it = std::find_if(coefficients.begin(), coefficients.end(),
                         [&](const Coefficient& c) { return c.term == term; });
  return it == coefficients.end() ? nullptr : &*it;
}

const Coefficient& FitResult::at(std::string_view term) const {
  if (const Coefficient* c = find(term)) return *c;
  throw InvalidInput("fit has no coefficient '" + std::string(term) + "'");
}

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.10) return "*";
  return "";
}

double two_sided_p(double t_stat, std::size_t n_obs, double dof) {
  if (!std::isfinite(t_stat)) return std::isnan(t_stat) ? 1.0 : 0.0;
  const double a = std::abs(t_stat);
  if (n_obs > 100) return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal{}, a));
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t{dof}, a));
}

FitResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  std::span<const std::string> columns, const OlsOptions& options) {
  using Eigen::Index;
  const Index n = X.rows();
  const Index k = X.cols();
  if (y.size() != n) throw InvalidInput("response and regressors differ in length");
  if (static_cast<Index>(columns.size()) != k) throw InvalidInput("column names do not match regressors");

  // Householder QR, one column at a time in the given order. A column whose
  // remaining norm (after the reflections of the columns already kept) is
  // negligible is collinear with those and is dropped.
  Eigen::MatrixXd A = X;
  Eigen::VectorXd b = y;
  std::vector<Index> kept;
  std::vector<std::string> dropped;
  std::vector<Eigen::VectorXd> reflectors;
  const double reference = k > 0 ? X.colwise().norm().maxCoeff() : 0.0;

  for (Index j = 0; j < k; ++j) {
    const Index r = static_cast<Index>(kept.size());
    for (Index h = 0; h < r; ++h) {
      const Eigen::VectorXd& v = reflectors[static_cast<std::size_t>(h)];
      auto tail = A.col(j).tail(n - h);
      tail -= (2.0 * v.dot(tail)) * v;
    }
    if (r >= n) {
      dropped.push_back(columns[static_cast<std::size_t>(j)]);
      continue;
    }
    auto tail = A.col(j).tail(n - r);
    const double norm = tail.norm();
    if (!(norm > options.rank_tolerance * reference)) {
      dropped.push_back(columns[static_cast<std::size_t>(j)]);
      continue;
    }
    Eigen::VectorXd v = tail;
    const double alpha = tail(0) >= 0.0 ? -norm : norm;
    v(0) -= alpha;
    v.normalize();
    tail.setZero();
    tail(0) = alpha;
    auto btail = b.tail(n - r);
    btail -= (2.0 * v.dot(btail)) * v;
    reflectors.push_back(std::move(v));
    kept.push_back(j);
  }

  const Index p = static_cast<Index>(kept.size());
  const std::size_t k_total = static_cast<std::size_t>(p) + options.absorbed_params;
  if (static_cast<std::size_t>(n) <= k_total)
    throw InsufficientData("need more observations (" + std::to_string(n) + ") than parameters (" +
                           std::to_string(k_total) + ")");

  Eigen::MatrixXd R(p, p);
  Eigen::MatrixXd Xk(n, p);
  for (Index c = 0; c < p; ++c) {
    R.col(c) = A.col(kept[static_cast<std::size_t>(c)]).head(p);
    Xk.col(c) = X.col(kept[static_cast<std::size_t>(c)]);
  }
  const auto upper = R.triangularView<Eigen::Upper>();
  const Eigen::VectorXd beta = p > 0 ? Eigen::VectorXd(upper.solve(b.head(p))) : Eigen::VectorXd();

  FitResult fit;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.k_total = k_total;
  fit.dof = static_cast<double>(static_cast<std::size_t>(n) - k_total);
  fit.se_type = options.se_type;
  fit.dropped_columns = std::move(dropped);
  fit.residuals = p > 0 ? Eigen::VectorXd(y - Xk * beta) : y;

  const double rss = fit.residuals.squaredNorm();
  fit.sigma = std::sqrt(rss / fit.dof);
  const double tss = options.total_ss ? *options.total_ss : (y.array() - y.mean()).square().sum();
  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  fit.adj_r2 = tss > 0.0 ? 1.0 - (rss / fit.dof) / (tss / static_cast<double>(n - 1)) : 0.0;

  // (X'X)^-1 = R^-1 R^-T.
  const Eigen::MatrixXd Rinv = upper.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd bread = Rinv * Rinv.transpose();
  if (options.se_type == SeType::classical) {
    fit.vcov = (rss / fit.dof) * bread;
  } else {
    const Eigen::MatrixXd scaled = Xk.array().colwise() * fit.residuals.array().abs();
    const Eigen::MatrixXd meat = scaled.transpose() * scaled;
    fit.vcov = (static_cast<double>(n) / fit.dof) * bread * meat * bread;
  }

  for (Index c = 0; c < p; ++c) {
    Coefficient coef;
    coef.term = columns[static_cast<std::size_t>(kept[static_cast<std::size_t>(c)])];
    coef.estimate = beta(c);
    coef.std_error = std::sqrt(std::max(0.0, fit.vcov(c, c)));
    coef.t_stat = coef.std_error > 0.0 ? coef.estimate / coef.std_error
                                       : (coef.estimate == 0.0 ? 0.0 : INFINITY);
    coef.p_value = two_sided_p(coef.t_stat, fit.n_obs, fit.dof);
    coef.stars = significance_stars(coef.p_value);
    fit.coefficients.push_back(std::move(coef));
  }
  return fit;
}

}  // namespace gridhedonic::econ
