#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gridhedonic/econ.hpp"
#include "gridhedonic/io.hpp"

namespace gridhedonic::econ {

std::string term_label(std::string_view term) {
  static const std::map<std::string_view, std::string_view> labels{
      {"intercept", "Intercept"},
      {"post", "Post announcement"},
      {"near", "Near new LAND (median)"},
      {"log_distance", "Log(distance)"},
      {"post_x_near", "Post * Near"},
      {"post_x_log_distance", "Post * log(distance)"},
      {"multi", "Multi-wave"},
      {"post_x_multi", "Post * Multi-wave"},
      {"near_x_multi", "Near * Multi-wave"},
      {"log_distance_x_multi", "Log(distance) * Multi-wave"},
      {"post_x_near_x_multi", "Post * Near * Multi-wave"},
      {"post_x_log_distance_x_multi", "Post * log(distance) * Multi-wave"},
      {"log_lot_size", "Log(lot size)"},
      {"premium", "Premium LAND"},
      {"log_btc", "Log(BTC price)"},
      {"paid_sand", "Paid in SAND"},
      {"paid_weth", "Paid in wETH"},
  };
  auto it = labels.find(term);
  return it == labels.end() ? std::string(term) : std::string(it->second);
}

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

bool has_dim(const FitResult& fit, std::string_view dim) {
  return std::find(fit.fe_dimensions.begin(), fit.fe_dimensions.end(), dim) != fit.fe_dimensions.end();
}

}  // namespace

std::string format_coefficients_csv(const FitResult& fit) {
  std::ostringstream out;
  out << "# n_obs: " << fit.n_obs << '\n'
      << "# adj_r2: " << io::format_double(fit.adj_r2) << '\n'
      << "# fe_dimensions: " << join(fit.fe_dimensions, ';') << '\n'
      << "# se_type: " << to_string(fit.se_type) << '\n'
      << "# dropped_columns: " << join(fit.dropped_columns, ';') << '\n'
      << "term,estimate,std_error,t_stat,stars\n";
  for (const Coefficient& c : fit.coefficients)
    out << c.term << ',' << io::format_double(c.estimate) << ',' << io::format_double(c.std_error)
        << ',' << io::format_double(c.t_stat) << ',' << c.stars << '\n';
  return out.str();
}

nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json coefs = nlohmann::json::array();
  for (const Coefficient& c : fit.coefficients)
    coefs.push_back({{"term", c.term},
                     {"estimate", c.estimate},
                     {"std_error", c.std_error},
                     {"t_stat", std::isfinite(c.t_stat) ? nlohmann::json(c.t_stat) : nlohmann::json()},
                     {"p_value", c.p_value},
                     {"stars", c.stars}});
  return {{"coefficients", coefs},
          {"metadata",
           {{"n_obs", fit.n_obs},
            {"adj_r2", fit.adj_r2},
            {"r2", fit.r2},
            {"dof", fit.dof},
            {"fe_dimensions", fit.fe_dimensions},
            {"se_type", to_string(fit.se_type)},
            {"dropped_columns", fit.dropped_columns}}}};
}

std::string format_console_table(std::span<const NamedFit> fits) {
  constexpr int kLabelWidth = 34;
  constexpr int kColWidth = 16;
  std::vector<std::string> terms;
  for (const NamedFit& f : fits)
    if (f.fit)
      for (const Coefficient& c : f.fit->coefficients)
        if (c.term != "intercept" && std::find(terms.begin(), terms.end(), c.term) == terms.end())
          terms.push_back(c.term);

  std::ostringstream out;
  char buf[256];
  auto row = [&](const std::string& label, const std::vector<std::string>& cells) {
    std::snprintf(buf, sizeof buf, "%-*s", kLabelWidth, label.c_str());
    out << buf;
    for (const std::string& cell : cells) {
      std::snprintf(buf, sizeof buf, "%*s", kColWidth, cell.c_str());
      out << buf;
    }
    out << '\n';
  };

  std::vector<std::string> header;
  for (std::size_t i = 0; i < fits.size(); ++i) header.push_back("(" + std::to_string(i + 1) + ")");
  row("", header);
  out << std::string(kLabelWidth + kColWidth * fits.size(), '-') << '\n';

  for (const std::string& term : terms) {
    std::vector<std::string> est, se;
    for (const NamedFit& f : fits) {
      const Coefficient* c = f.fit ? f.fit->find(term) : nullptr;
      est.push_back(c ? io::format_fixed(c->estimate, 3) + c->stars : "");
      se.push_back(c ? "(" + io::format_fixed(c->std_error, 3) + ")" : "");
    }
    row(term_label(term), est);
    row("", se);
  }
  out << std::string(kLabelWidth + kColWidth * fits.size(), '-') << '\n';

  std::vector<std::string> time_fe, wave_fe, obs, adj;
  for (const NamedFit& f : fits) {
    if (!f.fit) {
      for (auto* v : {&time_fe, &wave_fe, &obs, &adj}) v->push_back("");
      continue;
    }
    time_fe.push_back(has_dim(*f.fit, "day") ? "Day" : has_dim(*f.fit, "week") ? "Week" : "No");
    wave_fe.push_back(has_dim(*f.fit, "mint_wave") ? "Yes" : "No");
    obs.push_back(std::to_string(f.fit->n_obs));
    adj.push_back(io::format_fixed(f.fit->adj_r2, 3));
  }
  row("Time fixed effects", time_fe);
  row("Wave fixed effects", wave_fe);
  row("Observations", obs);
  row("Adj R-squared", adj);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const NamedFit& f = fits[i];
    out << "(" << i + 1 << ") " << f.name;
    if (!f.fit)
      out << ": " << f.error;
    else if (!f.fit->dropped_columns.empty())
      out << "; dropped " << join(f.fit->dropped_columns, ',');
    out << '\n';
  }
  const std::string se = fits.empty() || !fits.front().fit ? "classical"
                                                          : std::string(to_string(fits.front().fit->se_type));
  out << "Standard errors (" << se << ") in parentheses; * p<0.10, ** p<0.05, *** p<0.01\n";
  return out.str();
}

std::string format_index_csv(const IndexSeries& index) {
  std::ostringstream out;
  out << "period,value\n";
  for (const IndexPoint& p : index.points)
    out << p.label << ',' << (p.value ? io::format_double(*p.value) : std::string()) << '\n';
  return out.str();
}

std::string format_trend_csv(std::span<const TrendRow> rows) {
  std::ostringstream out;
  out << "event_day,group,mean_residual,n\n";
  for (const TrendRow& r : rows)
    out << r.event_day << ',' << (r.near ? "near" : "far") << ','
        << (r.mean_residual ? io::format_double(*r.mean_residual) : std::string()) << ',' << r.n << '\n';
  return out.str();
}

}  // namespace gridhedonic::econ
