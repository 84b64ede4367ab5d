#include "gridhedonic/cli.hpp"

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "gridhedonic/errors.hpp"
#include "gridhedonic/grid_io.hpp"
#include "gridhedonic/io.hpp"
#include "gridhedonic/synth.hpp"

namespace gridhedonic::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_logger_st("gridhedonic");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    if (const char* env = std::getenv("GRIDHEDONIC_LOG")) l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return *logger;
}

int guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    log().error("{}: {}", name, e.what());
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    log().error("{}: {}", name, e.what());
    return static_cast<int>(ExitCode::io);
  } catch (const json::exception& e) {
    log().error("{}: {}", name, e.what());
    return static_cast<int>(ExitCode::config);
  } catch (const std::exception& e) {
    log().error("{}: {}", name, e.what());
    return static_cast<int>(ExitCode::numerical);
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError("--" + what + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " file not found: " + path.string());
}

void prepare_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
}

struct Inputs {
  std::vector<grid::AnnouncementGroup> groups;
  ledger::Panel panel;
};

Inputs load_panel(const RunConfig& run) {
  require_file(run.transactions, "transactions");
  require_file(run.waves, "waves");
  require_file(run.rates, "rates");
  if (!run.map.empty()) require_file(run.map, "map");

  Inputs in;
  std::vector<grid::Wave> waves = grid::load_waves(run.waves, run.map_size);
  const ledger::MapMetadata map = run.map.empty() ? ledger::MapMetadata::from_waves(waves, run.map_size)
                                                  : ledger::MapMetadata::load(run.map, run.map_size);
  in.groups = grid::group_waves(std::move(waves));
  const ledger::RateTable rates = ledger::RateTable::load(run.rates);
  const std::string text = io::read_file(run.transactions);

  ledger::PanelOptions opts;
  opts.window_days = run.window_days;
  opts.groups = run.groups;
  in.panel = ledger::prepare_panel(text, map, in.groups, rates, opts);

  std::map<std::string, int> counts;
  for (const auto& r : in.panel.rejections) ++counts[std::string(ledger::reason_name(r.reason))];
  log().info("panel: {} samples, {} rejected", in.panel.samples.size(), in.panel.rejections.size());
  for (const auto& [reason, n] : counts) log().debug("  {}: {}", reason, n);
  if (in.panel.samples.empty()) throw InsufficientData("no transactions survive cleaning and windowing");
  return in;
}

std::string rejections_csv(std::span<const ledger::Rejection> rejections) {
  std::string out = "tx_id,reason,detail\n";
  for (const auto& r : rejections) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    out += r.tx_id + ',' + std::string(ledger::reason_name(r.reason)) + ',' + detail + '\n';
  }
  return out;
}

// ---- estimate battery ----

struct Entry {
  std::string section;
  std::string name;
  econ::ModelSpec spec;
  bool triple = false;
  int subset = 0;  // 0 all, 1 before the meta cut, 2 on or after
};

using econ::Control;
using econ::FeDimension;
using econ::Treatment;

const std::vector<Control> kBtcControls{Control::log_lot_size, Control::premium, Control::log_btc};
const std::vector<Control> kBaseControls{Control::log_lot_size, Control::premium};
const std::vector<Control> kTokenControls{Control::log_lot_size, Control::premium, Control::paid_sand,
                                          Control::paid_weth};

econ::ModelSpec make_spec(Treatment t, std::vector<FeDimension> fe, std::vector<Control> controls,
                          econ::SeType se) {
  econ::ModelSpec s;
  s.treatment = t;
  s.fe_dimensions = std::move(fe);
  s.controls = std::move(controls);
  s.se_type = se;
  return s;
}

std::vector<Entry> battery(const RunConfig& run) {
  const auto se = run.se;
  const std::vector<FeDimension> week{FeDimension::week};
  const std::vector<FeDimension> week_wave{FeDimension::week, FeDimension::mint_wave};
  const std::vector<FeDimension> day_wave{FeDimension::day, FeDimension::mint_wave};
  const auto near = Treatment::discrete_near;
  const auto logd = Treatment::continuous_log_distance;

  std::vector<Entry> out{
      {"Discrete treatment", "discrete_week", make_spec(near, week, kBtcControls, se)},
      {"Discrete treatment", "discrete_week_wave", make_spec(near, week_wave, kBtcControls, se)},
      {"Discrete treatment", "discrete_day_wave", make_spec(near, day_wave, kBaseControls, se)},
      {"Discrete treatment", "discrete_day_wave_tokens", make_spec(near, day_wave, kTokenControls, se)},
      {"Continuous treatment", "continuous_day_wave", make_spec(logd, day_wave, kBaseControls, se)},
      {"Continuous treatment", "continuous_day_wave_tokens", make_spec(logd, day_wave, kTokenControls, se)},
      {"Triple differences", "triple_discrete", make_spec(near, day_wave, kTokenControls, se), true},
      {"Triple differences", "triple_continuous", make_spec(logd, day_wave, kTokenControls, se), true},
  };
  if (run.meta_cut) {
    out.push_back({"Meta cut", "meta_pre_discrete", make_spec(near, day_wave, kTokenControls, se), false, 1});
    out.push_back({"Meta cut", "meta_post_discrete", make_spec(near, day_wave, kTokenControls, se), false, 2});
    out.push_back({"Meta cut", "meta_pre_continuous", make_spec(logd, day_wave, kTokenControls, se), false, 1});
    out.push_back({"Meta cut", "meta_post_continuous", make_spec(logd, day_wave, kTokenControls, se), false, 2});
  }
  if (run.treatment || run.fe || run.multi) {
    const FeDimension time = run.fe.value_or(FeDimension::day);
    out.push_back({"Custom", "custom",
                   make_spec(run.treatment.value_or(near), {time, FeDimension::mint_wave},
                             time == FeDimension::week ? kBtcControls : kTokenControls, se),
                   run.multi});
  }
  return out;
}

}  // namespace

std::optional<ledger::GroupRange> parse_group_range(std::string_view text) {
  text = io::trim(text);
  if (text == "all") return std::nullopt;
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) throw ConfigError("group range must look like A..B or all");
  ledger::GroupRange r;
  try {
    r.first = static_cast<int>(io::parse_int(text.substr(0, dots)));
    r.last = static_cast<int>(io::parse_int(text.substr(dots + 2)));
  } catch (const Error&) {
    throw ConfigError("bad group range '" + std::string(text) + "'");
  }
  if (r.first > r.last) throw ConfigError("group range is empty: " + std::string(text));
  return r;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  return guarded("simulate", [&] {
    synth::DGPConfig config;
    if (!config_path.empty()) {
      require_file(config_path, "config");
      config = synth::DGPConfig::load(config_path);
    }
    if (seed) config.seed = *seed;
    const synth::SyntheticMarket market = synth::generate_market(config);
    prepare_out_dir(out_dir);
    synth::write_market(market, out_dir);
    log().info("simulate: {} waves, {} transactions -> {}", market.waves.size(), market.rows.size(),
               out_dir.string());
  });
}

int cmd_estimate(const RunConfig& run) {
  int status = 0;
  const int rc = guarded("estimate", [&] {
    const Inputs in = load_panel(run);
    prepare_out_dir(run.out);
    std::vector<econ::EventSample> pre, post;
    if (run.meta_cut) std::tie(pre, post) = econ::partition_meta(in.panel.samples, *run.meta_cut);

    const std::vector<Entry> entries = battery(run);
    std::vector<std::optional<econ::FitResult>> fits(entries.size());
    std::vector<std::string> errors(entries.size());
    json specs = json::array();
    int failed = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Entry& e = entries[i];
      const std::span<const econ::EventSample> samples =
          e.subset == 0 ? std::span<const econ::EventSample>(in.panel.samples)
                        : std::span<const econ::EventSample>(e.subset == 1 ? pre : post);
      json item{{"name", e.name}};
      try {
        fits[i] = e.triple ? econ::estimate_triple_diff(samples, e.spec) : econ::estimate_did(samples, e.spec);
        io::write_file_atomic(run.out / (e.name + ".csv"), econ::format_coefficients_csv(*fits[i]));
        item["fit"] = econ::fit_to_json(*fits[i]);
      } catch (const Error& err) {
        // A degenerate specification does not abort the batch.
        if (dynamic_cast<const IoError*>(&err)) throw;
        errors[i] = err.what();
        item["error"] = err.what();
        ++failed;
        log().warn("{}: {}", e.name, err.what());
      }
      specs.push_back(item);
    }

    json rejected = json::object();
    for (const auto& r : in.panel.rejections) {
      const std::string key(ledger::reason_name(r.reason));
      rejected[key] = rejected.value(key, 0) + 1;
    }
    json doc{{"panel", {{"samples", in.panel.samples.size()}, {"rejections", rejected}}},
             {"specifications", specs}};
    if (run.meta_cut) doc["meta_cut"] = format_date(*run.meta_cut);
    io::write_file_atomic(run.out / "estimates.json", doc.dump(2) + "\n");

    std::string section;
    std::vector<econ::NamedFit> table;
    auto flush = [&] {
      if (table.empty()) return;
      std::cout << section << "\n" << econ::format_console_table(table) << "\n";
      table.clear();
    };
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].section != section) {
        flush();
        section = entries[i].section;
      }
      table.push_back({entries[i].name, fits[i] ? &*fits[i] : nullptr, errors[i]});
    }
    flush();
    if (failed == static_cast<int>(entries.size())) status = static_cast<int>(ExitCode::numerical);
  });
  return rc != 0 ? rc : status;
}

int cmd_index(const RunConfig& run) {
  return guarded("index", [&] {
    const Inputs in = load_panel(run);
    prepare_out_dir(run.out);
    econ::IndexOptions opts;
    if (run.fe == FeDimension::day) opts.period = econ::Period::day;
    const econ::IndexSeries index = econ::hedonic_index(in.panel.samples, opts);
    io::write_file_atomic(run.out / "index.csv", econ::format_index_csv(index));
    for (auto it = index.points.rbegin(); it != index.points.rend(); ++it)
      if (it->value) {
        std::cout << "final index " << it->label << ": " << io::format_fixed(*it->value, 3) << "\n";
        break;
      }
  });
}

int cmd_trend(const RunConfig& run) {
  return guarded("trend", [&] {
    const Inputs in = load_panel(run);
    prepare_out_dir(run.out);
    econ::TrendOptions opts;
    opts.window_days = run.window_days;
    const auto rows = econ::residual_trend_series(in.panel.samples, opts);
    io::write_file_atomic(run.out / "trend.csv", econ::format_trend_csv(rows));
  });
}

int cmd_panel(const RunConfig& run) {
  return guarded("panel", [&] {
    const Inputs in = load_panel(run);
    prepare_out_dir(run.out);
    io::write_file_atomic(run.out / "panel.csv", ledger::format_panel_csv(in.panel.samples));
    io::write_file_atomic(run.out / "rejections.csv", rejections_csv(in.panel.rejections));
    const auto summary = ledger::summary_stats(in.panel.samples);
    const std::string csv = ledger::format_summary_csv(summary);
    io::write_file_atomic(run.out / "summary.csv", csv);
    std::cout << csv;
  });
}

int cmd_recover(const RunConfig& run) {
  return guarded("recover", [&] {
    synth::DGPConfig config;
    if (!run.config.empty()) {
      require_file(run.config, "config");
      config = synth::DGPConfig::load(run.config);
    }
    if (run.seed) config.seed = *run.seed;
    synth::RecoveryOptions opts;
    opts.replications = run.replications;
    opts.panel.window_days = run.window_days;
    econ::ModelSpec spec = synth::default_recovery_spec(config);
    spec.se_type = run.se;
    opts.spec = spec;
    const synth::RecoveryReport report = synth::recovery_report(config, opts);
    prepare_out_dir(run.out);
    const std::string csv = synth::format_recovery_csv(report);
    io::write_file_atomic(run.out / "recovery.csv", csv);
    std::cout << csv;
    if (!report.failures.empty())
      log().warn("recover: {} of {} replications failed", report.failures.size(), report.replications);
  });
}

int dispatch(const RunConfig& run) {
  if (run.subcommand == "simulate") return cmd_simulate(run.config, run.out, run.seed);
  if (run.subcommand == "estimate") return cmd_estimate(run);
  if (run.subcommand == "index") return cmd_index(run);
  if (run.subcommand == "trend") return cmd_trend(run);
  if (run.subcommand == "panel") return cmd_panel(run);
  if (run.subcommand == "recover") return cmd_recover(run);
  log().error("unknown subcommand '{}'", run.subcommand);
  return static_cast<int>(ExitCode::config);
}

int main(int argc, const char* const* argv) {
  CLI::App app{"Spatial difference-in-differences toolkit for gridded land markets"};
  app.require_subcommand(1);
  RunConfig run;
  std::string groups = "8..17", meta_cut, treatment, fe, se;
  std::uint64_t seed = 0;

  const std::map<std::string, Treatment> treatments{{"near", Treatment::discrete_near},
                                                    {"logdist", Treatment::continuous_log_distance}};
  const std::map<std::string, FeDimension> fes{{"week", FeDimension::week}, {"day", FeDimension::day}};
  const std::map<std::string, econ::SeType> ses{{"classical", econ::SeType::classical}, {"hc1", econ::SeType::hc1}};

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", run.out, "Output directory"); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Master random seed"); };
  auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--transactions", run.transactions, "Transaction dump (CSV)");
    sub->add_option("--waves", run.waves, "Wave table (JSON)");
    sub->add_option("--rates", run.rates, "Daily USD rates (CSV)");
    sub->add_option("--map", run.map, "Parcel metadata (JSON); defaults to ids derived from the waves");
    sub->add_option("--map-size", run.map_size, "Grid edge length")->check(CLI::PositiveNumber);
    sub->add_option("--window-days", run.window_days, "Event window half-width in days")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--groups", groups, "Announcement groups to keep, A..B or all");
    add_out(sub);
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--treatment", treatment, "Treatment variable")->check(CLI::IsMember({"near", "logdist"}));
    sub->add_option("--fe", fe, "Time fixed effects")->check(CLI::IsMember({"week", "day"}));
    sub->add_option("--se", se, "Standard errors")->check(CLI::IsMember({"classical", "hc1"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic market");
  simulate->add_option("--config", run.config, "DGP config (JSON); defaults when omitted");
  add_seed(simulate);
  add_out(simulate);

  CLI::App* estimate = app.add_subcommand("estimate", "Run the regression battery");
  add_inputs(estimate);
  add_model(estimate);
  estimate->add_flag("--multi", run.multi, "Triple differences for the custom specification");
  estimate->add_option("--meta-cut", meta_cut, "Split the sample at this announcement date (YYYY-MM-DD)");

  CLI::App* index = app.add_subcommand("index", "Hedonic price index");
  add_inputs(index);
  index->add_option("--fe", fe, "Index period")->check(CLI::IsMember({"week", "day"}));

  CLI::App* trend = app.add_subcommand("trend", "Residual event-day means for near and far");
  add_inputs(trend);

  CLI::App* panel = app.add_subcommand("panel", "Write the cleaned event panel and summary statistics");
  add_inputs(panel);

  CLI::App* recover = app.add_subcommand("recover", "Monte Carlo recovery of the planted coefficients");
  recover->add_option("--config", run.config, "DGP config (JSON)");
  recover->add_option("--replications", run.replications, "Number of replications")->check(CLI::PositiveNumber);
  recover->add_option("--window-days", run.window_days, "Event window half-width in days");
  recover->add_option("--se", se, "Standard errors")->check(CLI::IsMember({"classical", "hc1"}));
  add_seed(recover);
  add_out(recover);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  run.subcommand = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->get_option_no_throw("--seed") && sub->count("--seed")) run.seed = seed;
  if (!treatment.empty()) run.treatment = treatments.at(treatment);
  if (!fe.empty()) run.fe = fes.at(fe);
  if (!se.empty()) run.se = ses.at(se);
  const int rc = guarded(run.subcommand.c_str(), [&] {
    run.groups = parse_group_range(groups);
    if (!meta_cut.empty()) {
      try {
        run.meta_cut = parse_date(meta_cut);
      } catch (const Error& e) {
        throw ConfigError(std::string("--meta-cut: ") + e.what());
      }
    }
  });
  if (rc != 0) return rc;
  return dispatch(run);
}

}  // namespace gridhedonic::cli
