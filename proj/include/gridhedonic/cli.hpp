#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "gridhedonic/calendar.hpp"
#include "gridhedonic/econ.hpp"
#include "gridhedonic/ledger.hpp"

namespace gridhedonic::cli {

struct RunConfig {
  std::string subcommand;
  std::filesystem::path transactions;
  std::filesystem::path waves;
  std::filesystem::path rates;
  std::filesystem::path map;  // optional map metadata
  std::filesystem::path config;  // DGP config for simulate / recover
  std::filesystem::path out = ".";
  int map_size = grid::kDefaultMapSize;

  // Unset options keep the battery defaults; any of treatment, fe or multi
  // adds a "custom" specification to the estimate battery.
  std::optional<econ::Treatment> treatment;
  std::optional<econ::FeDimension> fe;
  econ::SeType se = econ::SeType::classical;
  bool multi = false;
  std::optional<Date> meta_cut;

  int window_days = 7;
  std::optional<ledger::GroupRange> groups = ledger::GroupRange{};
  std::optional<std::uint64_t> seed;
  int replications = 200;
};

// "A..B", or "all" for no filter.
std::optional<ledger::GroupRange> parse_group_range(std::string_view text);

// Each command returns the process exit status; errors are logged, not thrown.
int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<std::uint64_t> seed = std::nullopt);
int cmd_estimate(const RunConfig& run);
int cmd_index(const RunConfig& run);
int cmd_trend(const RunConfig& run);
int cmd_panel(const RunConfig& run);
int cmd_recover(const RunConfig& run);

int dispatch(const RunConfig& run);

// Parses argv and runs the subcommand.
int main(int argc, const char* const* argv);

}  // namespace gridhedonic::cli
