#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace cbjj::cli {

/// Efficiency the dataset generator uses for a pulse of n_gamma photons on a
/// well n_level deep.
double generator_efficiency(const RunConfig& config, double n_gamma, double n_level, double width);

struct FitOptions {
  std::string model = "auto";  // auto | exponential | rf | low-dark
  double bin_width_ms = 0.0;   // 0: automatic
};

// Each command writes its bundle into `out` and returns the process exit code.
int cmd_rate_curve(const RunConfig& config, const std::filesystem::path& out, bool save_datasets = false);
int cmd_efficiency_scan(const RunConfig& config, const std::filesystem::path& out, bool save_datasets = false);
int cmd_pulse_width_scan(const RunConfig& config, const std::filesystem::path& out, bool save_datasets = false);
int cmd_boundary_map(const RunConfig& config, const std::filesystem::path& out);
int cmd_sensitivity(const RunConfig& config, const std::filesystem::path& out);
int cmd_fit(const RunConfig& config, const std::vector<std::string>& datasets, const FitOptions& options,
            const std::filesystem::path& out);

}  // namespace cbjj::cli
