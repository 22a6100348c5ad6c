#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nmn::harness {

/// Mean and population standard deviation across seeds, per episode.
struct CurveStats {
  std::string label;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Curves must share a length; throws DimensionError otherwise.
CurveStats aggregate_curves(std::string label, std::span<const std::vector<double>> curves);

/// Smoothed return curve (window kSmoothingWindow) recomputed from the
/// raw "return" column of a run directory's metrics.csv.
std::vector<double> smoothed_returns(const std::filesystem::path& metrics_csv);

/// Every seed_* directory under `group_dir` that holds a metrics.csv, sorted.
std::vector<std::filesystem::path> seed_dirs(const std::filesystem::path& group_dir);

/// episode,<label>_mean,<label>_std,... truncated to the shortest curve.
void write_curves_csv(const std::filesystem::path& path, std::span<const CurveStats> curves);

/// Mean lines with +-std bands, axes and a legend.
std::string learning_curves_svg(std::span<const CurveStats> curves, const std::string& title);

struct ScatterSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string scatter_svg(std::span<const ScatterSeries> series, const std::string& title,
                        const std::string& x_label, const std::string& y_label);

}  // namespace nmn::harness
