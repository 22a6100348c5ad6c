#include "nmn/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"
#include "nmn/harness/csv.hpp"
#include "nmn/trainer/train.hpp"

namespace nmn::harness {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  [[nodiscard]] double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  [[nodiscard]] double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string axes(const Frame& f, const std::string& title, const std::string& xl,
                 const std::string& yl) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  s += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   (kLeft + kWidth - kRight) / 2.0, escape(title));
  s += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\" stroke=\"black\"/>\n",
      kLeft, kHeight - kBottom, kWidth - kRight, kTop);
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4:.4g}</text>\n",
        f.px(xv), kHeight - kBottom, kHeight - kBottom + 5, kHeight - kBottom + 18, xv);
    s += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.4g}</text>\n",
        kLeft - 5, f.py(yv), kLeft, kLeft - 8, f.py(yv) + 4, yv);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                   (kLeft + kWidth - kRight) / 2.0, kHeight - 15, escape(xl));
  s += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      (kTop + kHeight - kBottom) / 2.0, escape(yl));
  return s;
}

std::string legend_entry(std::size_t i, const std::string& label) {
  const double y = kTop + 10.0 + 20.0 * static_cast<double>(i);
  const double x = kWidth - kRight + 15.0;
  return fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"14\" height=\"10\" fill=\"{}\"/>"
      "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
      x, y - 9.0, colour(i), x + 20.0, y, escape(label));
}

}  // namespace

CurveStats aggregate_curves(std::string label, std::span<const std::vector<double>> curves) {
  CurveStats out;
  out.label = std::move(label);
  if (curves.empty()) {
    return out;
  }
  const std::size_t n = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != n) {
      throw DimensionError(fmt::format("curve '{}': seeds have different lengths ({} vs {})",
                                       out.label, c.size(), n));
    }
  }
  const double m = static_cast<double>(curves.size());
  out.mean.resize(n);
  out.std.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& c : curves) s += c[i];
    const double mu = s / m;
    double v = 0.0;
    for (const auto& c : curves) v += (c[i] - mu) * (c[i] - mu);
    out.mean[i] = mu;
    out.std[i] = std::sqrt(v / m);
  }
  return out;
}

std::vector<double> smoothed_returns(const std::filesystem::path& metrics_csv) {
  const auto returns = read_csv(metrics_csv).values("return");
  return trainer::running_mean(returns, trainer::kSmoothingWindow);
}

std::vector<std::filesystem::path> seed_dirs(const std::filesystem::path& group_dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(group_dir)) {
    throw ConfigError(fmt::format("'{}' is not a directory", group_dir.string()));
  }
  for (const auto& entry : std::filesystem::directory_iterator(group_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("seed_", 0) == 0 &&
        std::filesystem::exists(entry.path() / "metrics.csv")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const CurveStats> curves) {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : curves) n = std::min(n, c.mean.size());
  if (curves.empty()) n = 0;
  std::ofstream os(path);
  if (!os) {
    throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  }
  os << "episode";
  for (const auto& c : curves) os << ',' << c.label << "_mean," << c.label << "_std";
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << i;
    for (const auto& c : curves) os << fmt::format(",{},{}", c.mean[i], c.std[i]);
    os << '\n';
  }
}

std::string learning_curves_svg(std::span<const CurveStats> curves, const std::string& title) {
  Frame f{0.0, 1.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : curves) {
    f.x1 = std::max(f.x1, static_cast<double>(c.mean.size()));
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      f.y0 = std::min(f.y0, c.mean[i] - c.std[i]);
      f.y1 = std::max(f.y1, c.mean[i] + c.std[i]);
    }
  }
  if (!std::isfinite(f.y0)) {
    f.y0 = 0.0;
    f.y1 = 1.0;
  }
  widen(f.y0, f.y1);
  std::string s = axes(f, title, "episode", "sum of rewards (running mean)");
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    if (c.mean.empty()) continue;
    // Thin the polyline to at most ~1000 points.
    const std::size_t stride = std::max<std::size_t>(1, c.mean.size() / 1000);
    std::string upper;
    std::string lower;
    std::string line;
    for (std::size_t i = 0; i < c.mean.size(); i += stride) {
      const double x = f.px(static_cast<double>(i));
      upper += fmt::format("{:.2f},{:.2f} ", x, f.py(c.mean[i] + c.std[i]));
      lower.insert(0, fmt::format("{:.2f},{:.2f} ", x, f.py(c.mean[i] - c.std[i])));
      line += fmt::format("{:.2f},{:.2f} ", x, f.py(c.mean[i]));
    }
    s += fmt::format("<polygon points=\"{}{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                     upper, lower, colour(k));
    s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                     line, colour(k));
    s += legend_entry(k, c.label);
  }
  s += "</svg>\n";
  return s;
}

std::string scatter_svg(std::span<const ScatterSeries> series, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  const double inf = std::numeric_limits<double>::infinity();
  Frame f{inf, -inf, inf, -inf};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  }
  if (!std::isfinite(f.x0)) {
    f = Frame{0.0, 1.0, 0.0, 1.0};
  }
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  std::string out = axes(f, title, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                         f.px(s.x[i]), f.py(s.y[i]), colour(k));
    }
    out += legend_entry(k, s.label);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace nmn::harness
