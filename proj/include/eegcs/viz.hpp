#pragma once

#include "eegcs/bench.hpp"
#include "eegcs/layout.hpp"
#include "eegcs/saliency.hpp"

#include <string>
#include <vector>

namespace eegcs {

struct TopoplotSpec {
  ElectrodeLayout layout;
  ImportanceMap map;
  bool log_scale = true;
  int grid_resolution = 128;
  double floor_ratio = 1e-4;  // log floor relative to the largest score
  std::string title;

  void validate() const;
};

/// Fixed colour ramp stops, low to high.
const std::vector<std::string>& colour_ramp_stops();
inline constexpr int kColourBuckets = 64;

/// Interpolated scalar field on a grid_resolution^2 raster covering the head
/// disc. Pixels outside the disc hold bucket -1.
struct TopoField {
  int resolution = 0;
  double radius = 1.0;          // disc radius in projected units
  std::vector<double> value;    // IDW of scores, row-major from the top-left
  std::vector<int> bucket;      // colour bucket per pixel
  double lo = 0.0, hi = 0.0;    // colour scale limits after the optional log

  int pixel_of(double x, double y) const;  // projected coordinates -> pixel index, -1 outside
};

TopoField topoplot_field(const TopoplotSpec& spec);

/// Colour bucket of a field value under the scale [lo, hi] (after log, if enabled).
int colour_bucket(double value, double lo, double hi, bool log_scale, double floor);

std::string topoplot_svg(const TopoplotSpec& spec);

/// Bars of mean accuracy (or error) per band, ascending by lower edge, with
/// sample-std whiskers. The result must hold a single task.
std::string band_bar_svg(const BenchmarkResult& result);

}  // namespace eegcs
