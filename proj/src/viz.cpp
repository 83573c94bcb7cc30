#include "eegcs/viz.hpp"

#include "eegcs/error.hpp"
#include "eegcs/textio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

namespace eegcs {

namespace {

constexpr double kCanvas = 400.0;
constexpr double kMargin = 30.0;

std::string num(double v) { return format_fixed(v, 2); }

std::array<int, 3> rgb_of(const std::string& hex) {
  return {std::stoi(hex.substr(1, 2), nullptr, 16), std::stoi(hex.substr(3, 2), nullptr, 16),
          std::stoi(hex.substr(5, 2), nullptr, 16)};
}

std::string bucket_colour(int bucket) {
  const auto& stops = colour_ramp_stops();
  const double u = (bucket + 0.5) / kColourBuckets * static_cast<double>(stops.size() - 1);
  const size_t i = std::min(static_cast<size_t>(u), stops.size() - 2);
  const double f = u - static_cast<double>(i);
  const auto a = rgb_of(stops[i]);
  const auto b = rgb_of(stops[i + 1]);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(a[0] + f * (b[0] - a[0]))),
                static_cast<int>(std::lround(a[1] + f * (b[1] - a[1]))),
                static_cast<int>(std::lround(a[2] + f * (b[2] - a[2]))));
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& colour_ramp_stops() {
  static const std::vector<std::string> stops = {"#440154", "#482878", "#3e4989", "#31688e", "#26828e",
                                                  "#1f9e89", "#35b779", "#6ece58", "#b5de2b", "#fde725"};
  return stops;
}

void TopoplotSpec::validate() const {
  if (grid_resolution < 16) throw Error("topoplot grid resolution must be >= 16");
  if (!(floor_ratio > 0.0)) throw Error("topoplot floor must be positive");
  map.validate();
  if (map.ids != layout.ids())
    throw LayoutError("importance map (" + map.layout_name + ") is not indexed like layout " + layout.name());
}

int TopoField::pixel_of(double x, double y) const {
  const double px = (x / radius + 1.0) / 2.0 * resolution;
  const double py = (1.0 - y / radius) / 2.0 * resolution;
  const int ix = static_cast<int>(std::floor(px));
  const int iy = static_cast<int>(std::floor(py));
  if (ix < 0 || iy < 0 || ix >= resolution || iy >= resolution) return -1;
  const int p = iy * resolution + ix;
  return bucket[static_cast<size_t>(p)] < 0 ? -1 : p;
}

int colour_bucket(double value, double lo, double hi, bool log_scale, double floor) {
  const double v = log_scale ? std::log10(std::max(value, floor)) : std::max(value, floor);
  if (!(hi > lo)) return kColourBuckets - 1;
  const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return std::min(kColourBuckets - 1, static_cast<int>(std::floor(u * kColourBuckets)));
}

TopoField topoplot_field(const TopoplotSpec& spec) {
  spec.validate();
  const auto pts = project2d(spec.layout);
  const auto& scores = spec.map.scores;
  const double max_score = *std::max_element(scores.begin(), scores.end());
  if (!(max_score > 0.0)) throw Error("topoplot of an all-zero map");
  const double floor = spec.floor_ratio * max_score;

  TopoField f;
  f.resolution = spec.grid_resolution;
  f.radius = 1.0;
  for (const auto& p : pts) f.radius = std::max(f.radius, std::hypot(p.x, p.y) * 1.05);
  f.lo = spec.log_scale ? std::log10(floor) : floor;
  f.hi = spec.log_scale ? std::log10(max_score) : max_score;

  const int n = f.resolution;
  f.value.assign(static_cast<size_t>(n * n), 0.0);
  f.bucket.assign(static_cast<size_t>(n * n), -1);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = ((ix + 0.5) / n * 2.0 - 1.0) * f.radius;
      const double y = (1.0 - (iy + 0.5) / n * 2.0) * f.radius;
      if (std::hypot(x, y) > f.radius) continue;
      double num_sum = 0.0, den = 0.0, exact = -1.0;
      for (size_t i = 0; i < pts.size(); ++i) {
        const double d2 = (pts[i].x - x) * (pts[i].x - x) + (pts[i].y - y) * (pts[i].y - y);
        if (d2 < 1e-24) {
          exact = scores[i];
          break;
        }
        num_sum += scores[i] / d2;
        den += 1.0 / d2;
      }
      const double v = exact >= 0.0 ? exact : num_sum / den;
      const size_t p = static_cast<size_t>(iy * n + ix);
      f.value[p] = v;
      f.bucket[p] = colour_bucket(v, f.lo, f.hi, spec.log_scale, floor);
    }
  return f;
}

std::string topoplot_svg(const TopoplotSpec& spec) {
  const TopoField field = topoplot_field(spec);
  const auto pts = project2d(spec.layout);
  const double plot = kCanvas - 2 * kMargin;
  const double cx = kCanvas / 2, cy = kCanvas / 2;
  const double scale = plot / 2 / field.radius;
  const double cell = plot / field.resolution;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kCanvas) << "\" height=\"" << num(kCanvas + 40)
      << "\" viewBox=\"0 0 " << num(kCanvas) << ' ' << num(kCanvas + 40) << "\">\n";
  if (!spec.title.empty())
    out << "<text x=\"" << num(cx) << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << xml_escape(spec.title) << "</text>\n";
  out << "<g class=\"field\" shape-rendering=\"crispEdges\">\n";
  const int n = field.resolution;
  for (int iy = 0; iy < n; ++iy) {
    int ix = 0;
    while (ix < n) {
      const int b = field.bucket[static_cast<size_t>(iy * n + ix)];
      int run = 1;
      while (ix + run < n && field.bucket[static_cast<size_t>(iy * n + ix + run)] == b) ++run;
      if (b >= 0)
        out << "<rect x=\"" << num(kMargin + ix * cell) << "\" y=\"" << num(kMargin + iy * cell) << "\" width=\""
            << num(run * cell) << "\" height=\"" << num(cell) << "\" fill=\"" << bucket_colour(b) << "\"/>\n";
      ix += run;
    }
  }
  out << "</g>\n";
  // Head outline at the equator, nose towards +y.
  const double head_r = scale;
  out << "<circle class=\"head\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(head_r)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  out << "<polyline class=\"nose\" points=\"" << num(cx - 0.08 * head_r) << ',' << num(cy - 0.99 * head_r) << ' '
      << num(cx) << ',' << num(cy - 1.1 * head_r) << ' ' << num(cx + 0.08 * head_r) << ',' << num(cy - 0.99 * head_r)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  out << "<g class=\"electrodes\">\n";
  for (size_t i = 0; i < pts.size(); ++i)
    out << "<circle data-id=\"" << pts[i].id << "\" cx=\"" << num(cx + pts[i].x * scale) << "\" cy=\""
        << num(cy - pts[i].y * scale) << "\" r=\"2\" fill=\"black\"/>\n";
  out << "</g>\n";
  // Colour bar.
  out << "<g class=\"colourbar\">\n";
  const double bar_w = plot / kColourBuckets;
  for (int b = 0; b < kColourBuckets; ++b)
    out << "<rect x=\"" << num(kMargin + b * bar_w) << "\" y=\"" << num(kCanvas + 5) << "\" width=\"" << num(bar_w)
        << "\" height=\"12\" fill=\"" << bucket_colour(b) << "\"/>\n";
  const auto label = [&](double v) {
    return spec.log_scale ? "1e" + format_fixed(v, 1) : format_fixed(v, 4);
  };
  out << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kCanvas + 32)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << label(field.lo) << "</text>\n";
  out << "<text x=\"" << num(kCanvas - kMargin) << "\" y=\"" << num(kCanvas + 32)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << label(field.hi) << "</text>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string band_bar_svg(const BenchmarkResult& result) {
  if (result.records.empty()) throw Error("no results to plot");
  const std::string task = result.records.front().task;
  for (const RunRecord& r : result.records)
    if (r.task != task) throw Error("band plot needs a single task, found " + task + " and " + r.task);

  struct Bar {
    std::string band;
    double lo = 0.0;
    double mean = 0.0;
    double std = 0.0;
  };
  std::map<std::string, std::vector<double>> by_band;
  for (const RunRecord& r : result.records)
    if (r.ok()) by_band[r.band].push_back(r.metric);
  std::vector<Bar> bars;
  for (const auto& [band, v] : by_band) {
    Bar b;
    b.band = band;
    b.lo = parse_band(band).lo;
    for (double x : v) b.mean += x;
    b.mean /= static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - b.mean) * (x - b.mean);
      b.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    bars.push_back(b);
  }
  if (bars.empty()) throw Error("every run failed; nothing to plot");
  std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) { return a.lo < b.lo; });

  double y_max = 100.0;
  if (task != "lr") {
    y_max = 0.0;
    for (const Bar& b : bars) y_max = std::max(y_max, b.mean + b.std);
    y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;
  }
  const double width = 120.0 + 80.0 * static_cast<double>(bars.size());
  const double plot_h = 300.0, top = 30.0, left = 60.0;
  const double base = top + plot_h;
  const auto y_of = [&](double v) { return base - v / y_max * plot_h; };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(base + 50)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(base + 50) << "\">\n";
  out << "<g class=\"axis\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(base)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(base) << "\" x2=\"" << num(width - 20) << "\" y2=\""
      << num(base) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max * i / 4.0;
    out << "<text x=\"" << num(left - 5) << "\" y=\"" << num(y_of(v) + 3) << "\" text-anchor=\"end\">"
        << format_fixed(v, task == "lr" ? 0 : 2) << "</text>\n";
  }
  out << "<text class=\"ylabel\" x=\"12\" y=\"" << num(top + plot_h / 2) << "\" transform=\"rotate(-90 12 "
      << num(top + plot_h / 2) << ")\" text-anchor=\"middle\">" << xml_escape(task) << "</text>\n";
  out << "</g>\n<g class=\"bars\">\n";
  for (size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double x = left + 20.0 + 80.0 * static_cast<double>(i);
    const double h = b.mean / y_max * plot_h;
    out << "<rect class=\"bar\" data-band=\"" << xml_escape(b.band) << "\" x=\"" << num(x) << "\" y=\""
        << num(base - h) << "\" width=\"50.00\" height=\"" << num(h) << "\" fill=\"#31688e\"/>\n";
    if (b.std > 0.0)
      out << "<line class=\"whisker\" x1=\"" << num(x + 25) << "\" y1=\"" << num(y_of(b.mean - b.std)) << "\" x2=\""
          << num(x + 25) << "\" y2=\"" << num(y_of(b.mean + b.std)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(x + 25) << "\" y=\"" << num(base + 15)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(b.band)
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace eegcs
