#include "eegcs/layout.hpp"

#include "eegcs/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <regex>
#include <sstream>

namespace eegcs {

ElectrodeLayout::ElectrodeLayout(std::string name, std::vector<Electrode> electrodes)
    : name_(std::move(name)), electrodes_(std::move(electrodes)) {
  if (electrodes_.empty()) throw LayoutError("layout '" + name_ + "' has no electrodes");

  for (size_t i = 0; i < electrodes_.size(); ++i) {
    const Electrode& e = electrodes_[i];
    if (e.id <= 0) throw LayoutError("electrode id must be positive, got " + std::to_string(e.id));
    if (!index_.emplace(e.id, i).second) throw LayoutError("duplicate electrode id " + std::to_string(e.id));
  }

  for (const Electrode& e : electrodes_) {
    const double norm = std::sqrt(dot(e.pos, e.pos));
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
      throw LayoutError("electrode " + std::to_string(e.id) + " is not on the unit sphere (|pos| = " +
                        std::to_string(norm) + ")");
    }
    auto it = index_.find(e.partner_id);
    if (it == index_.end()) {
      throw LayoutError("electrode " + std::to_string(e.id) + " names missing partner " +
                        std::to_string(e.partner_id));
    }
    const Electrode& p = electrodes_[it->second];
    if (p.partner_id != e.id) {
      throw LayoutError("partner relation is not an involution: partner(" + std::to_string(e.id) + ") = " +
                        std::to_string(p.id) + " but partner(" + std::to_string(p.id) + ") = " +
                        std::to_string(p.partner_id));
    }
    if (std::abs(p.pos.x + e.pos.x) > kMirrorTolerance || std::abs(p.pos.y - e.pos.y) > kMirrorTolerance ||
        std::abs(p.pos.z - e.pos.z) > kMirrorTolerance) {
      throw LayoutError("electrode " + std::to_string(p.id) + " is not the mirror image of " +
                        std::to_string(e.id));
    }
  }
}

std::optional<size_t> ElectrodeLayout::find(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t ElectrodeLayout::index_of(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LayoutError("electrode " + std::to_string(id) + " not in layout '" + name_ + "'");
  return it->second;
}

std::vector<int> ElectrodeLayout::ids() const {
  std::vector<int> out;
  out.reserve(electrodes_.size());
  for (const auto& e : electrodes_) out.push_back(e.id);
  return out;
}

std::vector<size_t> ElectrodeLayout::indices_of(std::span<const int> ids) const {
  std::vector<size_t> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(index_of(id));
  return out;
}

ElectrodeLayout parse_layout(std::istream& in, std::string name) {
  std::vector<Electrode> electrodes;
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    Electrode e;
    if (!(fields >> e.id)) {
      // blank or comment-only lines
      std::istringstream probe(raw);
      std::string tok;
      if (probe >> tok) throw ParseError("expected integer electrode id, got '" + tok + "'", line_no);
      continue;
    }
    if (!(fields >> e.pos.x >> e.pos.y >> e.pos.z >> e.name >> e.partner_id)) {
      throw ParseError("expected 'id x y z name partner_id'", line_no);
    }
    std::string extra;
    if (fields >> extra) throw ParseError("unexpected trailing field '" + extra + "'", line_no);
    electrodes.push_back(std::move(e));
  }
  return ElectrodeLayout(std::move(name), std::move(electrodes));
}

ElectrodeLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open layout file " + path.string());
  return parse_layout(in, path.stem().string());
}

void write_layout(std::ostream& out, const ElectrodeLayout& layout) {
  out << "# " << layout.name() << "\n# id x y z name partner_id\n";
  out << std::setprecision(17);
  for (const auto& e : layout.electrodes()) {
    out << e.id << ' ' << e.pos.x << ' ' << e.pos.y << ' ' << e.pos.z << ' ' << e.name << ' ' << e.partner_id
        << '\n';
  }
}

ElectrodeLayout synthetic_grid_layout(int pairs, int midline) {
  if (pairs < 1) throw LayoutError("grid layout needs at least one electrode pair");
  if (midline < 0) throw LayoutError("midline electrode count must be nonnegative");

  constexpr double kRingPolar = std::numbers::pi / 3.0;
  std::vector<Electrode> electrodes;
  electrodes.reserve(static_cast<size_t>(2 * pairs + midline));

  for (int k = 0; k < pairs; ++k) {
    const double azimuth = std::numbers::pi * (k + 0.5) / pairs;
    double y = std::sin(kRingPolar) * std::cos(azimuth);
    if (std::abs(y) < 1e-12) y = 0.0;
    const double x = std::sin(kRingPolar) * std::sin(azimuth);
    const double z = std::cos(kRingPolar);
    const int right = 2 * k + 1;
    const int left = 2 * k + 2;
    electrodes.push_back({right, {x, y, z}, "R" + std::to_string(k + 1), left});
    electrodes.push_back({left, {-x, y, z}, "L" + std::to_string(k + 1), right});
  }
  for (int k = 0; k < midline; ++k) {
    const double polar = kRingPolar * k / midline;
    const int id = 2 * pairs + k + 1;
    double y = -std::sin(polar);
    if (std::abs(y) < 1e-12) y = 0.0;
    electrodes.push_back({id, {0.0, y, std::cos(polar)}, "M" + std::to_string(k + 1), id});
  }
  return ElectrodeLayout("grid" + std::to_string(pairs) + "x" + std::to_string(midline), std::move(electrodes));
}

std::filesystem::path bundled_layout_dir() {
  if (const char* env = std::getenv("EEGCS_DATA_DIR")) return env;
  return EEGCS_DATA_DIR;
}

ElectrodeLayout resolve_layout(std::string_view name_or_path) {
  static const std::regex grid_re(R"(grid(\d+)x(\d+))");
  const std::string s(name_or_path);
  std::smatch m;
  if (std::regex_match(s, m, grid_re)) return synthetic_grid_layout(std::stoi(m[1]), std::stoi(m[2]));

  const std::filesystem::path as_path(s);
  if (std::filesystem::exists(as_path)) return load_layout(as_path);
  const auto bundled = bundled_layout_dir() / (s + ".layout");
  if (std::filesystem::exists(bundled)) return load_layout(bundled);
  throw LayoutError("unknown layout '" + s + "' (expected egi129, grid<P>x<M> or a layout file)");
}

std::vector<ProjectedElectrode> project2d(const ElectrodeLayout& layout) {
  std::vector<ProjectedElectrode> out;
  out.reserve(layout.size());
  for (const auto& e : layout.electrodes()) {
    const double polar = std::acos(std::clamp(e.pos.z, -1.0, 1.0));
    const double planar = std::hypot(e.pos.x, e.pos.y);
    ProjectedElectrode p{e.id, 0.0, 0.0};
    if (planar > 0.0) {
      const double radius = polar / (std::numbers::pi / 2.0);
      p.x = radius * e.pos.x / planar;
      p.y = radius * e.pos.y / planar;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace eegcs
