#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eegcs {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// One scalp electrode. Head-centred unit-sphere coordinates: x right, y front, z up.
struct Electrode {
  int id = 0;
  Vec3 pos;
  std::string name;
  int partner_id = 0;  // mirror counterpart across x = 0; equals id on the midline
};

/// Ordered electrode set. The position of an electrode in this list is its row
/// index in every data matrix recorded with the layout.
///
/// Construction validates ids, unit length, the partner involution and the
/// mirror geometry; a constructed layout is immutable.
class ElectrodeLayout {
 public:
  static constexpr double kUnitTolerance = 1e-9;
  static constexpr double kMirrorTolerance = 1e-6;

  ElectrodeLayout() = default;
  ElectrodeLayout(std::string name, std::vector<Electrode> electrodes);

  const std::string& name() const { return name_; }
  std::span<const Electrode> electrodes() const { return electrodes_; }
  size_t size() const { return electrodes_.size(); }
  const Electrode& operator[](size_t index) const { return electrodes_[index]; }

  bool contains(int id) const { return index_.count(id) != 0; }
  std::optional<size_t> find(int id) const;
  size_t index_of(int id) const;  // throws LayoutError for unknown ids
  const Electrode& by_id(int id) const { return electrodes_[index_of(id)]; }
  int partner(int id) const { return by_id(id).partner_id; }

  std::vector<int> ids() const;
  std::vector<size_t> indices_of(std::span<const int> ids) const;

 private:
  std::string name_;
  std::vector<Electrode> electrodes_;
  std::unordered_map<int, size_t> index_;
};

ElectrodeLayout parse_layout(std::istream& in, std::string name);
ElectrodeLayout load_layout(const std::filesystem::path& path);
void write_layout(std::ostream& out, const ElectrodeLayout& layout);

/// Mirrored electrode pairs on a ring at 60 degrees from the vertex, pair k at
/// azimuth pi*(k+0.5)/pairs from the nose towards the right ear, followed by
/// midline electrodes stepping from the vertex towards the back in 60/midline
/// degree increments. Right electrode of pair k has id 2k+1, left 2k+2.
ElectrodeLayout synthetic_grid_layout(int pairs, int midline);

/// Resolves `egi129`, `grid<P>x<M>` (e.g. grid8x2) or a path to a layout file.
ElectrodeLayout resolve_layout(std::string_view name_or_path);
std::filesystem::path bundled_layout_dir();

struct ProjectedElectrode {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Azimuthal equidistant projection around the vertex: radius is the polar
/// angle divided by pi/2, so the equator lands on the unit circle.
std::vector<ProjectedElectrode> project2d(const ElectrodeLayout& layout);

}  // namespace eegcs
