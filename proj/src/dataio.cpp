#include "eegcs/dataio.hpp"

#include "eegcs/binary_io.hpp"
#include "eegcs/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace eegcs {

namespace {

using detail::LeReader;
using detail::LeWriter;

constexpr char kMagic[4] = {'E', 'E', 'G', 'W'};
constexpr std::uint64_t kFixedHeaderBytes = 4 + 2 + 2 + 4 + 8 + 4 + 4 + 4;  // + name bytes
constexpr std::uint64_t kEventBytes = 8 + 1 + 4 * 4 + 4;

bool angle_in_range(float angle) {
  const double a = angle;
  return a > -std::numbers::pi && a <= std::numbers::pi;
}

}  // namespace

void Recording::validate() const {
  if (!(sample_rate > 0.0f) || !std::isfinite(sample_rate)) throw FormatError("sample rate must be positive");
  if (!data.allFinite()) throw FormatError("recording contains non-finite samples");
  for (size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (i > 0 && events[i - 1].onset > e.onset) throw FormatError("events are not sorted by onset");
    if (e.onset >= samples()) throw FormatError("event onset " + std::to_string(e.onset) + " outside recording");
    if (!(e.amplitude >= 0.0f) || !std::isfinite(e.amplitude)) throw FormatError("event amplitude must be >= 0");
    if (!angle_in_range(e.angle)) throw FormatError("event angle outside (-pi, pi]");
    if (!std::isfinite(e.pos_x) || !std::isfinite(e.pos_y)) throw FormatError("event position is not finite");
    if (e.lr != Side::left && e.lr != Side::right) throw FormatError("invalid left/right label");
  }
}

std::uint64_t container_size(const Recording& rec) {
  return kFixedHeaderBytes + rec.layout_name.size() + kEventBytes * rec.events.size() +
         4ull * rec.channels() * rec.samples();
}

void write_container(const Recording& rec, std::ostream& out) {
  rec.validate();
  LeWriter w(out);
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kContainerVersion);
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.channels()));
  w.put<std::uint64_t>(rec.samples());
  w.put_f32(rec.sample_rate);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.layout_name.size()));
  w.put_bytes(rec.layout_name.data(), rec.layout_name.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.events.size()));
  for (const Event& e : rec.events) {
    w.put<std::uint64_t>(e.onset);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.lr));
    w.put_f32(e.amplitude);
    w.put_f32(e.angle);
    w.put_f32(e.pos_x);
    w.put_f32(e.pos_y);
    w.put<std::uint32_t>(e.subject_id);
  }
  if constexpr (std::endian::native == std::endian::little) {
    w.put_bytes(reinterpret_cast<const char*>(rec.data.data()), 4 * static_cast<size_t>(rec.data.size()));
  } else {
    for (Eigen::Index i = 0; i < rec.data.size(); ++i) w.put_f32(rec.data.data()[i]);
  }
  if (!out) throw Error("failed writing container");
}

void write_container(const Recording& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_container(rec, out);
}

Recording read_container(std::istream& in) {
  LeReader r(in);
  char magic[4];
  r.read_exact(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad magic: not an EEGW container");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kContainerVersion) {
    throw FormatError("container version mismatch: file has " + std::to_string(version) + ", expected " +
                      std::to_string(kContainerVersion));
  }
  const auto flags = r.get<std::uint16_t>("flags");
  if (flags != 0) throw FormatError("unsupported container flags " + std::to_string(flags));

  Recording rec;
  const auto n_channels = r.get<std::uint32_t>("channel count");
  const auto n_samples = r.get<std::uint64_t>("sample count");
  rec.sample_rate = r.get_f32("sample rate");
  const auto name_len = r.get<std::uint32_t>("layout name length");
  rec.layout_name.resize(name_len);
  r.read_exact(rec.layout_name.data(), name_len, "layout name");

  const auto n_events = r.get<std::uint32_t>("event count");
  rec.events.reserve(std::min<std::uint32_t>(n_events, 1u << 20));
  for (std::uint32_t i = 0; i < n_events; ++i) {
    Event e;
    e.onset = r.get<std::uint64_t>("event onset");
    const auto lr = r.get<std::uint8_t>("event label");
    if (lr > 1) throw FormatError("invalid left/right label " + std::to_string(lr));
    e.lr = static_cast<Side>(lr);
    e.amplitude = r.get_f32("event amplitude");
    e.angle = r.get_f32("event angle");
    e.pos_x = r.get_f32("event x");
    e.pos_y = r.get_f32("event y");
    e.subject_id = r.get<std::uint32_t>("event subject");
    rec.events.push_back(e);
  }

  rec.data.resize(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_samples));
  const size_t count = static_cast<size_t>(n_channels) * n_samples;
  if constexpr (std::endian::native == std::endian::little) {
    r.read_exact(reinterpret_cast<char*>(rec.data.data()), 4 * count, "samples");
  } else {
    for (size_t i = 0; i < count; ++i) rec.data.data()[i] = r.get_f32("samples");
  }
  if (!rec.data.allFinite()) throw FormatError("non-finite sample in container");
  rec.validate();
  return rec;
}

Recording read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open container " + path.string());
  return read_container(in);
}

WindowingResult window_events(const Recording& rec) {
  WindowingResult result;
  result.dataset.layout_name = rec.layout_name;
  for (const Event& e : rec.events) {
    if (e.onset + kWindowSamples > rec.samples()) {
      ++result.dropped;
      continue;
    }
    Window w;
    w.data = rec.data.middleCols(static_cast<Eigen::Index>(e.onset), kWindowSamples);
    w.event = e;
    result.dataset.windows.push_back(std::move(w));
  }
  return result;
}

DatasetSplit split_by_subject(const WindowedDataset& ds, SplitRatios ratios, std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0)) throw Error("split ratios must be positive");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) throw Error("split ratios must sum to 1");

  std::set<std::uint32_t> subject_set;
  for (const auto& w : ds.windows) subject_set.insert(w.event.subject_id);
  if (subject_set.size() < 3) {
    throw Error("subject split needs at least 3 distinct subjects, found " + std::to_string(subject_set.size()));
  }
  std::vector<std::uint32_t> subjects(subject_set.begin(), subject_set.end());
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);

  const auto n = static_cast<long>(subjects.size());
  long n_train = std::lround(ratios.train * n);
  long n_val = std::lround(ratios.val * n);
  n_train = std::clamp(n_train, 1L, n - 2);
  n_val = std::clamp(n_val, 1L, n - n_train - 1);

  std::map<std::uint32_t, int> assignment;
  for (long i = 0; i < n; ++i) assignment[subjects[static_cast<size_t>(i)]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

  DatasetSplit split;
  for (auto* part : {&split.train, &split.val, &split.test}) part->layout_name = ds.layout_name;
  for (const auto& w : ds.windows) {
    switch (assignment.at(w.event.subject_id)) {
      case 0: split.train.windows.push_back(w); break;
      case 1: split.val.windows.push_back(w); break;
      default: split.test.windows.push_back(w); break;
    }
  }
  return split;
}

std::vector<int> ocular_channel_ids(const ElectrodeLayout& layout) {
  std::vector<int> ids;
  for (const auto& e : layout.electrodes())
    if (e.pos.y > 0.0) ids.push_back(e.id);
  return ids;
}

std::vector<int> occipital_channel_ids(const ElectrodeLayout& layout) {
  std::vector<int> ids;
  for (const auto& e : layout.electrodes())
    if (e.pos.y < 0.0) ids.push_back(e.id);
  return ids;
}

}  // namespace eegcs
