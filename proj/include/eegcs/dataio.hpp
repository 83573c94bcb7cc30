#pragma once

#include "eegcs/layout.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace eegcs {

/// Channels x samples, row-major so each channel is contiguous.
using SignalMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr size_t kWindowSamples = 500;
inline constexpr double kScreenWidth = 800.0;
inline constexpr double kScreenHeight = 600.0;

enum class Side : std::uint8_t { left = 0, right = 1 };

struct Event {
  std::uint64_t onset = 0;
  Side lr = Side::left;
  float amplitude = 0.0f;  // saccade amplitude, screen pixels
  float angle = 0.0f;      // saccade direction, radians in (-pi, pi]
  float pos_x = 0.0f;      // gaze position after the saccade, pixels
  float pos_y = 0.0f;
  std::uint32_t subject_id = 0;

  bool operator==(const Event&) const = default;
};

struct Recording {
  std::string layout_name;
  float sample_rate = 500.0f;
  SignalMatrix data;
  std::vector<Event> events;

  size_t channels() const { return static_cast<size_t>(data.rows()); }
  size_t samples() const { return static_cast<size_t>(data.cols()); }
  void validate() const;  // throws FormatError
};

// ---- container ---------------------------------------------------------------

inline constexpr std::uint16_t kContainerVersion = 1;

void write_container(const Recording& rec, std::ostream& out);
void write_container(const Recording& rec, const std::filesystem::path& path);
Recording read_container(std::istream& in);
Recording read_container(const std::filesystem::path& path);

/// Exact byte size of the container written for `rec`.
std::uint64_t container_size(const Recording& rec);

// ---- windowing ---------------------------------------------------------------

struct Window {
  SignalMatrix data;  // channels x kWindowSamples
  Event event;
};

struct WindowedDataset {
  std::vector<Window> windows;
  std::string layout_name;

  size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  size_t channels() const { return windows.empty() ? 0 : static_cast<size_t>(windows.front().data.rows()); }
};

struct WindowingResult {
  WindowedDataset dataset;
  size_t dropped = 0;
};

/// One 1-second window per event starting at its onset. Events whose window
/// would run past the end of the recording are dropped and counted.
WindowingResult window_events(const Recording& rec);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct DatasetSplit {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;
};

/// Partitions subjects (not windows) into train/val/test. Requires at least
/// three distinct subjects; every split receives at least one.
DatasetSplit split_by_subject(const WindowedDataset& ds, SplitRatios ratios, std::uint64_t seed);

// ---- synthetic generator -------------------------------------------------------

struct SyntheticSpec {
  ElectrodeLayout layout;
  int n_events = 2000;
  double snr_db = 5.0;
  double ocular_gain = 1.0;
  double occipital_gain = 0.0;
  double noise_exponent = 1.0;
  std::uint64_t seed = 1;
  int n_subjects = 10;
  float sample_rate = 500.0f;
};

/// Forward model with known ground truth. Each event carries a saccade whose
/// corneo-retinal potential reaches frontal electrodes (gain proportional to
/// sqrt(max(0, y)), antisymmetric in x for the horizontal component) and, optionally,
/// a phase-locked 13-32 Hz burst over occipital electrodes (gain proportional to
/// max(0, -y)) whose size tracks saccade amplitude and whose left/right balance
/// tracks direction. The same neural gain drives a weaker-profiled 18 Hz
/// presaccadic burst over mid-frontal electrodes (frontal eye fields), which
/// survives ocular regression. Per-channel 1/f^a noise is scaled to the
/// requested SNR.
Recording generate_synthetic(const SyntheticSpec& spec);

/// Electrodes that carry ocular signal in generated data: {e : y(e) > 0}.
std::vector<int> ocular_channel_ids(const ElectrodeLayout& layout);

/// Electrodes that carry the occipital burst: {e : y(e) < 0}.
std::vector<int> occipital_channel_ids(const ElectrodeLayout& layout);

}  // namespace eegcs
