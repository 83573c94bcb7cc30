#pragma once
// Shared fixtures for the unit tests.

#include "eegcs/dataio.hpp"
#include "eegcs/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace eegcs::test {

inline std::vector<double> sine(double freq, double fs, size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

inline Matrix noise_matrix(size_t rows, size_t cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

/// Recording with Gaussian samples and `n_events` random valid events.
inline Recording random_recording(size_t channels, size_t samples, size_t n_events, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 10.0f);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Recording rec;
  rec.layout_name = "rand" + std::to_string(seed % 1000);
  rec.sample_rate = 500.0f;
  rec.data.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples));
  for (Eigen::Index i = 0; i < rec.data.size(); ++i) rec.data.data()[i] = g(rng);
  std::vector<std::uint64_t> onsets;
  for (size_t i = 0; i < n_events; ++i) onsets.push_back(rng() % samples);
  std::sort(onsets.begin(), onsets.end());
  for (auto onset : onsets) {
    Event e;
    e.onset = onset;
    e.lr = u(rng) < 0.5f ? Side::left : Side::right;
    e.amplitude = 600.0f * u(rng);
    e.angle = static_cast<float>(std::numbers::pi) * (1.0f - 2.0f * u(rng));
    if (e.angle <= -static_cast<float>(std::numbers::pi)) e.angle = 0.0f;
    e.pos_x = 800.0f * u(rng);
    e.pos_y = 600.0f * u(rng);
    e.subject_id = static_cast<std::uint32_t>(rng() % 5);
    rec.events.push_back(e);
  }
  return rec;
}

inline std::string bytes_of(const Recording& rec) {
  std::ostringstream out(std::ios::binary);
  write_container(rec, out);
  return out.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("eegcs_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Compares against a frozen snapshot in tests/golden. Set EEGCS_UPDATE_GOLDEN=1
/// to rewrite the snapshot instead.
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const std::filesystem::path path = std::filesystem::path(EEGCS_GOLDEN_DIR) / name;
  if (std::getenv("EEGCS_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
    return true;
  }
  return std::filesystem::exists(path) && read_file(path) == actual;
}

}  // namespace eegcs::test
