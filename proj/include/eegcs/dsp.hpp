#pragma once

#include "eegcs/dataio.hpp"
#include "eegcs/layout.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace eegcs {

/// Channels x samples in double precision for processing.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kButterworthOrder = 4;

struct BandSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;

  double center() const;  // geometric
  bool operator==(const BandSpec&) const = default;
};

/// broadband 0.5-40, delta 1-4, theta 4-8, alpha 8-13, beta 13-32.
const std::vector<BandSpec>& band_registry();

/// Accepts registry names and `lo-hi` literals. A literal whose edges match a
/// registry entry resolves to that entry.
BandSpec parse_band(std::string_view text);
void validate_band(const BandSpec& band, double sample_rate);

/// Zero-phase Butterworth bandpass applied row by row.
Matrix bandpass(const Matrix& data, double sample_rate, const BandSpec& band);

/// Subtracts the per-sample channel mean.
Matrix average_reference(const Matrix& data);

/// Flatlines plus channels whose high-frequency log-variance deviates from the
/// channel median by more than `z` robust standard deviations. See the .cpp for
/// the statistic.
std::vector<size_t> detect_bad_channels(const Matrix& data, double z);

struct SplineParams {
  int order = 4;
  int legendre_terms = 7;
  double ridge = 1e-5;
};

/// Rows `bad` x good-channel weights of the spherical spline interpolant.
Matrix spline_weights(const ElectrodeLayout& layout, const std::vector<size_t>& bad, const SplineParams& params = {});

/// Replaces bad channels by spherical spline estimates from the good ones.
Matrix spline_interpolate(const ElectrodeLayout& layout, const Matrix& data, const std::vector<size_t>& bad,
                          const SplineParams& params = {});

/// Least-squares regression of every channel on the proxy channels; returns
/// the residuals with the proxies zeroed.
Matrix remove_ocular(const Matrix& data, const ElectrodeLayout& layout, const std::vector<int>& proxy_ids);

/// Proxies used when a config does not name any: the four peri-ocular
/// electrodes for egi129, otherwise the most frontal mirrored pair.
std::vector<int> default_ocular_proxies(const ElectrodeLayout& layout);

enum class Regime { minimal, maximal };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view text);

struct PreprocessConfig {
  Regime regime = Regime::minimal;
  BandSpec band = {"broadband", 0.5, 40.0};
  double bad_channel_z = 5.0;
  std::vector<int> ocular_proxy_ids;  // maximal only; empty selects defaults
};

struct Preprocessed {
  Recording recording;
  std::vector<size_t> interpolated;  // channel indices repaired by the spline
};

/// minimal: detect_bad_channels -> spline_interpolate -> bandpass -> average_reference
/// maximal: minimal followed by remove_ocular. Events pass through unchanged.
Preprocessed preprocess(const Recording& rec, const ElectrodeLayout& layout, const PreprocessConfig& cfg);

Matrix to_matrix(const SignalMatrix& data);
SignalMatrix to_signal(const Matrix& data);

}  // namespace eegcs
