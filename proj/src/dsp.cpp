#include "eegcs/dsp.hpp"

#include "eegcs/error.hpp"
#include "eegcs/filter.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace eegcs {

namespace {

// Floor on the robust scale of channel log-variances. Without it a montage of
// near-identical channels has MAD ~ 0 and any genuine signal difference reads
// as an outlier.
constexpr double kMinLogVarScale = 0.1;
constexpr int kBadChannelDiffOrder = 3;

double median(std::vector<double> v) {
  const size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double upper = v[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2));
  return 0.5 * (lower + upper);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("invalid number '" + std::string(s) + "'");
  return v;
}

double spline_kernel(double cos_angle, const SplineParams& p) {
  const double x = std::clamp(cos_angle, -1.0, 1.0);
  double p_prev = 1.0;
  double p_cur = x;
  double sum = 0.0;
  for (int n = 1; n <= p.legendre_terms; ++n) {
    const double nn = static_cast<double>(n) * (n + 1);
    sum += (2.0 * n + 1.0) / std::pow(nn, p.order) * p_cur;
    const double p_next = ((2.0 * n + 1.0) * x * p_cur - n * p_prev) / (n + 1.0);
    p_prev = p_cur;
    p_cur = p_next;
  }
  return sum / (4.0 * std::numbers::pi);
}

}  // namespace

double BandSpec::center() const { return std::sqrt(lo * hi); }

const std::vector<BandSpec>& band_registry() {
  static const std::vector<BandSpec> registry = {
      {"broadband", 0.5, 40.0}, {"delta", 1.0, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 13.0}, {"beta", 13.0, 32.0},
  };
  return registry;
}

BandSpec parse_band(std::string_view text) {
  for (const auto& b : band_registry())
    if (b.name == text) return b;
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0) {
    throw Error("unknown band '" + std::string(text) + "' (expected broadband, delta, theta, alpha, beta or lo-hi)");
  }
  BandSpec band{std::string(text), parse_double(text.substr(0, dash)), parse_double(text.substr(dash + 1))};
  if (!(band.lo > 0.0 && band.lo < band.hi)) throw Error("band '" + band.name + "' needs 0 < lo < hi");
  for (const auto& b : band_registry())
    if (b.lo == band.lo && b.hi == band.hi) return b;
  return band;
}

void validate_band(const BandSpec& band, double sample_rate) {
  if (!(band.lo > 0.0 && band.lo < band.hi && band.hi < sample_rate / 2.0)) {
    throw Error("band '" + band.name + "' outside (0, Nyquist) for sample rate " + std::to_string(sample_rate));
  }
}

namespace {

// In-place implementations shared by the public Matrix functions and by
// preprocess(), which works directly on float storage to keep peak memory
// near one copy of the recording. Arithmetic is always in double.

constexpr Eigen::Index kColumnBlock = 1 << 14;

template <typename Mat>
void bandpass_inplace(Mat& data, double sample_rate, const BandSpec& band) {
  validate_band(band, sample_rate);
  if (!data.allFinite()) throw NumericError("bandpass input contains non-finite values");
  const Sos sos = butterworth_bandpass(kButterworthOrder, band.lo, band.hi, sample_rate);
  std::vector<double> row(static_cast<size_t>(data.cols()));
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    std::copy(data.row(c).data(), data.row(c).data() + data.cols(), row.begin());
    const auto filtered = sosfiltfilt(sos, row);
    std::transform(filtered.begin(), filtered.end(), data.row(c).data(),
                   [](double v) { return static_cast<typename Mat::Scalar>(v); });
  }
}

template <typename Mat>
void average_reference_inplace(Mat& data) {
  if (data.rows() < 2) throw Error("average reference needs at least 2 channels");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(data.cols());
  for (Eigen::Index c = 0; c < data.rows(); ++c) mean += data.row(c).template cast<double>();
  mean /= static_cast<double>(data.rows());
  for (Eigen::Index c = 0; c < data.rows(); ++c)
    data.row(c) = (data.row(c).template cast<double>() - mean).template cast<typename Mat::Scalar>();
}

std::vector<size_t> unique_sorted(std::vector<size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <typename Mat>
void spline_interpolate_inplace(const ElectrodeLayout& layout, Mat& data, const std::vector<size_t>& bad,
                                const SplineParams& params) {
  if (static_cast<size_t>(data.rows()) != layout.size()) {
    throw ShapeError("data has " + std::to_string(data.rows()) + " channels, layout has " + std::to_string(layout.size()));
  }
  if (bad.empty()) return;
  const Matrix weights = spline_weights(layout, bad, params);
  const std::vector<size_t> sorted_bad = unique_sorted(bad);
  std::vector<Eigen::Index> good;
  for (size_t i = 0; i < layout.size(); ++i)
    if (!std::binary_search(sorted_bad.begin(), sorted_bad.end(), i)) good.push_back(static_cast<Eigen::Index>(i));

  for (Eigen::Index start = 0; start < data.cols(); start += kColumnBlock) {
    const Eigen::Index width = std::min(kColumnBlock, data.cols() - start);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(good.size()), width);
    for (size_t j = 0; j < good.size(); ++j)
      block.row(static_cast<Eigen::Index>(j)) = data.row(good[j]).segment(start, width).template cast<double>();
    const Eigen::MatrixXd estimates = weights * block;
    for (size_t t = 0; t < sorted_bad.size(); ++t)
      data.row(static_cast<Eigen::Index>(sorted_bad[t])).segment(start, width) =
          estimates.row(static_cast<Eigen::Index>(t)).template cast<typename Mat::Scalar>();
  }
}

template <typename Mat>
void remove_ocular_inplace(Mat& data, const ElectrodeLayout& layout, const std::vector<int>& proxy_ids) {
  if (proxy_ids.empty()) throw Error("ocular removal needs at least one proxy channel");
  if (static_cast<size_t>(data.rows()) != layout.size()) throw ShapeError("data rows do not match layout");
  const auto idx = unique_sorted(layout.indices_of(proxy_ids));
  const auto k = static_cast<Eigen::Index>(idx.size());
  const auto proxy_row = [&](Eigen::Index i) { return data.row(static_cast<Eigen::Index>(idx[static_cast<size_t>(i)])); };

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(data.rows(), k);  // C x k
  for (Eigen::Index start = 0; start < data.cols(); start += kColumnBlock) {
    const Eigen::Index width = std::min(kColumnBlock, data.cols() - start);
    Eigen::MatrixXd proxies(k, width);
    for (Eigen::Index i = 0; i < k; ++i) proxies.row(i) = proxy_row(i).segment(start, width).template cast<double>();
    gram += proxies * proxies.transpose();
    for (Eigen::Index c = 0; c < data.rows(); ++c)
      cross.row(c) += data.row(c).segment(start, width).template cast<double>() * proxies.transpose();
  }

  const Eigen::VectorXd diag = gram.diagonal();
  if ((diag.array() <= 0.0).any()) throw NumericError("ocular proxy block is rank deficient (zero proxy channel)");
  const Eigen::VectorXd inv_sd = diag.array().rsqrt();
  const Eigen::MatrixXd corr = inv_sd.asDiagonal() * gram * inv_sd.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-10 * eig.eigenvalues().maxCoeff()) {
    throw NumericError("ocular proxy block is rank deficient (collinear proxies)");
  }
  const Eigen::MatrixXd beta = gram.ldlt().solve(cross.transpose()).transpose();

  // Proxy rows are read by every residual, so they are cleared last.
  for (Eigen::Index start = 0; start < data.cols(); start += kColumnBlock) {
    const Eigen::Index width = std::min(kColumnBlock, data.cols() - start);
    Eigen::MatrixXd proxies(k, width);
    for (Eigen::Index i = 0; i < k; ++i) proxies.row(i) = proxy_row(i).segment(start, width).template cast<double>();
    for (Eigen::Index c = 0; c < data.rows(); ++c) {
      if (std::binary_search(idx.begin(), idx.end(), static_cast<size_t>(c))) continue;
      data.row(c).segment(start, width) =
          (data.row(c).segment(start, width).template cast<double>() - beta.row(c) * proxies)
              .template cast<typename Mat::Scalar>();
    }
  }
  for (size_t i : idx) data.row(static_cast<Eigen::Index>(i)).setZero();
}

}  // namespace

Matrix bandpass(const Matrix& data, double sample_rate, const BandSpec& band) {
  Matrix out = data;
  bandpass_inplace(out, sample_rate, band);
  return out;
}

Matrix average_reference(const Matrix& data) {
  Matrix out = data;
  average_reference_inplace(out);
  return out;
}

// Statistic: log-variance of the third difference of each channel. Differencing
// weights the spectrum by (2 sin(pi f / fs))^6, which suppresses slow, spatially
// smooth physiology (ocular potentials, sub-40 Hz rhythms) and keeps the broadband
// noise floor that a faulty electrode inflates. Deviations are scored against
// the median with a MAD scale floored at kMinLogVarScale.
namespace {

template <typename Mat>
std::vector<size_t> detect_bad_impl(const Mat& data, double z) {
  if (data.rows() < 4) throw Error("bad-channel detection needs at least 4 channels");
  if (!(z > 0.0)) throw Error("bad-channel z threshold must be positive");
  const auto n_channels = static_cast<size_t>(data.rows());
  const auto n = static_cast<size_t>(data.cols());

  std::vector<size_t> bad;
  std::vector<double> logvar(n_channels, 0.0);
  std::vector<size_t> live;
  for (size_t c = 0; c < n_channels; ++c) {
    const auto row = data.row(static_cast<Eigen::Index>(c));
    const bool flat = (row.array() == row(0)).all();
    if (flat) {
      bad.push_back(c);
      continue;
    }
    std::vector<double> d(row.data(), row.data() + n);
    size_t len = n;
    for (int k = 0; k < kBadChannelDiffOrder && len > 1; ++k, --len)
      for (size_t i = 0; i + 1 < len; ++i) d[i] = d[i + 1] - d[i];
    double mean = 0.0;
    for (size_t i = 0; i < len; ++i) mean += d[i];
    mean /= static_cast<double>(len);
    double var = 0.0;
    for (size_t i = 0; i < len; ++i) var += (d[i] - mean) * (d[i] - mean);
    var /= static_cast<double>(len);
    logvar[c] = std::log(std::max(var, std::numeric_limits<double>::min()));
    live.push_back(c);
  }
  if (live.size() >= 3) {
    std::vector<double> values;
    for (size_t c : live) values.push_back(logvar[c]);
    const double med = median(values);
    std::vector<double> dev;
    for (double v : values) dev.push_back(std::abs(v - med));
    const double scale = std::max(1.4826 * median(dev), kMinLogVarScale);
    for (size_t c : live)
      if (std::abs(logvar[c] - med) / scale > z) bad.push_back(c);
  }
  std::sort(bad.begin(), bad.end());
  return bad;
}

}  // namespace

std::vector<size_t> detect_bad_channels(const Matrix& data, double z) { return detect_bad_impl(data, z); }

Matrix spline_weights(const ElectrodeLayout& layout, const std::vector<size_t>& bad, const SplineParams& params) {
  std::vector<bool> is_bad(layout.size(), false);
  for (size_t b : bad) {
    if (b >= layout.size()) throw Error("bad channel index " + std::to_string(b) + " outside layout");
    is_bad[b] = true;
  }
  std::vector<size_t> good;
  for (size_t i = 0; i < layout.size(); ++i)
    if (!is_bad[i]) good.push_back(i);
  if (good.size() < 4) throw Error("spline interpolation needs at least 4 good channels, have " + std::to_string(good.size()));

  const auto n = static_cast<Eigen::Index>(good.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      system(i, j) = spline_kernel(dot(layout[good[i]].pos, layout[good[j]].pos), params);
    }
    system(i, i) += params.ridge;
    system(i, n) = 1.0;
    system(n, i) = 1.0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw NumericError("spherical spline system is singular after regularization");
  const Eigen::MatrixXd inverse = lu.inverse();

  std::vector<size_t> targets;
  for (size_t i = 0; i < layout.size(); ++i)
    if (is_bad[i]) targets.push_back(i);
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(targets.size()), n + 1);
  for (size_t t = 0; t < targets.size(); ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      rows(static_cast<Eigen::Index>(t), j) = spline_kernel(dot(layout[targets[t]].pos, layout[good[j]].pos), params);
    }
    rows(static_cast<Eigen::Index>(t), n) = 1.0;
  }
  return rows * inverse.leftCols(n);
}

Matrix spline_interpolate(const ElectrodeLayout& layout, const Matrix& data, const std::vector<size_t>& bad,
                          const SplineParams& params) {
  Matrix out = data;
  spline_interpolate_inplace(layout, out, bad, params);
  return out;
}

Matrix remove_ocular(const Matrix& data, const ElectrodeLayout& layout, const std::vector<int>& proxy_ids) {
  Matrix out = data;
  remove_ocular_inplace(out, layout, proxy_ids);
  return out;
}

std::vector<int> default_ocular_proxies(const ElectrodeLayout& layout) {
  if (layout.name() == "egi129") return {125, 126, 127, 128};
  const Electrode* best = nullptr;
  for (const auto& e : layout.electrodes()) {
    if (e.partner_id == e.id) continue;
    if (!best || e.pos.y > best->pos.y || (e.pos.y == best->pos.y && e.id < best->id)) best = &e;
  }
  if (!best) {
    for (const auto& e : layout.electrodes())
      if (!best || e.pos.y > best->pos.y) best = &e;
    return {best->id};
  }
  return {std::min(best->id, best->partner_id), std::max(best->id, best->partner_id)};
}

std::string_view to_string(Regime r) { return r == Regime::minimal ? "minimal" : "maximal"; }

Regime parse_regime(std::string_view text) {
  if (text == "minimal") return Regime::minimal;
  if (text == "maximal") return Regime::maximal;
  throw Error("unknown regime '" + std::string(text) + "' (expected minimal or maximal)");
}

Matrix to_matrix(const SignalMatrix& data) { return data.cast<double>(); }
SignalMatrix to_signal(const Matrix& data) { return data.cast<float>(); }

Preprocessed preprocess(const Recording& rec, const ElectrodeLayout& layout, const PreprocessConfig& cfg) {
  if (rec.channels() != layout.size()) {
    throw ShapeError("recording has " + std::to_string(rec.channels()) + " channels but layout '" + layout.name() +
                     "' has " + std::to_string(layout.size()));
  }
  if (!(cfg.bad_channel_z > 0.0)) throw Error("bad_channel_z must be positive");
  validate_band(cfg.band, rec.sample_rate);

  Preprocessed result;
  result.recording.data = rec.data;
  SignalMatrix& data = result.recording.data;
  result.interpolated = detect_bad_impl(data, cfg.bad_channel_z);
  spline_interpolate_inplace(layout, data, result.interpolated, SplineParams{});
  bandpass_inplace(data, rec.sample_rate, cfg.band);
  average_reference_inplace(data);
  if (cfg.regime == Regime::maximal) {
    const auto proxies = cfg.ocular_proxy_ids.empty() ? default_ocular_proxies(layout) : cfg.ocular_proxy_ids;
    remove_ocular_inplace(data, layout, proxies);
  }

  result.recording.layout_name = rec.layout_name;
  result.recording.sample_rate = rec.sample_rate;
  result.recording.events = rec.events;
  return result;
}

}  // namespace eegcs
