#include "eegcs/filter.hpp"

#include "eegcs/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace eegcs {

namespace {

using cplx = std::complex<double>;

std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double prewarp(double freq_hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs); }

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Groups z-plane poles into denominators of second-order sections.
std::vector<Biquad> pole_sections(const std::vector<cplx>& zpoles) {
  std::vector<Biquad> sections;
  std::vector<double> real_poles;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) > 1e-12) {
      if (p.imag() > 0) sections.push_back({1.0, 0.0, 0.0, -2.0 * p.real(), std::norm(p)});
    } else {
      real_poles.push_back(p.real());
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  for (size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    sections.push_back({1.0, 0.0, 0.0, -(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});
  }
  if (real_poles.size() % 2 == 1) sections.push_back({1.0, 0.0, 0.0, -real_poles.back(), 0.0});
  return sections;
}

bool is_first_order(const Biquad& s) { return s.a2 == 0.0; }

void normalize_gain(Sos& sos, double freq_hz, double fs) {
  const double g = std::abs(sos_response(sos, freq_hz, fs));
  if (!(g > 0.0) || !std::isfinite(g)) throw NumericError("filter design produced zero gain at reference frequency");
  sos.front().b0 /= g;
  sos.front().b1 /= g;
  sos.front().b2 /= g;
}

void check_frequency(double f, double fs, const char* what) {
  if (!(fs > 0.0)) throw Error("sample rate must be positive");
  if (!(f > 0.0) || !(f < fs / 2.0)) {
    throw Error(std::string(what) + " " + std::to_string(f) + " Hz must lie in (0, " + std::to_string(fs / 2.0) +
                ") Hz");
  }
}

// Steady-state section states for a unit step entering the cascade.
std::vector<std::array<double, 2>> step_states(const Sos& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (size_t i = 0; i < sos.size(); ++i) {
    const Biquad& s = sos[i];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * gain;
    const double z1 = s.b1 - s.a1 * gain + z2;
    zi[i] = {scale * z1, scale * z2};
    scale *= gain;
  }
  return zi;
}

void run_cascade(const Sos& sos, std::span<double> x, std::vector<std::array<double, 2>> state) {
  for (size_t k = 0; k < sos.size(); ++k) {
    const Biquad& s = sos[k];
    double z1 = state[k][0];
    double z2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

Sos butterworth_lowpass(int order, double cutoff_hz, double fs) {
  check_frequency(cutoff_hz, fs, "low-pass cutoff");
  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(p * wc, fs));
  Sos sos = pole_sections(zpoles);
  for (Biquad& s : sos) {
    if (is_first_order(s)) {
      s.b0 = 1.0, s.b1 = 1.0, s.b2 = 0.0;
    } else {
      s.b0 = 1.0, s.b1 = 2.0, s.b2 = 1.0;
    }
  }
  const double gain = std::abs(sos_response(sos, 0.0, fs));
  sos.front().b0 /= gain, sos.front().b1 /= gain, sos.front().b2 /= gain;
  return sos;
}

Sos butterworth_highpass(int order, double cutoff_hz, double fs) {
  check_frequency(cutoff_hz, fs, "high-pass cutoff");
  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(wc / p, fs));
  Sos sos = pole_sections(zpoles);
  for (Biquad& s : sos) {
    if (is_first_order(s)) {
      s.b0 = 1.0, s.b1 = -1.0, s.b2 = 0.0;
    } else {
      s.b0 = 1.0, s.b1 = -2.0, s.b2 = 1.0;
    }
  }
  normalize_gain(sos, fs / 2.0, fs);
  return sos;
}

Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs) {
  check_frequency(lo_hz, fs, "band edge");
  check_frequency(hi_hz, fs, "band edge");
  if (!(lo_hz < hi_hz)) throw Error("band lower edge must be below the upper edge");
  const double w1 = prewarp(lo_hz, fs);
  const double w2 = prewarp(hi_hz, fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    const cplx half = p * bw / 2.0;
    const cplx disc = std::sqrt(half * half - w0 * w0);
    zpoles.push_back(bilinear(half + disc, fs));
    zpoles.push_back(bilinear(half - disc, fs));
  }
  Sos sos = pole_sections(zpoles);
  // One zero at z = 1 and one at z = -1 per section.
  for (Biquad& s : sos) s.b0 = 1.0, s.b1 = 0.0, s.b2 = -1.0;
  const double center_hz = std::atan(w0 / (2.0 * fs)) * fs / std::numbers::pi;
  normalize_gain(sos, center_hz, fs);
  return sos;
}

std::complex<double> sos_response(const Sos& sos, double freq_hz, double fs) {
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / fs);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const Biquad& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

size_t filtfilt_padding(const Sos& sos) { return 3 * (2 * sos.size() + 1); }

void sosfilt(const Sos& sos, std::span<double> x) {
  run_cascade(sos, x, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
}

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x) {
  const size_t n = x.size();
  const size_t pad = filtfilt_padding(sos);
  if (n <= pad) {
    throw Error("input of " + std::to_string(n) + " samples is too short for zero-phase filtering (needs > " +
                std::to_string(pad) + ")");
  }
  std::vector<double> ext(n + 2 * pad);
  for (size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<long>(pad));
  for (size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const auto zi = step_states(sos);
  auto scaled = [&](double v) {
    auto s = zi;
    for (auto& st : s) st[0] *= v, st[1] *= v;
    return s;
  };
  run_cascade(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<long>(pad), ext.begin() + static_cast<long>(pad + n)};
}

}  // namespace eegcs
