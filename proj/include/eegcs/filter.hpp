#pragma once

#include <complex>
#include <span>
#include <vector>

namespace eegcs {

/// Direct-form II transposed second-order section with a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

// Butterworth designs via the bilinear transform with pre-warping. `order` is
// the analog prototype order, so a bandpass of order N has 2N poles.
Sos butterworth_lowpass(int order, double cutoff_hz, double sample_rate);
Sos butterworth_highpass(int order, double cutoff_hz, double sample_rate);
Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double sample_rate);

std::complex<double> sos_response(const Sos& sos, double freq_hz, double sample_rate);

/// Number of samples reflected onto each end by sosfiltfilt.
size_t filtfilt_padding(const Sos& sos);

/// Causal filtering in place, zero initial state.
void sosfilt(const Sos& sos, std::span<double> x);

/// Zero-phase forward-backward filtering with odd reflection padding and
/// steady-state initial conditions. Requires x.size() > filtfilt_padding(sos).
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x);

}  // namespace eegcs
