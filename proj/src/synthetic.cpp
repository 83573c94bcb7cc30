#include "eegcs/dataio.hpp"
#include "eegcs/error.hpp"
#include "eegcs/filter.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>

namespace eegcs {

namespace {

// Timing, in seconds unless noted.
constexpr double kLeadIn = 0.5;
constexpr double kMinSpacing = 2.0;  // onset to onset, leaves a gap between windows
constexpr double kSpacingJitter = 0.5;
constexpr double kSaccadeLatencyMin = 0.10;
constexpr double kSaccadeLatencyMax = 0.20;
constexpr double kSaccadeDuration = 0.04;
constexpr double kOcularLowpassHz = 8.0;
constexpr int kOcularLowpassOrder = 4;

// Vertical gaze couples into frontal electrodes symmetrically, at half the
// horizontal gain.
constexpr double kVerticalCoupling = 0.5;

constexpr double kBurstHz = 24.0;
constexpr double kBurstDelay = 0.05;  // after saccade onset
constexpr double kBurstDuration = 0.4;
constexpr double kBurstScale = 18.0;
constexpr double kBurstLateralization = 0.8;

// Saccade-locked frontal activity (frontal eye fields): a lateralised beta
// burst whose spatial profile peaks mid-frontal, away from the ocular proxies.
// Neural like the occipital burst, so it shares occipital_gain.
constexpr double kFrontalHz = 18.0;
constexpr double kFrontalLead = 0.05;  // starts before saccade onset
constexpr double kFrontalDuration = 0.3;
constexpr double kFrontalScale = 150.0;
constexpr double kFrontalLateralization = 0.8;

constexpr double kMinAmplitude = 50.0;
constexpr double kMaxAmplitude = 600.0;

struct EventDraw {
  Event event;
  double dx = 0.0;
  double dy = 0.0;
  size_t saccade = 0;  // absolute sample of saccade onset
};

// Raised-cosine move from `from` to `to` over samples [start, start + len).
void ramp(std::vector<double>& trace, size_t start, size_t len, double from, double to) {
  for (size_t i = 0; i < len && start + i < trace.size(); ++i) {
    const double u = 0.5 - 0.5 * std::cos(std::numbers::pi * (i + 0.5) / len);
    trace[start + i] = from + (to - from) * u;
  }
}

// Smallest 2^a 3^b 5^c 7^d >= n, a length FFTW transforms quickly.
size_t fft_size(size_t n) {
  for (size_t m = std::max<size_t>(n, 2);; ++m) {
    size_t r = m;
    for (size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

std::vector<double> colored_noise(size_t n, double exponent, std::mt19937_64& rng) {
  const size_t n_fft = fft_size(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(n_fft);
  for (double& v : white) v = gauss(rng);

  // FFTW planning is not thread-safe; execution is.
  static std::mutex planner;
  std::vector<std::complex<double>> spectrum(n_fft / 2 + 1);
  auto* bins = reinterpret_cast<fftw_complex*>(spectrum.data());
  std::vector<double> colored(n_fft);
  using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, decltype(&fftw_destroy_plan)>;
  Plan fwd(nullptr, &fftw_destroy_plan), inv(nullptr, &fftw_destroy_plan);
  {
    std::lock_guard lock(planner);
    fwd.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), white.data(), bins, FFTW_ESTIMATE));
    inv.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n_fft), bins, colored.data(), FFTW_ESTIMATE));
  }
  if (!fwd || !inv) throw Error("cannot plan noise FFT of length " + std::to_string(n_fft));
  fftw_execute(fwd.get());
  spectrum[0] = 0.0;
  for (size_t k = 1; k < spectrum.size(); ++k) spectrum[k] *= std::pow(static_cast<double>(k), -exponent / 2.0);
  fftw_execute(inv.get());
  colored.resize(n);

  double mean = 0.0;
  for (double v : colored) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double& v : colored) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& v : colored) v /= sd;
  return colored;
}

float to_angle_f32(double angle) {
  float f = static_cast<float>(angle);
  if (static_cast<double>(f) > std::numbers::pi) f = std::nextafter(f, 0.0f);
  if (static_cast<double>(f) <= -std::numbers::pi) f = std::nextafter(f, 0.0f);
  return f;
}

}  // namespace

Recording generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_events < 1) throw Error("synthetic spec needs n_events >= 1");
  if (spec.ocular_gain < 0.0 || spec.occipital_gain < 0.0) throw Error("synthetic gains must be nonnegative");
  if (spec.n_subjects < 1) throw Error("synthetic spec needs at least one subject");
  if (spec.layout.size() == 0) throw Error("synthetic spec needs a layout");
  const double fs = spec.sample_rate;
  auto samples_of = [fs](double seconds) { return static_cast<size_t>(std::lround(seconds * fs)); };

  std::mt19937_64 event_rng(spec.seed);
  std::mt19937_64 noise_rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Events and timeline.
  std::vector<EventDraw> draws;
  draws.reserve(static_cast<size_t>(spec.n_events));
  size_t onset = samples_of(kLeadIn);
  for (int i = 0; i < spec.n_events; ++i) {
    EventDraw d;
    const double angle = std::numbers::pi - 2.0 * std::numbers::pi * unit(event_rng);
    const double amplitude = std::exp(std::log(kMinAmplitude) + unit(event_rng) * std::log(kMaxAmplitude / kMinAmplitude));
    const double pos_x = kScreenWidth * unit(event_rng);
    const double pos_y = kScreenHeight * unit(event_rng);
    const double latency = kSaccadeLatencyMin + (kSaccadeLatencyMax - kSaccadeLatencyMin) * unit(event_rng);
    d.event.onset = onset;
    d.event.amplitude = static_cast<float>(amplitude);
    d.event.angle = to_angle_f32(angle);
    d.event.pos_x = static_cast<float>(pos_x);
    d.event.pos_y = static_cast<float>(pos_y);
    d.event.subject_id = static_cast<std::uint32_t>(static_cast<long long>(i) * spec.n_subjects / spec.n_events);
    // Displacements follow the stored (rounded) targets so labels and signal agree.
    d.dx = d.event.amplitude * std::cos(static_cast<double>(d.event.angle));
    d.dy = d.event.amplitude * std::sin(static_cast<double>(d.event.angle));
    d.event.lr = d.dx > 0.0 ? Side::right : Side::left;
    d.saccade = onset + samples_of(latency);
    draws.push_back(d);
    onset += samples_of(kMinSpacing + kSpacingJitter * unit(event_rng));
  }
  const size_t n = draws.back().event.onset + kWindowSamples + samples_of(kLeadIn);

  // Gaze traces relative to the central fixation point. Each trial starts at
  // the centre, the saccade moves gaze by (dx, dy), the eyes hold until the
  // window closes and then return to the centre.
  std::vector<double> gaze_h(n, 0.0), gaze_v(n, 0.0);
  const size_t saccade_len = std::max<size_t>(1, samples_of(kSaccadeDuration));
  for (const EventDraw& d : draws) {
    const size_t hold_end = d.event.onset + kWindowSamples;
    ramp(gaze_h, d.saccade, saccade_len, 0.0, d.dx);
    ramp(gaze_v, d.saccade, saccade_len, 0.0, d.dy);
    for (size_t t = d.saccade + saccade_len; t < hold_end; ++t) gaze_h[t] = d.dx, gaze_v[t] = d.dy;
    ramp(gaze_h, hold_end, saccade_len, d.dx, 0.0);
    ramp(gaze_v, hold_end, saccade_len, d.dy, 0.0);
  }
  const Sos ocular_lp = butterworth_lowpass(kOcularLowpassOrder, kOcularLowpassHz, fs);
  gaze_h = sosfiltfilt(ocular_lp, gaze_h);
  gaze_v = sosfiltfilt(ocular_lp, gaze_v);

  // Burst templates, phase-locked to saccade onset.
  const auto make_burst = [&](double hz, double seconds) {
    std::vector<double> out(samples_of(seconds));
    for (size_t t = 0; t < out.size(); ++t) {
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (t + 0.5) / out.size());
      out[t] = hann * std::sin(2.0 * std::numbers::pi * hz * t / fs);
    }
    return out;
  };
  const std::vector<double> burst = make_burst(kBurstHz, kBurstDuration);
  const std::vector<double> frontal_burst = make_burst(kFrontalHz, kFrontalDuration);
  const auto add_burst = [n](std::vector<double>& row, const std::vector<double>& tmpl, size_t start, double g) {
    for (size_t t = 0; t < tmpl.size() && start + t < n; ++t) row[start + t] += g * tmpl[t];
  };

  const auto n_ch = spec.layout.size();
  auto signal_row = [&](size_t c, std::vector<double>& row) {
    std::fill(row.begin(), row.end(), 0.0);
    const Electrode& e = spec.layout[c];
    const double front = std::max(0.0, e.pos.y);
    const double back = std::max(0.0, -e.pos.y);
    const double side = e.pos.x > 0.0 ? 1.0 : (e.pos.x < 0.0 ? -1.0 : 0.0);
    if (spec.ocular_gain > 0.0 && front > 0.0) {
      const double profile = std::sqrt(front);
      const double gh = spec.ocular_gain * profile * side;
      const double gv = spec.ocular_gain * profile * kVerticalCoupling;
      for (size_t t = 0; t < n; ++t) row[t] += gh * gaze_h[t] + gv * gaze_v[t];
    }
    if (spec.occipital_gain > 0.0 && front > 0.0 && front < 1.0) {
      const double profile = std::pow(std::sin(std::numbers::pi * front), 2);
      for (const EventDraw& d : draws) {
        const double size = d.event.amplitude / kMaxAmplitude;
        const double lateral = 1.0 + kFrontalLateralization * side * std::cos(static_cast<double>(d.event.angle));
        const double g = spec.occipital_gain * profile * kFrontalScale * size * lateral;
        const size_t lead = samples_of(kFrontalLead);
        add_burst(row, frontal_burst, d.saccade > lead ? d.saccade - lead : 0, g);
      }
    }
    if (spec.occipital_gain > 0.0 && back > 0.0) {
      for (const EventDraw& d : draws) {
        const double size = d.event.amplitude / kMaxAmplitude;
        const double lateral = 1.0 + kBurstLateralization * side * std::cos(static_cast<double>(d.event.angle));
        const double g = spec.occipital_gain * back * kBurstScale * size * lateral;
        add_burst(row, burst, d.saccade + samples_of(kBurstDelay), g);
      }
    }
  };

  std::vector<double> row(n);
  double energy = 0.0;
  for (size_t c = 0; c < n_ch; ++c) {
    signal_row(c, row);
    for (double v : row) energy += v * v;
  }
  const double signal_power = energy / (static_cast<double>(n_ch) * static_cast<double>(n));
  const double noise_sd = signal_power > 0.0 ? std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0)) : 1.0;

  Recording rec;
  rec.layout_name = spec.layout.name();
  rec.sample_rate = spec.sample_rate;
  rec.data.resize(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n));
  for (size_t c = 0; c < n_ch; ++c) {
    signal_row(c, row);
    const auto noise = colored_noise(n, spec.noise_exponent, noise_rng);
    float* out = rec.data.row(static_cast<Eigen::Index>(c)).data();
    for (size_t t = 0; t < n; ++t) out[t] = static_cast<float>(row[t] + noise_sd * noise[t]);
  }
  rec.events.reserve(draws.size());
  for (const auto& d : draws) rec.events.push_back(d.event);
  return rec;
}

}  // namespace eegcs
