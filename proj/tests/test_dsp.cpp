#include "doctest.h"

#include "support.hpp"

#include "eegcs/dsp.hpp"
#include "eegcs/error.hpp"
#include "eegcs/model.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

using namespace eegcs;

namespace {

Matrix row_matrix(const std::vector<double>& x) {
  Matrix m(1, static_cast<Eigen::Index>(x.size()));
  for (size_t i = 0; i < x.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = x[i];
  return m;
}

double peak_abs(const Matrix& m, Eigen::Index from, Eigen::Index to) {
  return m.row(0).segment(from, to - from).cwiseAbs().maxCoeff();
}

// Sum over channels of the event-locked (right minus left) covariance between
// a mirrored pair, on 1-8 Hz data.
double pair_covariance(const Recording& rec, const Matrix& data, Eigen::Index a, Eigen::Index b) {
  Eigen::VectorXd da = Eigen::VectorXd::Zero(500), db = Eigen::VectorXd::Zero(500);
  for (const auto& e : rec.events) {
    if (e.onset + 500 > rec.samples()) continue;
    const double sign = e.lr == Side::right ? 1.0 : -1.0;
    da += sign * data.row(a).segment(static_cast<Eigen::Index>(e.onset), 500).transpose();
    db += sign * data.row(b).segment(static_cast<Eigen::Index>(e.onset), 500).transpose();
  }
  da.array() -= da.mean();
  db.array() -= db.mean();
  return da.dot(db) / static_cast<double>(rec.events.size() * rec.events.size());
}

}  // namespace

TEST_CASE("band registry and parsing") {
  CHECK(band_registry().size() == 5);
  CHECK(parse_band("alpha") == BandSpec{"alpha", 8.0, 13.0});
  CHECK(parse_band("0.5-40").name == "broadband");
  const auto lit = parse_band("1-13");
  CHECK(lit.lo == 1.0);
  CHECK(lit.hi == 13.0);
  CHECK(parse_band("beta").center() == doctest::Approx(std::sqrt(13.0 * 32.0)));
  CHECK_THROWS_AS(parse_band("gamma"), Error);
  CHECK_THROWS_AS(parse_band("8-4"), Error);
  CHECK_THROWS_AS(validate_band({"x", 100.0, 300.0}, 500.0), Error);
}

TEST_CASE("bandpass sine probes") {
  const Eigen::Index n = 5000, trim = 1000;
  const auto alpha = bandpass(row_matrix(test::sine(10.0, 500.0, n)), 500.0, parse_band("alpha"));
  CHECK(peak_abs(alpha, trim, n - trim) >= 0.9);

  const auto dc = bandpass(Matrix::Constant(1, n, 3.0), 500.0, parse_band("broadband"));
  CHECK(dc.cwiseAbs().maxCoeff() <= 1e-3);

  const auto beta = bandpass(row_matrix(test::sine(2.0, 500.0, n)), 500.0, parse_band("beta"));
  CHECK(peak_abs(beta, trim, n - trim) <= 0.05);
}

TEST_CASE("average reference") {
  Matrix two(2, 3);
  two << 1, 2, 3, 5, 7, 11;
  const Matrix r = average_reference(two);
  for (Eigen::Index t = 0; t < 3; ++t) {
    CHECK(r(0, t) == doctest::Approx((two(0, t) - two(1, t)) / 2));
    CHECK(r(1, t) == doctest::Approx((two(1, t) - two(0, t)) / 2));
  }
  CHECK((average_reference(r) - r).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix rand = average_reference(test::noise_matrix(8, 100, 3));
  CHECK(rand.colwise().sum().cwiseAbs().maxCoeff() < 1e-9 * 8);
}

TEST_CASE("bad channel detection") {
  Matrix data = test::noise_matrix(16, 5000, 21);
  CHECK(detect_bad_channels(data, 5.0).empty());

  Matrix flat = data;
  flat.row(4).setZero();
  CHECK(detect_bad_channels(flat, 5.0) == std::vector<size_t>{4});

  Matrix loud = data;
  loud.row(9) *= 100.0;
  CHECK(detect_bad_channels(loud, 5.0) == std::vector<size_t>{9});
}

TEST_CASE("spherical spline") {
  const auto layout = resolve_layout("egi129");
  const Eigen::Index n = static_cast<Eigen::Index>(layout.size());
  Matrix z(n, 1), c = Matrix::Constant(n, 2, 7.5);
  for (Eigen::Index i = 0; i < n; ++i) z(i, 0) = layout[static_cast<size_t>(i)].pos.z;

  CHECK(spline_interpolate(layout, z, {}) == z);

  int within = 0;
  for (size_t i = 0; i < layout.size(); ++i) {
    const Matrix out = spline_interpolate(layout, z, {i});
    const double truth = z(static_cast<Eigen::Index>(i), 0);
    within += std::abs(out(static_cast<Eigen::Index>(i), 0) - truth) <= 0.05 * std::abs(truth);
  }
  CHECK(within >= static_cast<int>(0.9 * static_cast<double>(layout.size())));

  const Matrix out = spline_interpolate(layout, c, {0, 17, 60, 128});
  CHECK((out.array() - 7.5).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("ocular regression") {
  const auto layout = synthetic_grid_layout(3, 1);
  Matrix data = test::noise_matrix(7, 2000, 8);
  data.row(4) = 2.0 * data.row(0);
  const double norm = data.norm();
  const Matrix r = remove_ocular(data, layout, {1, 2});
  CHECK(r.row(4).norm() <= 1e-6 * norm);
  CHECK(r.row(0).norm() == 0.0);
  CHECK(r.row(1).norm() == 0.0);

  // Row 5 orthogonal to both proxies.
  Matrix orth = Matrix::Zero(7, 4);
  orth.row(0) << 1, 1, 0, 0;
  orth.row(1) << 1, -1, 0, 0;
  orth.row(5) << 0, 0, 3, 4;
  CHECK((remove_ocular(orth, layout, {1, 2}).row(5) - orth.row(5)).cwiseAbs().maxCoeff() <= 1e-6);

  CHECK_THROWS_AS(remove_ocular(data, layout, {99}), Error);
}

TEST_CASE("ocular regression removes the frontal direction signature") {
  const auto layout = synthetic_grid_layout(8, 2);
  SyntheticSpec s{layout};
  s.n_events = 300;
  const auto rec = generate_synthetic(s);
  const Matrix filtered = bandpass(to_matrix(rec.data), rec.sample_rate, {"1-8", 1.0, 8.0});
  // Proxies are the front pair (ids 1, 2); the next pair (rows 2, 3) is measured.
  const double before = pair_covariance(rec, filtered, 2, 3);
  const Matrix cleaned = remove_ocular(filtered, layout, {1, 2});
  const double after = pair_covariance(rec, cleaned, 2, 3);
  CHECK(before < 0.0);
  CHECK(std::abs(after) <= 0.5 * std::abs(before));
}

TEST_CASE("minimal preprocessing on clean synthetic data") {
  const auto layout = synthetic_grid_layout(8, 2);
  SyntheticSpec s{layout};
  s.n_events = 100;
  const auto rec = generate_synthetic(s);
  const auto pre = preprocess(rec, layout, {});
  CHECK(pre.interpolated.empty());
  CHECK(pre.recording.events == rec.events);

  // Periodogram with a Hann window on a long interior segment of each channel.
  const int n = 1 << 16;
  REQUIRE(pre.recording.samples() > static_cast<size_t>(n) + 5000);
  std::vector<double> in(n);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  // Stopband: beyond the -20 dB probe points lo/2 and 2*hi. Between those and
  // the nominal edges the order-4 response still passes the slow ocular steps
  // and 1/f noise, so that transition content is bounded separately.
  double inside = 0.0, transition = 0.0, stop = 0.0;
  for (size_t c = 0; c < pre.recording.channels(); ++c) {
    for (int i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
      in[static_cast<size_t>(i)] = w * pre.recording.data(static_cast<Eigen::Index>(c), 2500 + i);
    }
    fftw_execute(plan);
    for (int k = 1; k <= n / 2; ++k) {
      const double f = 500.0 * k / n;
      const double p = std::norm(out[static_cast<size_t>(k)]);
      if (f >= 0.5 && f <= 40.0) inside += p;
      else if (f >= 0.25 && f <= 80.0) transition += p;
      else stop += p;
    }
  }
  fftw_destroy_plan(plan);
  const double total = inside + transition + stop;
  MESSAGE("outside 0.5-40 Hz: " << (transition + stop) / total);
  CHECK(stop <= 0.01 * total);
  CHECK(transition + stop <= 0.05 * total);
}

TEST_CASE("preprocessing is deterministic and validates its config") {
  const auto layout = synthetic_grid_layout(3, 1);
  SyntheticSpec s{layout};
  s.n_events = 30;
  const auto rec = generate_synthetic(s);
  PreprocessConfig cfg;
  cfg.regime = Regime::maximal;
  CHECK(test::bytes_of(preprocess(rec, layout, cfg).recording) ==
        test::bytes_of(preprocess(rec, layout, cfg).recording));
  CHECK(parse_regime("maximal") == Regime::maximal);
  CHECK_THROWS_AS(parse_regime("medium"), Error);
  cfg.band = {"bad", 10.0, 400.0};
  CHECK_THROWS_AS(preprocess(rec, layout, cfg), Error);
}

TEST_CASE("maximal preprocessing removes ocular-only decodability") {
  const auto layout = synthetic_grid_layout(8, 2);
  SyntheticSpec s{layout};
  s.n_events = 1500;
  const auto rec = generate_synthetic(s);
  auto accuracy = [&](Regime regime) {
    PreprocessConfig cfg;
    cfg.regime = regime;
    const auto split = split_by_subject(window_events(preprocess(rec, layout, cfg).recording).dataset, {}, 1);
    ModelSpec spec;
    TrainConfig tc;
    tc.epochs = 8;
    return evaluate(train(spec, split.train, split.val, tc), split.test).value;
  };
  const double minimal = accuracy(Regime::minimal);
  const double maximal = accuracy(Regime::maximal);
  MESSAGE("minimal " << minimal << " maximal " << maximal);
  CHECK(minimal - maximal >= 20.0);
}
