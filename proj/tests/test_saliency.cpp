#include "doctest.h"

#include "support.hpp"

#include "eegcs/error.hpp"
#include "eegcs/saliency.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace eegcs;

namespace {

WindowedDataset noise_windows(size_t n, size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  WindowedDataset ds;
  for (size_t i = 0; i < n; ++i) {
    Window w;
    w.data.resize(static_cast<Eigen::Index>(channels), kWindowSamples);
    for (Eigen::Index k = 0; k < w.data.size(); ++k) w.data.data()[k] = g(rng);
    w.event.lr = i % 2 ? Side::right : Side::left;
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

TrainedModel linear_lr(size_t channels, std::uint64_t seed) {
  TrainedModel m;
  m.spec.arch = Arch::linear;
  m.spec.in_channels = channels;
  m.params = init_params(m.spec, seed);
  return m;
}

ImportanceMap one_hot(const ElectrodeLayout& layout, int id) {
  ImportanceMap m;
  m.layout_name = layout.name();
  m.ids = layout.ids();
  m.scores.assign(m.ids.size(), 0.0);
  m.scores[layout.index_of(id)] = 1.0;
  return m;
}

}  // namespace

TEST_CASE("weights on one channel give a one-hot map") {
  const auto layout = synthetic_grid_layout(3, 0);
  auto m = linear_lr(6, 1);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  for (size_t t = 0; t < kWindowSamples; ++t) m.params[3 * kWindowSamples + t] = 0.01 * static_cast<double>(t % 7 + 1);
  const auto map = electrode_importance(m, noise_windows(10, 6, 2), layout);
  for (size_t i = 0; i < 6; ++i) CHECK(map.scores[i] == (i == 3 ? 1.0 : 0.0));
}

TEST_CASE("linear model importance is the normalised absolute weight mass") {
  const auto layout = synthetic_grid_layout(2, 1);
  const auto m = linear_lr(5, 4);
  std::vector<double> expect(5, 0.0);
  for (size_t c = 0; c < 5; ++c)
    for (size_t t = 0; t < kWindowSamples; ++t) expect[c] += std::abs(m.params[c * kWindowSamples + t]);
  const double total = std::accumulate(expect.begin(), expect.end(), 0.0);
  for (auto norm : {SaliencyNorm::max, SaliencyNorm::l2}) {
    const auto map = electrode_importance(m, noise_windows(9, 5, 3), layout, norm);
    for (size_t c = 0; c < 5; ++c) CHECK(map.scores[c] == doctest::Approx(expect[c] / total).epsilon(1e-9));
  }
}

TEST_CASE("importance is equivariant under a joint channel permutation") {
  const auto layout = synthetic_grid_layout(2, 1);
  const std::vector<size_t> perm = {3, 0, 4, 1, 2};  // new row r holds old row perm[r]
  std::vector<Electrode> electrodes;
  for (size_t r : perm) electrodes.push_back(layout[r]);
  const ElectrodeLayout permuted("perm", electrodes);

  const auto m = linear_lr(5, 8);
  auto pm = m;
  const auto ds = noise_windows(6, 5, 9);
  auto pds = ds;
  for (size_t r = 0; r < 5; ++r) {
    for (size_t t = 0; t < kWindowSamples; ++t) pm.params[r * kWindowSamples + t] = m.params[perm[r] * kWindowSamples + t];
    for (size_t i = 0; i < ds.size(); ++i)
      pds.windows[i].data.row(static_cast<Eigen::Index>(r)) = ds.windows[i].data.row(static_cast<Eigen::Index>(perm[r]));
  }
  const auto a = electrode_importance(m, ds, layout);
  const auto b = electrode_importance(pm, pds, permuted);
  for (int id : layout.ids()) CHECK(a.score_of(id) == doctest::Approx(b.score_of(id)).epsilon(1e-12));
}

TEST_CASE("unseen electrodes score zero") {
  const auto layout = synthetic_grid_layout(3, 0);
  auto m = linear_lr(2, 5);
  m.channels = {1, 4};
  const auto map = electrode_importance(m, noise_windows(4, 6, 6), layout);
  CHECK(map.scores[0] == 0.0);
  CHECK(map.scores[1] > 0.0);
  CHECK(map.scores[4] > 0.0);
  CHECK(std::accumulate(map.scores.begin(), map.scores.end(), 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(electrode_importance(m, noise_windows(4, 5, 6), layout), ShapeError);
}

TEST_CASE("averaging maps") {
  const auto layout = synthetic_grid_layout(3, 1);
  const auto a = one_hot(layout, 2), b = one_hot(layout, 5);
  const std::vector<ImportanceMap> same = {a, a, a};
  CHECK(average_maps(same).scores == a.scores);
  const std::vector<ImportanceMap> two = {a, b};
  const auto avg = average_maps(two);
  CHECK(avg.score_of(2) == doctest::Approx(0.5));
  CHECK(avg.score_of(5) == doctest::Approx(0.5));
  CHECK(importance_mass(avg, std::vector<int>{2, 5}) == doctest::Approx(1.0));

  const std::vector<ImportanceMap> mixed = {a, one_hot(synthetic_grid_layout(2, 1), 1)};
  CHECK_THROWS(average_maps(mixed));
}

TEST_CASE("importance file round-trip") {
  const auto layout = synthetic_grid_layout(2, 1);
  auto map = electrode_importance(linear_lr(5, 2), noise_windows(4, 5, 1), layout);
  map.task = "lr";
  map.arch = "linear";
  std::stringstream s;
  write_importance(map, s);
  const auto back = read_importance(s);
  CHECK(back.ids == map.ids);
  CHECK(back.scores == map.scores);
  CHECK(back.layout_name == map.layout_name);
  CHECK(back.n_samples == map.n_samples);

  std::istringstream bad("garbage\n");
  CHECK_THROWS_AS(read_importance(bad), Error);
  CHECK(parse_saliency_norm("l2") == SaliencyNorm::l2);
  CHECK_THROWS(parse_saliency_norm("l1"));
}
