// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include "cli.hpp"
#include "eegcs/bench.hpp"
#include "eegcs/dsp.hpp"
#include "eegcs/error.hpp"
#include "eegcs/filter.hpp"
#include "eegcs/saliency.hpp"
#include "eegcs/selection.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace eegcs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log(const std::string& line) { std::cerr << "  . " << line << std::endl; }

// ---- 1: gradients ---------------------------------------------------------------

constexpr double kFdStep = 1e-4;
constexpr double kFdTolerance = 1e-4;
constexpr size_t kFdCoordinates = 20;

Tensor fd_targets(Task task, size_t batch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({batch, head_width(task)});
  for (size_t i = 0; i < batch; ++i) {
    const double a = std::numbers::pi * u(rng);
    switch (task) {
      case Task::lr: t.at(i, 0) = u(rng) > 0 ? 1.0 : 0.0; break;
      case Task::amplitude: t.at(i, 0) = 3.0 + 2.0 * u(rng); break;
      case Task::angle: t.at(i, 0) = std::sin(a); t.at(i, 1) = std::cos(a); break;
      case Task::position: t.at(i, 0) = 4.0 * u(rng); t.at(i, 1) = 3.0 * u(rng); break;
    }
  }
  return t;
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_cell;
  for (Arch arch : {Arch::linear, Arch::compact_cnn, Arch::pyramidal_cnn}) {
    for (Task task : {Task::lr, Task::amplitude, Task::angle, Task::position}) {
      std::mt19937_64 rng(1000 + 10 * static_cast<int>(arch) + static_cast<int>(task));
      std::normal_distribution<double> g(0.0, 1.0);
      TrainedModel m;
      m.spec.arch = arch;
      m.spec.task = task;
      m.spec.in_channels = 4;
      m.spec.input_scale = 1.5;
      m.params = init_params(m.spec, rng());
      for (auto& p : m.params) p += 0.01 * g(rng);
      Tensor x({2, 4, kWindowSamples});
      for (auto& v : x.values) v = g(rng);
      const Tensor y = fd_targets(task, 2, rng);
      const Gradients grad = backward(m, x, y, true);

      auto central = [&](double& slot) {
        const double keep = slot;
        slot = keep + kFdStep;
        const double up = loss(task, forward(m, x), y);
        slot = keep - kFdStep;
        const double down = loss(task, forward(m, x), y);
        slot = keep;
        return (up - down) / (2.0 * kFdStep);
      };
      auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); };
      double cell = 0.0;
      for (size_t k = 0; k < kFdCoordinates; ++k) {
        const size_t i = rng() % m.params.size();
        cell = std::max(cell, rel(grad.params[i], central(m.params[i])));
      }
      for (size_t k = 0; k < kFdCoordinates; ++k) {
        const size_t i = rng() % x.values.size();
        cell = std::max(cell, rel(grad.input.values[i], central(x.values[i])));
      }
      if (cell > worst) {
        worst = cell;
        worst_cell = std::string(to_string(arch)) + "/" + std::string(to_string(task));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kFdTolerance && secs < 60.0,
          "12 cells, worst relative error " + fmt(worst * 1e6, 3) + "e-6 (" + worst_cell + "), " + fmt(secs, 1) + " s"};
}

// ---- 2: filter --------------------------------------------------------------------

// Least-squares amplitude and phase of a known-frequency sinusoid over [from, to).
std::pair<double, double> sine_fit(const Matrix& m, double freq, double fs, Eigen::Index from, Eigen::Index to) {
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (Eigen::Index i = from; i < to; ++i) {
    const double w = 2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs;
    const double s = std::sin(w), c = std::cos(w), y = m(0, i);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += y * s;
    yc += y * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det, b = (yc * ss - ys * sc) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

int peak_xcorr_lag(const Matrix& x, const Matrix& y, Eigen::Index from, Eigen::Index to, int max_lag) {
  int best = 0;
  double best_v = -1e300;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double v = 0.0;
    for (Eigen::Index i = from; i < to; ++i) v += x(0, i) * y(0, i + lag);
    if (v > best_v) {
      best_v = v;
      best = lag;
    }
  }
  return best;
}

Outcome filter_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const double fs = 500.0;
  const Eigen::Index n = 20000, trim = 2500;
  bool ok = true;
  std::ostringstream detail;
  for (const char* name : {"delta", "theta", "alpha", "beta"}) {
    const BandSpec band = parse_band(name);
    auto probe = [&](double f) {
      Matrix x(1, n);
      for (Eigen::Index i = 0; i < n; ++i) x(0, i) = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
      return std::make_pair(x, bandpass(x, fs, band));
    };
    const auto [xc, yc] = probe(band.center());
    const double centre_db = 20.0 * std::log10(sine_fit(yc, band.center(), fs, trim, n - trim).first);
    const double low_db = 20.0 * std::log10(sine_fit(probe(band.lo / 2).second, band.lo / 2, fs, trim, n - trim).first);
    const double high_db = 20.0 * std::log10(sine_fit(probe(2 * band.hi).second, 2 * band.hi, fs, trim, n - trim).first);
    const int lag = peak_xcorr_lag(xc, yc, trim, n - trim, 50);
    const bool band_ok = centre_db >= -1.0 && low_db <= -20.0 && high_db <= -20.0 && lag == 0;
    ok = ok && band_ok;
    detail << name << " " << fmt(centre_db) << "/" << fmt(low_db, 1) << "/" << fmt(high_db, 1) << " dB lag " << lag
           << "; ";
  }
  const double secs = seconds_since(t0);
  detail << fmt(secs, 1) << " s";
  return {ok && secs < 10.0, detail.str()};
}

// ---- 3: spline --------------------------------------------------------------------

Outcome spline_check() {
  const auto layout = resolve_layout("egi129");
  const auto n = static_cast<Eigen::Index>(layout.size());
  Matrix z(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) z(i, 0) = layout[static_cast<size_t>(i)].pos.z;
  size_t within = 0;
  for (size_t i = 0; i < layout.size(); ++i) {
    const double truth = z(static_cast<Eigen::Index>(i), 0);
    const double got = spline_interpolate(layout, z, {i})(static_cast<Eigen::Index>(i), 0);
    within += std::abs(got - truth) <= 0.05 * std::abs(truth);
  }
  const double frac = static_cast<double>(within) / static_cast<double>(layout.size());

  std::mt19937_64 rng(3);
  double worst_const = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<size_t> bad;
    for (size_t i = 0; i < layout.size(); ++i)
      if (rng() % 10 == 0) bad.push_back(i);
    if (bad.empty()) bad.push_back(rng() % layout.size());
    const double c = -50.0 + static_cast<double>(rng() % 1000) / 10.0;
    const Matrix out = spline_interpolate(layout, Matrix::Constant(n, 3, c), bad);
    worst_const = std::max(worst_const, (out.array() - c).abs().maxCoeff());
  }
  return {frac >= 0.9 && worst_const <= 1e-6,
          "leave-one-out within 5%: " + std::to_string(within) + "/" + std::to_string(layout.size()) +
              ", constant field max error " + fmt(worst_const * 1e9, 3) + "e-9"};
}

// ---- 4 and 5: saliency recovery and cluster reduction ------------------------------

constexpr int kRecoveryEvents = 2000;

TrainConfig recovery_training(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 12;
  tc.patience = 3;
  tc.seed = seed;
  return tc;
}

struct RecoveryRun {
  ElectrodeLayout layout;
  DatasetSplit split;
  TrainedModel model;
  ImportanceMap map;
  double seconds = 0.0;
};

const RecoveryRun& recovery_run() {
  static std::optional<RecoveryRun> run;
  if (run) return *run;
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryRun r;
  r.layout = resolve_layout("egi129");
  {
    SyntheticSpec s{r.layout};
    s.n_events = kRecoveryEvents;
    s.ocular_gain = 1.0;
    s.occipital_gain = 0.0;
    s.snr_db = 5.0;
    Preprocessed pre = preprocess(generate_synthetic(s), r.layout, PreprocessConfig{});
    r.split = split_by_subject(window_events(pre.recording).dataset, {}, 1);
  }
  log("recovery data ready after " + fmt(seconds_since(t0), 1) + " s");
  r.model = train(ModelSpec{}, r.split.train, r.split.val, recovery_training(1));
  r.map = electrode_importance(r.model, r.split.val, r.layout, SaliencyNorm::max);
  r.seconds = seconds_since(t0);
  run = std::move(r);
  return *run;
}

Outcome saliency_recovery() {
  const RecoveryRun& r = recovery_run();
  const double val = evaluate(r.model, r.split.val).value;
  const auto planted = ocular_channel_ids(r.layout);
  const std::set<int> planted_set(planted.begin(), planted.end());
  const double mass = importance_mass(r.map, planted);
  const auto rank = rank_electrodes(r.map);
  size_t leading = 0;
  while (leading < rank.size() && planted_set.count(rank[leading])) ++leading;
  size_t last_planted = 0;
  for (size_t i = 0; i < rank.size(); ++i)
    if (planted_set.count(rank[i])) last_planted = i;
  const bool all_first = leading == planted.size();
  return {val >= 90.0 && mass >= 0.80 && all_first && r.seconds < 600.0,
          "val " + fmt(val) + "%, planted mass " + fmt(mass, 3) + " (" + std::to_string(planted.size()) +
              " planted), planted prefix " + std::to_string(leading) + ", last planted at rank " +
              std::to_string(last_planted + 1) + ", " + fmt(r.seconds, 0) + " s"};
}

double mean_test_accuracy(const RecoveryRun& r, const std::vector<size_t>& rows, const TrainedModel* seed1) {
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const TrainedModel m =
        seed == 1 && seed1 ? *seed1 : train(ModelSpec{}, r.split.train, r.split.val, recovery_training(seed), rows);
    sum += evaluate(m, r.split.test).value;
  }
  return sum / 3.0;
}

Outcome cluster_reduction() {
  const RecoveryRun& r = recovery_run();
  const auto t0 = std::chrono::steady_clock::now();
  const double all = mean_test_accuracy(r, {}, &r.model);
  const auto rank = rank_electrodes(r.map);
  const auto eval = retrain_evaluator(r.split, r.layout, ModelSpec{}, recovery_training(1), {1, 2, 3});
  const auto [cluster, trace] = greedy_symmetric_select(rank, r.layout, eval, 1, 6);
  const auto& ids = cluster.electrode_ids;

  std::set<int> allowed;
  for (int id : ocular_channel_ids(r.layout)) {
    allowed.insert(id);
    allowed.insert(r.layout.partner(id));
  }
  const bool inside = std::all_of(ids.begin(), ids.end(), [&](int id) { return allowed.count(id) > 0; });
  const double reduced = mean_test_accuracy(r, r.layout.indices_of(ids), nullptr);
  std::string list;
  for (int id : ids) list += (list.empty() ? "" : ",") + std::to_string(id);
  return {ids.size() <= 6 && !ids.empty() && is_symmetry_closed(r.layout, ids) && inside && all - reduced <= 3.0,
          "cluster {" + list + "} after " + std::to_string(trace.steps.size()) + " steps, accuracy " + fmt(reduced) +
              "% vs all-channel " + fmt(all) + "% (3 seeds), " + fmt(seconds_since(t0), 0) + " s"};
}

// ---- 6: regime contrast ------------------------------------------------------------

Outcome regime_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto layout = resolve_layout("egi129");
  RegimeData d;
  d.regime = "maximal";
  d.band = "broadband";
  {
    SyntheticSpec s{layout};
    s.n_events = 2000;
    s.occipital_gain = 1.0;
    PreprocessConfig cfg;
    cfg.regime = Regime::maximal;
    d.split = split_by_subject(window_events(preprocess(generate_synthetic(s), layout, cfg).recording).dataset, {}, 1);
  }
  const std::vector<ClusterConfig> clusters = {resolve_cluster("front", layout), resolve_cluster("back", layout)};
  const std::vector<Arch> archs = {Arch::compact_cnn};
  const std::vector<Task> tasks = {Task::lr};
  const auto seeds = default_seeds(2);
  GridOptions go;
  go.train.epochs = 8;
  const auto aggs = run_grid(std::span(&d, 1), layout, clusters, archs, tasks, seeds, go).aggregates();
  const double front = aggs.at(0).mean, back = aggs.at(1).mean;
  return {aggs.at(0).n == 2 && aggs.at(1).n == 2 && front - back >= 10.0 && back > 60.0,
          "front " + fmt(front) + "% (" + std::to_string(clusters[0].electrode_ids.size()) + " el), back " +
              fmt(back) + "% (" + std::to_string(clusters[1].electrode_ids.size()) + " el), " +
              fmt(seconds_since(t0), 0) + " s"};
}

// ---- 7: band ablation --------------------------------------------------------------

std::map<std::string, double> band_accuracy(const ElectrodeLayout& layout, Regime regime, double occipital_gain) {
  SyntheticSpec s{layout};
  s.n_events = 1500;
  s.occipital_gain = occipital_gain;
  const Recording rec = generate_synthetic(s);
  BandscanOptions o;
  o.preprocess.regime = regime;
  o.grid.train.epochs = 5;
  std::vector<BandSpec> bands;
  for (const char* name : {"delta", "theta", "alpha", "beta"}) bands.push_back(parse_band(name));
  const std::vector<Arch> archs = {Arch::compact_cnn};
  const auto seeds = default_seeds(1);
  std::map<std::string, double> acc;
  for (const auto& a : bandscan(rec, layout, bands, archs, seeds, o).aggregates()) acc[a.band] = a.n ? a.mean : 0.0;
  return acc;
}

std::string describe_bands(const std::map<std::string, double>& acc) {
  std::string s;
  for (const char* name : {"delta", "theta", "alpha", "beta"}) s += std::string(name) + " " + fmt(acc.at(name), 1) + " ";
  return s;
}

Outcome band_ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto layout = resolve_layout("egi129");
  const auto minimal = band_accuracy(layout, Regime::minimal, 0.0);
  log("minimal bands: " + describe_bands(minimal));
  const auto maximal = band_accuracy(layout, Regime::maximal, 1.0);

  auto best_of = [](const std::map<std::string, double>& acc) {
    return std::max_element(acc.begin(), acc.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
  };
  const std::string min_best = best_of(minimal);
  const bool min_ok = (min_best == "delta" || min_best == "theta") && minimal.at(min_best) - minimal.at("beta") >= 10.0;
  double runner_up = 0.0;
  for (const auto& [band, v] : maximal)
    if (band != "beta") runner_up = std::max(runner_up, v);
  const bool max_ok = best_of(maximal) == "beta" && maximal.at("beta") - runner_up >= 10.0;
  const double secs = seconds_since(t0);
  return {min_ok && max_ok && secs < 900.0, "minimal [" + describe_bands(minimal) + "] maximal [" +
                                                describe_bands(maximal) + "] " + fmt(secs, 0) + " s"};
}

// ---- 8: determinism ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome bench_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("eegcs_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) {
    args.push_back("-q");
    const int code = cli::run(args, out, err);
    if (code != 0) throw Error("eegcs " + args.front() + " exited " + std::to_string(code) + ": " + err.str());
  };
  const std::string raw = (dir / "raw.eegw").string(), csv = (dir / "results.csv").string();
  run({"synth", "--events", "120", "--seed", "5", "--out", raw});
  run({"bench", "--in", raw, "--clusters", "top2,all", "--archs", "linear,compact_cnn", "--tasks", "lr", "--seeds",
       "3", "--epochs", "2", "--out", csv});
  const std::string first = slurp(csv);
  fs::rename(csv, dir / "first.csv");
  run({"bench", "--config", csv + ".manifest", "--jobs", "1"});
  const std::string second = slurp(csv);
  std::istringstream parsed(first);
  const size_t rows = parse_results_csv(parsed).records.size();
  fs::remove_all(dir);
  return {rows == 12 && !first.empty() && first == second,
          std::to_string(rows) + " rows, rerun from manifest " + (first == second ? "byte-identical" : "differs")};
}

// ---- 9: registry -------------------------------------------------------------------

Outcome registry_fidelity() {
  std::map<std::string, std::vector<int>> reg;
  for (const auto& c : cluster_registry()) reg[c.name] = c.electrode_ids;
  const std::vector<int> top2 = {125, 128};
  const std::vector<int> top3 = {17, 125, 128};
  const std::vector<int> top8 = {1, 17, 32, 38, 121, 125, 128, 129};
  const auto& sf = reg["sidefronts"];
  const bool sf_ok = sf.size() == 23 && std::includes(sf.begin(), sf.end(), top8.begin(), top8.end()) &&
                     is_symmetry_closed(resolve_layout("egi129"), sf);
  const bool ok = reg.size() == 4 && reg["top2"] == top2 && reg["top3"] == top3 && reg["top8"] == top8 && sf_ok;
  return {ok, "top2/top3/top8 exact, sidefronts " + std::to_string(sf.size()) + " electrodes"};
}

// ---- 10: round-trips ---------------------------------------------------------------

float random_float(std::mt19937_64& rng) {
  // Mix ordinary values with signed zeros, subnormals and extremes.
  switch (rng() % 8) {
    case 0: return -0.0f;
    case 1: return std::numeric_limits<float>::denorm_min() * static_cast<float>(rng() % 1000 + 1);
    case 2: return std::numeric_limits<float>::max() / static_cast<float>(rng() % 100 + 1);
    default: return std::bit_cast<float>(static_cast<std::uint32_t>(rng() % 0x7f000000u)) * (rng() % 2 ? 1.f : -1.f);
  }
}

Outcome round_trips() {
  std::mt19937_64 rng(2024);
  size_t containers = 0, checkpoints = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Recording rec;
    rec.layout_name = std::string(rng() % 20, static_cast<char>('a' + rng() % 26));
    rec.sample_rate = 100.0f + static_cast<float>(rng() % 1000);
    const auto channels = static_cast<Eigen::Index>(1 + rng() % 12);
    const auto samples = static_cast<Eigen::Index>(1 + rng() % 3000);
    rec.data.resize(channels, samples);
    for (Eigen::Index i = 0; i < rec.data.size(); ++i) rec.data.data()[i] = random_float(rng);
    std::vector<std::uint64_t> onsets(rng() % 30);
    for (auto& o : onsets) o = rng() % static_cast<std::uint64_t>(samples);
    std::sort(onsets.begin(), onsets.end());
    for (auto o : onsets) {
      Event e;
      e.onset = o;
      e.lr = rng() % 2 ? Side::right : Side::left;
      e.amplitude = std::abs(random_float(rng));
      e.angle = static_cast<float>(std::numbers::pi) - static_cast<float>(rng() % 6283) / 1000.0f;
      e.pos_x = random_float(rng);
      e.pos_y = random_float(rng);
      e.subject_id = static_cast<std::uint32_t>(rng());
      rec.events.push_back(e);
    }
    std::stringstream a;
    write_container(rec, a);
    const std::string bytes = a.str();
    const Recording back = read_container(a);
    std::stringstream b;
    write_container(back, b);
    const bool same_data = back.data.rows() == channels && back.data.cols() == samples &&
                           std::memcmp(back.data.data(), rec.data.data(), 4 * static_cast<size_t>(rec.data.size())) == 0;
    containers += b.str() == bytes && same_data && back.events == rec.events && back.layout_name == rec.layout_name &&
                  std::bit_cast<std::uint32_t>(back.sample_rate) == std::bit_cast<std::uint32_t>(rec.sample_rate);

    TrainedModel m;
    m.spec.arch = static_cast<Arch>(rng() % 3);
    m.spec.task = static_cast<Task>(rng() % 4);
    m.spec.in_channels = 1 + rng() % 6;
    m.spec.input_scale = std::ldexp(1.0 + static_cast<double>(rng() % 1000) / 7.0, static_cast<int>(rng() % 40) - 20);
    m.seed = rng();
    m.params = init_params(m.spec, m.seed);
    for (auto& p : m.params)
      if (rng() % 5 == 0) p = std::bit_cast<double>(rng() & 0x7fefffffffffffffull) * (rng() % 2 ? 1 : -1);
    for (size_t e = 0, n = rng() % 6; e < n; ++e) m.train_log.push_back({std::ldexp(1.0, -static_cast<int>(e)), 0.1 * e});
    for (size_t c = 0; c < m.spec.in_channels && rng() % 2; ++c) m.channels.push_back(c * 3);
    if (!m.channels.empty()) m.channels.resize(m.spec.in_channels, m.channels.back());
    std::stringstream c1;
    save_checkpoint(m, c1);
    const std::string cbytes = c1.str();
    const TrainedModel mb = load_checkpoint(c1);
    std::stringstream c2;
    save_checkpoint(mb, c2);
    const bool same_params =
        mb.params.size() == m.params.size() &&
        std::memcmp(mb.params.data(), m.params.data(), sizeof(double) * m.params.size()) == 0;
    checkpoints += c2.str() == cbytes && same_params && mb.train_log == m.train_log && mb.channels == m.channels &&
                   mb.seed == m.seed && mb.spec.arch == m.spec.arch && mb.spec.task == m.spec.task &&
                   std::bit_cast<std::uint64_t>(mb.spec.input_scale) == std::bit_cast<std::uint64_t>(m.spec.input_scale);
  }
  return {containers == 100 && checkpoints == 100,
          std::to_string(containers) + "/100 containers, " + std::to_string(checkpoints) + "/100 checkpoints bit-exact"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradient_check},   {2, filter_check},      {3, spline_check},     {4, saliency_recovery},
      {5, cluster_reduction}, {6, regime_contrast},  {7, band_ablation},    {8, bench_determinism},
      {9, registry_fidelity}, {10, round_trips}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [number, check] : criteria) {
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << number << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
