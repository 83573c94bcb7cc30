#include "eegcs/bench.hpp"

#include "eegcs/error.hpp"
#include "eegcs/textio.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

namespace eegcs {

namespace {

using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;

Key key_of(const RunRecord& r) { return {r.task, r.cluster, r.arch, r.band, r.regime}; }

struct Cell {
  size_t data = 0, cluster = 0, arch = 0, task = 0, seed = 0;
};

std::string task_header(const std::string& task) {
  if (task == "lr") return "LR (%)";
  if (task == "amplitude") return "Amplitude (px)";
  if (task == "angle") return "Angle (rad)";
  if (task == "position") return "Position (px)";
  return task;
}

// First-appearance order of a field across records.
template <typename Field>
std::vector<std::string> distinct(const std::vector<RunRecord>& records, Field field) {
  std::vector<std::string> out;
  for (const RunRecord& r : records)
    if (std::find(out.begin(), out.end(), field(r)) == out.end()) out.push_back(field(r));
  return out;
}

void csv_check(const std::string& value) {
  if (value.find_first_of(",\n\"") != std::string::npos)
    throw FormatError("field '" + value + "' cannot be written to the results CSV");
}

}  // namespace

std::vector<Aggregate> BenchmarkResult::aggregates() const {
  std::vector<Aggregate> out;
  std::map<Key, size_t> slot;
  std::vector<std::vector<double>> values;
  for (const RunRecord& r : records) {
    auto [it, fresh] = slot.emplace(key_of(r), out.size());
    if (fresh) {
      Aggregate a;
      a.task = r.task;
      a.cluster = r.cluster;
      a.arch = r.arch;
      a.band = r.band;
      a.regime = r.regime;
      out.push_back(a);
      values.emplace_back();
    }
    if (r.ok()) values[it->second].push_back(r.metric);
    else ++out[it->second].failures;
  }
  for (size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    out[i].n = v.size();
    if (v.empty()) {
      out[i].mean = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[i].mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - out[i].mean) * (x - out[i].mean);
      out[i].std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

BenchmarkResult run_grid(std::span<const RegimeData> data, const ElectrodeLayout& layout,
                         std::span<const ClusterConfig> clusters, std::span<const Arch> archs,
                         std::span<const Task> tasks, std::span<const std::uint64_t> seeds, const GridOptions& opts) {
  opts.train.validate();
  std::vector<std::vector<size_t>> rows;
  for (const ClusterConfig& c : clusters) {
    std::vector<size_t> idx = layout.indices_of(c.electrode_ids);
    std::sort(idx.begin(), idx.end());
    rows.push_back(std::move(idx));
  }

  std::vector<Cell> cells;
  for (size_t d = 0; d < data.size(); ++d)
    for (size_t c = 0; c < clusters.size(); ++c)
      for (size_t a = 0; a < archs.size(); ++a)
        for (size_t t = 0; t < tasks.size(); ++t)
          for (size_t s = 0; s < seeds.size(); ++s) cells.push_back({d, c, a, t, s});

  BenchmarkResult result;
  result.records.resize(cells.size());
  std::atomic<size_t> next{0};
  std::mutex report;

  const auto run_cell = [&](size_t i) {
    const Cell& cell = cells[i];
    RunRecord& r = result.records[i];
    r.task = to_string(tasks[cell.task]);
    r.cluster = clusters[cell.cluster].name;
    r.arch = to_string(archs[cell.arch]);
    r.band = data[cell.data].band;
    r.regime = data[cell.data].regime;
    r.seed = seeds[cell.seed];
    const auto start = std::chrono::steady_clock::now();
    try {
      const DatasetSplit& split = data[cell.data].split;
      TrainConfig cfg = opts.train;
      cfg.seed = r.seed;
      ModelSpec spec;
      spec.arch = archs[cell.arch];
      spec.task = tasks[cell.task];
      const TrainedModel model = train(spec, split.train, split.val, cfg, rows[cell.cluster]);
      r.metric = evaluate(model, split.test).value;
      if (!std::isfinite(r.metric)) throw NumericError("non-finite test metric");
    } catch (const std::exception& e) {
      r.metric = std::numeric_limits<double>::quiet_NaN();
      r.error = e.what();
      if (r.error.empty()) r.error = "unknown failure";
    }
    r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.seconds = opts.timing == TimingMode::wall ? r.elapsed : 0.0;
    if (opts.on_record) {
      std::lock_guard lock(report);
      opts.on_record(r);
    }
  };
  const auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) run_cell(i);
  };

  const size_t jobs = std::clamp<size_t>(opts.jobs, 1, std::max<size_t>(1, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

BenchmarkResult bandscan(const Recording& rec, const ElectrodeLayout& layout, std::span<const BandSpec> bands,
                         std::span<const Arch> archs, std::span<const std::uint64_t> seeds,
                         const BandscanOptions& opts) {
  if (bands.empty()) throw Error("bandscan needs at least one band");
  for (const BandSpec& b : bands) validate_band(b, rec.sample_rate);
  const ClusterConfig cluster = opts.cluster_ids.empty() ? make_cluster("all", layout.ids(), layout)
                                                         : make_cluster("custom", opts.cluster_ids, layout);
  const Task lr = Task::lr;
  BenchmarkResult result;
  for (const BandSpec& band : bands) {
    PreprocessConfig cfg = opts.preprocess;
    cfg.band = band;
    RegimeData data;
    data.regime = to_string(cfg.regime);
    data.band = band.name;
    {
      const Preprocessed pre = preprocess(rec, layout, cfg);
      data.split = split_by_subject(window_events(pre.recording).dataset, opts.ratios, opts.split_seed);
    }
    BenchmarkResult part = run_grid(std::span<const RegimeData>(&data, 1), layout,
                                    std::span<const ClusterConfig>(&cluster, 1), archs, std::span<const Task>(&lr, 1),
                                    seeds, opts.grid);
    result.records.insert(result.records.end(), part.records.begin(), part.records.end());
  }
  return result;
}

ClusterEval retrain_evaluator(const DatasetSplit& split, const ElectrodeLayout& layout, ModelSpec spec,
                              TrainConfig train_cfg, std::vector<std::uint64_t> seeds, size_t jobs) {
  train_cfg.validate();
  if (seeds.empty()) throw Error("cluster evaluation needs at least one seed");
  return [&split, &layout, spec, train_cfg, seeds = std::move(seeds), jobs](const std::vector<int>& ids) {
    std::vector<size_t> rows = layout.indices_of(ids);
    std::sort(rows.begin(), rows.end());
    std::vector<double> losses(seeds.size());
    std::vector<std::string> errors(seeds.size());
    std::atomic<size_t> next{0};
    const auto worker = [&] {
      for (size_t i = next++; i < seeds.size(); i = next++) {
        try {
          TrainConfig cfg = train_cfg;
          cfg.seed = seeds[i];
          losses[i] = dataset_loss(train(spec, split.train, split.val, cfg, rows), split.val);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    const size_t n_threads = std::clamp<size_t>(jobs, 1, seeds.size());
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (size_t j = 0; j < n_threads; ++j) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (size_t i = 0; i < seeds.size(); ++i)
      if (!errors[i].empty()) throw Error("seed " + std::to_string(seeds[i]) + ": " + errors[i]);

    LossEstimate est;
    est.mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    if (losses.size() >= 2) {
      double ss = 0.0;
      for (double l : losses) ss += (l - est.mean) * (l - est.mean);
      est.std = std::sqrt(ss / static_cast<double>(losses.size() - 1));
    }
    return est;
  };
}

std::vector<std::uint64_t> default_seeds(size_t n) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
  return seeds;
}

std::string format_cell(const Aggregate& agg) {
  if (agg.n == 0) return "failed";
  if (agg.n == 1) return format_fixed(agg.mean, 2);
  return format_fixed(agg.mean, 2) + " ± " + format_fixed(agg.std, 2);
}

std::string format_table(const BenchmarkResult& result, TableStyle style) {
  if (result.records.empty()) throw Error("no results to format");
  std::ostringstream out;
  if (style == TableStyle::csv) {
    out << kResultsCsvHeader << '\n';
    for (const RunRecord& r : result.records) {
      for (const std::string* f : {&r.task, &r.cluster, &r.arch, &r.band, &r.regime}) csv_check(*f);
      out << r.task << ',' << r.cluster << ',' << r.arch << ',' << r.band << ',' << r.regime << ',' << r.seed << ','
          << format_double(r.metric) << ',' << format_double(r.seconds) << '\n';
    }
    return out.str();
  }

  const auto aggs = result.aggregates();
  const auto tasks = distinct(result.records, [](const RunRecord& r) { return r.task; });
  const auto clusters = distinct(result.records, [](const RunRecord& r) { return r.cluster; });
  const auto archs = distinct(result.records, [](const RunRecord& r) { return r.arch; });
  const auto regimes = distinct(result.records, [](const RunRecord& r) { return r.regime; });
  const auto bands = distinct(result.records, [](const RunRecord& r) { return r.band; });
  const bool show_regime = regimes.size() > 1;
  const bool show_band = bands.size() > 1;

  out << "| Cluster | Model |";
  if (show_regime) out << " Regime |";
  if (show_band) out << " Band |";
  for (const auto& t : tasks) out << ' ' << task_header(t) << " |";
  out << "\n|---|---|";
  if (show_regime) out << "---|";
  if (show_band) out << "---|";
  for (size_t i = 0; i < tasks.size(); ++i) out << "---|";
  out << '\n';

  for (const auto& cluster : clusters)
    for (const auto& arch : archs)
      for (const auto& regime : regimes)
        for (const auto& band : bands) {
          bool any = false;
          std::vector<std::string> cells;
          for (const auto& task : tasks) {
            const auto it = std::find_if(aggs.begin(), aggs.end(), [&](const Aggregate& a) {
              return a.cluster == cluster && a.arch == arch && a.regime == regime && a.band == band && a.task == task;
            });
            if (it == aggs.end()) {
              cells.emplace_back("-");
            } else {
              any = true;
              cells.push_back(format_cell(*it));
            }
          }
          if (!any) continue;
          out << "| " << cluster << " | " << arch << " |";
          if (show_regime) out << ' ' << regime << " |";
          if (show_band) out << ' ' << band << " |";
          for (const auto& c : cells) out << ' ' << c << " |";
          out << '\n';
        }
  return out.str();
}

BenchmarkResult parse_results_csv(std::istream& in) {
  BenchmarkResult result;
  std::string line;
  size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!header) {
      if (line != kResultsCsvHeader) throw ParseError("expected header '" + std::string(kResultsCsvHeader) + "'", line_no);
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) throw ParseError("expected 8 fields, found " + std::to_string(f.size()), line_no);
    RunRecord r;
    r.task = std::string(f[0]);
    r.cluster = std::string(f[1]);
    r.arch = std::string(f[2]);
    r.band = std::string(f[3]);
    r.regime = std::string(f[4]);
    const auto seed = parse_int(f[5], line_no);
    if (seed < 0) throw ParseError("negative seed", line_no);
    r.seed = static_cast<std::uint64_t>(seed);
    if (trim(f[6]) == "nan") {
      r.metric = std::numeric_limits<double>::quiet_NaN();
      r.error = "failed";
    } else {
      r.metric = parse_double(f[6], line_no);
    }
    r.seconds = parse_double(f[7], line_no);
    r.elapsed = r.seconds;
    result.records.push_back(std::move(r));
  }
  if (!header) throw FormatError("results CSV is empty");
  return result;
}

}  // namespace eegcs
