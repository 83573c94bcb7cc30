#include "cli.hpp"

#include "eegcs/bench.hpp"
#include "eegcs/dataio.hpp"
#include "eegcs/dsp.hpp"
#include "eegcs/error.hpp"
#include "eegcs/layout.hpp"
#include "eegcs/model.hpp"
#include "eegcs/saliency.hpp"
#include "eegcs/selection.hpp"
#include "eegcs/textio.hpp"
#include "eegcs/viz.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#ifndef EEGCS_VERSION
#define EEGCS_VERSION "0.0.0"
#endif

namespace eegcs::cli {

namespace {

namespace fs = std::filesystem;

// A bad flag value discovered after parsing. Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Log {
 public:
  Log(std::ostream& err, const bool& quiet) : err_(err), quiet_(quiet) {}
  void info(const std::string& line) const {
    if (!quiet_) err_ << "[eegcs] " << line << '\n' << std::flush;
  }

 private:
  std::ostream& err_;
  const bool& quiet_;
};

// Converts a flag value, reporting failures against the flag name.
template <typename F>
auto flag_value(const std::string& flag, F&& convert) {
  try {
    return convert();
  } catch (const Error& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  for (auto field : split(text, ','))
    if (!trim(field).empty()) out.emplace_back(trim(field));
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& flag, const std::string& text, Parse parse) {
  const auto names = split_names(text);
  if (names.empty()) throw UsageError(flag + ": list is empty");
  std::vector<T> out;
  for (const auto& n : names) out.push_back(flag_value(flag, [&] { return parse(n); }));
  return out;
}

std::vector<int> parse_ids(const std::string& flag, const std::string& text) {
  std::vector<int> ids;
  for (auto field : split(text, ','))
    if (!trim(field).empty()) ids.push_back(static_cast<int>(flag_value(flag, [&] { return parse_int(field); })));
  return ids;
}

std::uint64_t env_seed() {
  const char* text = std::getenv("EEGCS_SEED");
  if (text == nullptr || *text == '\0') return 1;
  const auto v = flag_value("EEGCS_SEED", [&] { return parse_int(text); });
  if (v < 0) throw UsageError("EEGCS_SEED: seed must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

void make_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// Writes through a temporary sibling so a failed run leaves no partial file.
void write_output(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  make_parent(path);
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    body(out);
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("failed writing " + path.string());
    }
  }
  fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
  write_output(path, [&](std::ostream& out) { out << text; });
}

std::string fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<size_t>(i)]);
      h *= 0x100000001b3ull;
    }
  }
  std::ostringstream s;
  s << std::hex << h;
  return s.str();
}

std::string compiler_version() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
         std::to_string(__GNUC_PATCHLEVEL__);
#else
  return "unknown";
#endif
}

// Reads a flat `key = value` file (`#` comments, optional quotes) into
// `--key=value` arguments for every key not already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw UsageError("--config: missing file name");
      path = args[i + 1];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path);

  const auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.starts_with("--" + key + "=");
    });
  };
  std::vector<std::string> out = args;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("--config: " + path + " line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(text.substr(0, eq)));
    std::string_view value = trim(text.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config")
      throw UsageError("--config: " + path + " line " + std::to_string(line_no) + ": invalid key");
    if (value.empty() || given(key)) continue;
    out.push_back("--" + key + "=" + std::string(value));
  }
  return out;
}

// The manifest is itself a valid --config file: rerunning the subcommand with
// it reproduces the outputs from the same inputs.
void write_manifest(const CLI::App& sub, const fs::path& out, const std::vector<fs::path>& inputs) {
  std::ostringstream m;
  m << "# eegcs " << EEGCS_VERSION << " manifest\n";
  m << "# command: " << sub.get_name() << '\n';
  m << "# compiler: " << compiler_version() << '\n';
  m << "# eigen: " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
  for (const fs::path& p : inputs)
    m << "# input: " << p.string() << " bytes=" << fs::file_size(p) << " fnv1a64=" << fnv1a_file(p) << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string key = opt->get_single_name();
    if (key == "help" || key == "config" || key == "quiet") continue;
    const std::string value = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
    m << key << " = " << value << '\n';
  }
  write_text(out.string() + ".manifest", m.str());
}

std::string metric_line(const Metrics& m) {
  return std::string(to_string(m.task)) + " " + format_fixed(m.value, 4) + " " + std::string(m.unit()) + " (n=" +
         std::to_string(m.n) + ")";
}

// ---- option sets shared by several subcommands ------------------------------

struct TrainFlags {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int early_stop = 5;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Maximum training epochs")->check(CLI::PositiveNumber);
    app->add_option("--batch-size", batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    app->add_option("--learning-rate", learning_rate, "Adam step size")->check(CLI::PositiveNumber);
    app->add_option("--early-stop", early_stop, "Epochs without validation improvement before stopping")
        ->check(CLI::PositiveNumber);
  }
  TrainConfig config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.patience = early_stop;
    cfg.seed = seed;
    return cfg;
  }
};

struct PreprocessFlags {
  std::string band = "broadband";
  double bad_z = 5.0;
  std::string proxies;

  void add(CLI::App* app) {
    app->add_option("--band", band, "Registry band or lo-hi in Hz");
    app->add_option("--bad-z", bad_z, "Robust z threshold for bad-channel detection")->check(CLI::PositiveNumber);
    app->add_option("--proxies", proxies, "Ocular proxy electrode ids for the maximal regime (default per layout)");
  }
  PreprocessConfig config(const std::string& regime) const {
    PreprocessConfig cfg;
    cfg.regime = flag_value("--regime", [&] { return parse_regime(regime); });
    cfg.band = flag_value("--band", [&] { return parse_band(band); });
    cfg.bad_channel_z = bad_z;
    cfg.ocular_proxy_ids = parse_ids("--proxies", proxies);
    return cfg;
  }
};

ElectrodeLayout layout_flag(const std::string& name) {
  return flag_value("--layout", [&] { return resolve_layout(name); });
}

DatasetSplit load_split(const fs::path& path, std::uint64_t split_seed, const Log& log) {
  const Recording rec = read_container(path);
  WindowingResult w = window_events(rec);
  if (w.dropped > 0) log.info("dropped " + std::to_string(w.dropped) + " events too close to the end");
  return split_by_subject(w.dataset, SplitRatios{}, split_seed);
}

std::optional<std::vector<int>> ranking_from(const std::string& importance_path) {
  if (importance_path.empty()) return std::nullopt;
  return rank_electrodes(read_importance(importance_path));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Electrode cluster selection for eye-movement decoding from EEG", "eegcs");
  app.require_subcommand(1);
  app.set_version_flag("--version", EEGCS_VERSION);
  bool quiet = false;
  const Log log(err, quiet);

  std::uint64_t seed = 1;
  int split_seed = 1;
  std::string layout_name = "egi129";
  std::string in_path, out_path;
  size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", "Flat key = value file; command-line flags override it");
    sub->option_defaults()->always_capture_default();
    sub->add_flag("-q,--quiet", quiet, "Suppress log lines");
  };
  const auto add_layout = [&](CLI::App* sub) {
    sub->add_option("--layout", layout_name, "egi129, grid<P>x<M> or a layout file");
  };
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed (default: EEGCS_SEED or 1)");
  };
  const auto add_split_seed = [&](CLI::App* sub) {
    sub->add_option("--split-seed", split_seed, "Seed of the subject-wise train/val/test split")
        ->check(CLI::NonNegativeNumber);
  };
  const auto add_jobs = [&](CLI::App* sub) {
    sub->add_option("--jobs", jobs, "Concurrent training runs")->check(CLI::PositiveNumber);
  };

  // synth
  SyntheticSpec synth_spec{ElectrodeLayout{}};
  auto* synth = app.add_subcommand("synth", "Generate a synthetic recording container");
  common(synth);
  add_layout(synth);
  add_seed(synth);
  synth->add_option("--events", synth_spec.n_events, "Number of saccade events")->check(CLI::PositiveNumber);
  synth->add_option("--snr-db", synth_spec.snr_db, "Signal to noise power ratio in dB");
  synth->add_option("--ocular-gain", synth_spec.ocular_gain, "Gain of the ocular component")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--occipital-gain", synth_spec.occipital_gain, "Gain of the saccade-locked neural bursts")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--noise-exponent", synth_spec.noise_exponent, "Noise spectrum 1/f^a exponent");
  synth->add_option("--subjects", synth_spec.n_subjects, "Number of simulated subjects")->check(CLI::PositiveNumber);
  synth->add_option("--out", out_path, "Output container")->required();

  // preprocess
  PreprocessFlags pre_flags;
  std::string regime = "minimal";
  auto* pre = app.add_subcommand("preprocess", "Bad-channel repair, bandpass, re-reference, ocular removal");
  common(pre);
  add_layout(pre);
  pre->add_option("--in", in_path, "Input container")->required()->check(CLI::ExistingFile);
  pre->add_option("--regime", regime, "minimal or maximal");
  pre_flags.add(pre);
  pre->add_option("--out", out_path, "Output container")->required();

  // train
  TrainFlags train_flags;
  std::string arch_name = "compact_cnn", task_name = "lr", cluster_name = "all", importance_path;
  auto* trn = app.add_subcommand("train", "Train one model on a preprocessed container");
  common(trn);
  add_layout(trn);
  add_seed(trn);
  add_split_seed(trn);
  trn->add_option("--in", in_path, "Preprocessed container")->required()->check(CLI::ExistingFile);
  trn->add_option("--arch", arch_name, "linear, compact_cnn or pyramidal_cnn");
  trn->add_option("--task", task_name, "lr, amplitude, angle or position");
  trn->add_option("--cluster", cluster_name, "Registry cluster, region name or id list");
  trn->add_option("--importance", importance_path, "Importance map ranking the front/back regions")
      ->check(CLI::ExistingFile);
  train_flags.add(trn);
  trn->add_option("--out", out_path, "Output checkpoint")->required();

  // importance
  std::string model_path, norm_name = "max", split_name = "test";
  auto* imp = app.add_subcommand("importance", "Input-gradient electrode importance of a trained model");
  common(imp);
  add_layout(imp);
  add_split_seed(imp);
  imp->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  imp->add_option("--in", in_path, "Preprocessed container")->required()->check(CLI::ExistingFile);
  imp->add_option("--norm", norm_name, "Per-sample gradient normalisation: max or l2");
  imp->add_option("--split", split_name, "Samples to explain: train, val, test or all");
  imp->add_option("--out", out_path, "Output importance map")->required();

  // topoplot
  bool linear_scale = false;
  int resolution = 128;
  double floor_ratio = 1e-4;
  std::string title;
  auto* topo = app.add_subcommand("topoplot", "Render an importance map as a scalp topography");
  common(topo);
  add_layout(topo);
  topo->add_option("--importance", importance_path, "Importance map")->required()->check(CLI::ExistingFile);
  topo->add_flag("--linear", linear_scale, "Linear colour scale instead of log10");
  topo->add_option("--resolution", resolution, "Raster side in pixels")->check(CLI::Range(16, 4096));
  topo->add_option("--floor", floor_ratio, "Log floor relative to the largest score")->check(CLI::PositiveNumber);
  topo->add_option("--title", title, "Figure title");
  topo->add_option("--out", out_path, "Output figure")->required();

  // select
  int n_seeds = 3, patience = 1;
  size_t budget = 0;
  auto* sel = app.add_subcommand("select", "Greedy symmetric cluster growth along an importance ranking");
  common(sel);
  add_layout(sel);
  add_split_seed(sel);
  add_jobs(sel);
  sel->add_option("--importance", importance_path, "Importance map giving the ranking")
      ->required()
      ->check(CLI::ExistingFile);
  sel->add_option("--in", in_path, "Preprocessed container")->required()->check(CLI::ExistingFile);
  sel->add_option("--arch", arch_name, "Architecture retrained per candidate");
  sel->add_option("--task", task_name, "Task whose validation loss is minimised");
  sel->add_option("--seeds", n_seeds, "Retraining seeds 1..N per candidate")->check(CLI::PositiveNumber);
  sel->add_option("--patience", patience, "Steps without improvement before stopping")->check(CLI::PositiveNumber);
  sel->add_option("--budget", budget, "Maximum cluster size, 0 for none");
  train_flags.add(sel);
  sel->add_option("--out", out_path, "Output cluster file")->required();

  // bench
  std::string regimes = "minimal", clusters = "top2,all", archs = "compact_cnn", tasks = "lr",
              bands = "delta,theta,alpha,beta";
  std::string cluster_file, table_path, figure_path, timing_name = "none";
  int bench_seeds = 5;
  auto* bench = app.add_subcommand("bench", "Train and test every cluster x arch x task x seed cell");
  common(bench);
  add_layout(bench);
  add_split_seed(bench);
  add_jobs(bench);
  bench->add_option("--in", in_path, "Raw recording container")->required()->check(CLI::ExistingFile);
  bench->add_option("--regimes", regimes, "Preprocessing regimes");
  pre_flags.add(bench);
  bench->add_option("--clusters", clusters, "Cluster names");
  bench->add_option("--cluster-file", cluster_file, "Extra clusters, one 'name: id,id' per line")
      ->check(CLI::ExistingFile);
  bench->add_option("--importance", importance_path, "Importance map ranking the front/back regions")
      ->check(CLI::ExistingFile);
  bench->add_option("--archs", archs, "Architectures");
  bench->add_option("--tasks", tasks, "Tasks");
  bench->add_option("--seeds", bench_seeds, "Seeds 1..N per cell")->check(CLI::PositiveNumber);
  bench->add_option("--timing", timing_name, "none writes 0 seconds (reproducible CSV), wall writes wall time")
      ->check(CLI::IsMember({"none", "wall"}));
  train_flags.add(bench);
  bench->add_option("--out", out_path, "Results CSV")->required();
  bench->add_option("--table", table_path, "Optional markdown table");

  // bandscan
  auto* scan = app.add_subcommand("bandscan", "LR accuracy per frequency band");
  common(scan);
  add_layout(scan);
  add_split_seed(scan);
  add_jobs(scan);
  scan->add_option("--in", in_path, "Raw recording container")->required()->check(CLI::ExistingFile);
  scan->add_option("--regime", regime, "minimal or maximal");
  scan->add_option("--bands", bands, "Registry bands or lo-hi literals");
  scan->add_option("--bad-z", pre_flags.bad_z, "Robust z threshold for bad-channel detection")
      ->check(CLI::PositiveNumber);
  scan->add_option("--proxies", pre_flags.proxies, "Ocular proxy ids for the maximal regime");
  scan->add_option("--cluster", cluster_name, "Registry cluster, region name or id list");
  scan->add_option("--archs", archs, "Architectures");
  scan->add_option("--seeds", bench_seeds, "Seeds 1..N per band")->check(CLI::PositiveNumber);
  scan->add_option("--timing", timing_name, "none or wall")->check(CLI::IsMember({"none", "wall"}));
  train_flags.add(scan);
  scan->add_option("--out", out_path, "Results CSV")->required();
  scan->add_option("--figure", figure_path, "Optional band bar chart");

  // report
  std::string result_paths;
  auto* report = app.add_subcommand("report", "Markdown table and figures from results CSVs");
  common(report);
  report->add_option("--results", result_paths, "Comma-separated results CSV files")->required();
  report->add_option("--out", out_path, "Output markdown")->required();
  report->add_option("--figure", figure_path, "Optional band bar chart (single task)");

  try {
    seed = env_seed();
    const std::vector<std::string> expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto sub_used = [&](CLI::App* sub) { return sub->parsed(); };

  try {
    if (sub_used(synth)) {
      synth_spec.layout = layout_flag(layout_name);
      synth_spec.seed = seed;
      log.info("generating " + std::to_string(synth_spec.n_events) + " events on " + synth_spec.layout.name());
      const Recording rec = generate_synthetic(synth_spec);
      write_output(out_path, [&](std::ostream& o) { write_container(rec, o); });
      write_manifest(*synth, out_path, {});
      log.info("wrote " + out_path);
      return kExitOk;
    }

    if (sub_used(pre)) {
      const ElectrodeLayout layout = layout_flag(layout_name);
      const PreprocessConfig cfg = pre_flags.config(regime);
      const Recording rec = read_container(in_path);
      const Preprocessed result = preprocess(rec, layout, cfg);
      if (result.interpolated.empty()) {
        log.info("no bad channels");
      } else {
        std::string ids;
        for (size_t i : result.interpolated) ids += (ids.empty() ? "" : ",") + std::to_string(layout[i].id);
        log.info("interpolated channels " + ids);
      }
      write_output(out_path, [&](std::ostream& o) { write_container(result.recording, o); });
      write_manifest(*pre, out_path, {in_path});
      log.info("wrote " + out_path);
      return kExitOk;
    }

    if (sub_used(trn)) {
      const ElectrodeLayout layout = layout_flag(layout_name);
      ModelSpec spec;
      spec.arch = flag_value("--arch", [&] { return parse_arch(arch_name); });
      spec.task = flag_value("--task", [&] { return parse_task(task_name); });
      const TrainConfig cfg = flag_value("training flags", [&] {
        TrainConfig c = train_flags.config(seed);
        c.validate();
        return c;
      });
      ClusterOptions copts;
      copts.ranking = ranking_from(importance_path);
      const ClusterConfig cluster =
          flag_value("--cluster", [&] { return resolve_cluster(cluster_name, layout, copts); });
      const DatasetSplit split = load_split(in_path, static_cast<std::uint64_t>(split_seed), log);
      std::vector<size_t> rows = layout.indices_of(cluster.electrode_ids);
      std::sort(rows.begin(), rows.end());
      log.info("training " + std::string(to_string(spec.arch)) + " on " + std::to_string(rows.size()) +
               " channels, " + std::to_string(split.train.size()) + " train windows");
      const TrainedModel model = train(spec, split.train, split.val, cfg, rows);
      log.info("stopped after " + std::to_string(model.train_log.size()) + " epochs");
      out << "val " << metric_line(evaluate(model, split.val)) << '\n';
      out << "test " << metric_line(evaluate(model, split.test)) << '\n';
      write_output(out_path, [&](std::ostream& o) { save_checkpoint(model, o); });
      std::vector<fs::path> inputs = {in_path};
      if (!importance_path.empty()) inputs.emplace_back(importance_path);
      write_manifest(*trn, out_path, inputs);
      return kExitOk;
    }

    if (sub_used(imp)) {
      const ElectrodeLayout layout = layout_flag(layout_name);
      const SaliencyNorm norm = flag_value("--norm", [&] { return parse_saliency_norm(norm_name); });
      if (split_name != "train" && split_name != "val" && split_name != "test" && split_name != "all")
        throw UsageError("--split: expected train, val, test or all, got '" + split_name + "'");
      const TrainedModel model = load_checkpoint(model_path);
      ImportanceMap map;
      if (split_name == "all") {
        const Recording rec = read_container(in_path);
        map = electrode_importance(model, window_events(rec).dataset, layout, norm);
      } else {
        const DatasetSplit split = load_split(in_path, static_cast<std::uint64_t>(split_seed), log);
        const WindowedDataset& ds = split_name == "train" ? split.train : split_name == "val" ? split.val : split.test;
        map = electrode_importance(model, ds, layout, norm);
      }
      write_output(out_path, [&](std::ostream& o) { write_importance(map, o); });
      write_manifest(*imp, out_path, {model_path, in_path});
      const auto rank = rank_electrodes(map);
      std::string top;
      for (size_t i = 0; i < std::min<size_t>(8, rank.size()); ++i) top += (i ? "," : "") + std::to_string(rank[i]);
      log.info("top electrodes " + top);
      return kExitOk;
    }

    if (sub_used(topo)) {
      TopoplotSpec spec;
      spec.layout = layout_flag(layout_name);
      spec.map = read_importance(importance_path);
      spec.log_scale = !linear_scale;
      spec.grid_resolution = resolution;
      spec.floor_ratio = floor_ratio;
      spec.title = title;
      write_text(out_path, topoplot_svg(spec));
      write_manifest(*topo, out_path, {importance_path});
      log.info("wrote " + out_path);
      return kExitOk;
    }

    if (sub_used(sel)) {
      const ElectrodeLayout layout = layout_flag(layout_name);
      ModelSpec spec;
      spec.arch = flag_value("--arch", [&] { return parse_arch(arch_name); });
      spec.task = flag_value("--task", [&] { return parse_task(task_name); });
      const TrainConfig cfg = flag_value("training flags", [&] {
        TrainConfig c = train_flags.config(1);
        c.validate();
        return c;
      });
      if (budget > layout.size())
        throw UsageError("--budget: " + std::to_string(budget) + " exceeds the " + std::to_string(layout.size()) +
                         " channels of " + layout.name());
      const ImportanceMap map = read_importance(importance_path);
      if (map.layout_name != layout.name())
        throw Error("importance map is for layout " + map.layout_name + ", not " + layout.name());
      const auto rank = rank_electrodes(map);
      const DatasetSplit split = load_split(in_path, static_cast<std::uint64_t>(split_seed), log);
      const ClusterEval inner =
          retrain_evaluator(split, layout, spec, cfg, default_seeds(static_cast<size_t>(n_seeds)), jobs);
      const ClusterEval eval_fn = [&](const std::vector<int>& ids) {
        const LossEstimate est = inner(ids);
        log.info("cluster size " + std::to_string(ids.size()) + ": val loss " + format_fixed(est.mean, 6) + " ± " +
                 format_fixed(est.std, 6));
        return est;
      };
      auto [cluster, trace] = greedy_symmetric_select(rank, layout, eval_fn, patience, budget);
      log.info("stopped: " + std::string(to_string(trace.stopped_reason)) + ", best step " +
               std::to_string(trace.best_step + 1));
      write_output(out_path, [&](std::ostream& o) {
        o << "# stopped: " << to_string(trace.stopped_reason) << '\n';
        for (size_t i = 0; i < trace.steps.size(); ++i) {
          const SelectionStep& s = trace.steps[i];
          o << "# step " << i + 1 << " added";
          for (int id : s.added) o << ' ' << id;
          o << " size " << s.cluster_size << " val_loss " << format_double(s.loss.mean) << " std "
            << format_double(s.loss.std) << (i == trace.best_step ? " best" : "") << '\n';
        }
        write_cluster_file(std::span<const ClusterConfig>(&cluster, 1), o);
      });
      write_manifest(*sel, out_path, {importance_path, in_path});
      out << cluster.name << ':';
      for (size_t i = 0; i < cluster.electrode_ids.size(); ++i) out << (i ? "," : " ") << cluster.electrode_ids[i];
      out << '\n';
      return kExitOk;
    }

    if (sub_used(bench) || sub_used(scan)) {
      const bool is_bench = sub_used(bench);
      CLI::App* sub = is_bench ? bench : scan;
      const ElectrodeLayout layout = layout_flag(layout_name);
      const auto arch_list = parse_list<Arch>("--archs", archs, parse_arch);
      const auto seeds = default_seeds(static_cast<size_t>(bench_seeds));
      GridOptions grid;
      grid.train = flag_value("training flags", [&] {
        TrainConfig c = train_flags.config(1);
        c.validate();
        return c;
      });
      grid.jobs = jobs;
      grid.timing = timing_name == "wall" ? TimingMode::wall : TimingMode::none;
      grid.on_record = [&](const RunRecord& r) {
        log.info(r.task + " " + r.cluster + " " + r.arch + " " + r.band + " " + r.regime + " seed " +
                 std::to_string(r.seed) + ": " + (r.ok() ? format_fixed(r.metric, 4) : "failed (" + r.error + ")") +
                 " in " + format_fixed(r.elapsed, 1) + " s");
      };
      std::vector<fs::path> inputs = {in_path};
      BenchmarkResult result;

      if (is_bench) {
        const auto task_list = parse_list<Task>("--tasks", tasks, parse_task);
        std::vector<PreprocessConfig> configs;
        for (const auto& r : split_names(regimes)) configs.push_back(pre_flags.config(r));
        if (configs.empty()) throw UsageError("--regimes: list is empty");
        ClusterOptions copts;
        copts.ranking = ranking_from(importance_path);
        if (!importance_path.empty()) inputs.emplace_back(importance_path);
        std::vector<ClusterConfig> cluster_list;
        for (const auto& name : split_names(clusters))
          cluster_list.push_back(flag_value("--clusters", [&] { return resolve_cluster(name, layout, copts); }));
        if (!cluster_file.empty()) {
          inputs.emplace_back(cluster_file);
          for (const ClusterConfig& c : read_cluster_file(cluster_file))
            cluster_list.push_back(make_cluster(c.name, c.electrode_ids, layout));
        }
        if (cluster_list.empty()) throw UsageError("--clusters: no clusters to run");

        std::vector<RegimeData> data;
        {
          const Recording rec = read_container(in_path);
          for (const PreprocessConfig& cfg : configs) {
            log.info("preprocessing " + std::string(to_string(cfg.regime)) + " " + cfg.band.name);
            RegimeData d;
            d.regime = to_string(cfg.regime);
            d.band = cfg.band.name;
            const Preprocessed p = preprocess(rec, layout, cfg);
            d.split = split_by_subject(window_events(p.recording).dataset, SplitRatios{},
                                       static_cast<std::uint64_t>(split_seed));
            data.push_back(std::move(d));
          }
        }
        result = run_grid(data, layout, cluster_list, arch_list, task_list, seeds, grid);
      } else {
        std::vector<BandSpec> band_list = parse_list<BandSpec>("--bands", bands, parse_band);
        BandscanOptions opts;
        opts.preprocess = pre_flags.config(regime);
        opts.split_seed = static_cast<std::uint64_t>(split_seed);
        opts.grid = grid;
        const ClusterConfig cluster =
            flag_value("--cluster", [&] { return resolve_cluster(cluster_name, layout, ClusterOptions{}); });
        if (cluster_name != "all") opts.cluster_ids = cluster.electrode_ids;
        const Recording rec = read_container(in_path);
        result = bandscan(rec, layout, band_list, arch_list, seeds, opts);
      }

      // Render everything before writing anything.
      const std::string csv = format_table(result, TableStyle::csv);
      const std::string table = format_table(result, TableStyle::markdown);
      const std::string figure = figure_path.empty() ? std::string() : band_bar_svg(result);
      std::ostringstream timings;
      timings << "task,cluster,arch,band,regime,seed,seconds\n";
      for (const RunRecord& r : result.records)
        timings << r.task << ',' << r.cluster << ',' << r.arch << ',' << r.band << ',' << r.regime << ',' << r.seed
                << ',' << format_fixed(r.elapsed, 3) << '\n';
      write_text(out_path, csv);
      write_text(out_path + ".timings.csv", timings.str());
      if (!table_path.empty()) write_text(table_path, table);
      if (!figure_path.empty()) write_text(figure_path, figure);
      write_manifest(*sub, out_path, inputs);
      out << table;
      const auto failures = std::count_if(result.records.begin(), result.records.end(),
                                          [](const RunRecord& r) { return !r.ok(); });
      if (failures > 0) log.info(std::to_string(failures) + " of " + std::to_string(result.records.size()) + " runs failed");
      return kExitOk;
    }

    if (sub_used(report)) {
      BenchmarkResult result;
      std::vector<fs::path> inputs;
      const auto paths = split_names(result_paths);
      if (paths.empty()) throw UsageError("--results: list is empty");
      for (const auto& p : paths)
        if (!fs::is_regular_file(p)) throw UsageError("--results: file does not exist: " + p);
      for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw Error("cannot open " + p);
        BenchmarkResult part = parse_results_csv(in);
        result.records.insert(result.records.end(), part.records.begin(), part.records.end());
        inputs.emplace_back(p);
      }
      const std::string table = format_table(result, TableStyle::markdown);
      const std::string figure = figure_path.empty() ? std::string() : band_bar_svg(result);
      write_text(out_path, table);
      if (!figure_path.empty()) write_text(figure_path, figure);
      write_manifest(*report, out_path, inputs);
      out << table;
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace eegcs::cli
