#include "eegcs/saliency.hpp"

#include "eegcs/error.hpp"
#include "eegcs/textio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace eegcs {

namespace {

constexpr size_t kChunk = 64;

}  // namespace

std::string_view to_string(SaliencyNorm n) { return n == SaliencyNorm::max ? "max" : "l2"; }

SaliencyNorm parse_saliency_norm(std::string_view text) {
  if (text == "max") return SaliencyNorm::max;
  if (text == "l2") return SaliencyNorm::l2;
  throw Error("unknown saliency norm '" + std::string(text) + "' (expected max or l2)");
}

double ImportanceMap::score_of(int id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw LayoutError("electrode " + std::to_string(id) + " not in importance map");
  return scores[static_cast<size_t>(it - ids.begin())];
}

void ImportanceMap::validate() const {
  if (ids.empty()) throw Error("importance map is empty");
  if (ids.size() != scores.size()) throw ShapeError("importance map has mismatched ids and scores");
  for (double s : scores)
    if (!std::isfinite(s) || s < 0.0) throw NumericError("importance scores must be finite and nonnegative");
}

ImportanceMap electrode_importance(const TrainedModel& model, const WindowedDataset& ds, const ElectrodeLayout& layout,
                                   SaliencyNorm norm) {
  if (ds.empty()) throw Error("saliency needs a nonempty dataset");
  if (ds.channels() != layout.size())
    throw ShapeError("dataset has " + std::to_string(ds.channels()) + " channels, layout " + layout.name() + " has " +
                     std::to_string(layout.size()));
  std::vector<size_t> rows = model.channels;
  if (rows.empty()) {
    rows.resize(ds.channels());
    std::iota(rows.begin(), rows.end(), size_t{0});
  }
  const size_t n_in = rows.size();
  const size_t window = model.spec.window;

  std::vector<double> sums(n_in, 0.0);
  std::vector<double> per_channel(n_in);
  size_t informative = 0;
  std::vector<size_t> idx;
  for (size_t start = 0; start < ds.size(); start += kChunk) {
    idx.resize(std::min(kChunk, ds.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor batch = make_batch(ds, idx, model.channels);
    const Tensor targets = make_targets(model.spec.task, ds, idx);
    const Gradients g = backward(model, batch, targets, true);
    for (size_t b = 0; b < idx.size(); ++b) {
      const double* gb = g.input.values.data() + b * n_in * window;
      double scale = 0.0;
      for (size_t i = 0; i < n_in * window; ++i) {
        const double a = std::abs(gb[i]);
        scale = norm == SaliencyNorm::max ? std::max(scale, a) : scale + a * a;
      }
      if (norm == SaliencyNorm::l2) scale = std::sqrt(scale);
      if (!(scale > 0.0)) continue;
      for (size_t c = 0; c < n_in; ++c) {
        double s = 0.0;
        for (size_t t = 0; t < window; ++t) s += std::abs(gb[c * window + t]);
        per_channel[c] = s / scale;
      }
      for (size_t c = 0; c < n_in; ++c) sums[c] += per_channel[c];
      ++informative;
    }
  }
  if (informative == 0) throw NumericError("degenerate importance map: input gradient is zero on every sample");

  ImportanceMap map;
  map.layout_name = layout.name();
  map.ids = layout.ids();
  map.scores.assign(layout.size(), 0.0);
  map.task = to_string(model.spec.task);
  map.arch = to_string(model.spec.arch);
  map.n_samples = ds.size();
  double total = 0.0;
  for (double s : sums) total += s;
  for (size_t c = 0; c < n_in; ++c) map.scores[rows[c]] += sums[c] / total;
  return map;
}

ImportanceMap average_maps(std::span<const ImportanceMap> maps) {
  if (maps.empty()) throw Error("no importance maps to average");
  ImportanceMap out = maps[0];
  out.validate();
  std::fill(out.scores.begin(), out.scores.end(), 0.0);
  out.n_samples = 0;
  for (const ImportanceMap& m : maps) {
    m.validate();
    if (m.layout_name != out.layout_name || m.ids != out.ids)
      throw LayoutError("cannot average maps over different layouts (" + out.layout_name + " vs " + m.layout_name + ")");
    for (size_t i = 0; i < m.size(); ++i) out.scores[i] += m.scores[i];
    if (m.task != out.task) out.task = "mixed";
    if (m.arch != out.arch) out.arch = "mixed";
    out.n_samples += m.n_samples;
  }
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  if (!(total > 0.0)) throw NumericError("average of importance maps has zero mass");
  for (double& s : out.scores) s /= total;
  return out;
}

double importance_mass(const ImportanceMap& map, std::span<const int> ids) {
  double mass = 0.0;
  for (int id : ids) mass += map.score_of(id);
  return mass;
}

void write_importance(const ImportanceMap& map, std::ostream& out) {
  map.validate();
  out << "# layout: " << map.layout_name << "\n"
      << "# task: " << map.task << "\n"
      << "# arch: " << map.arch << "\n"
      << "# n_samples: " << map.n_samples << "\n";
  for (size_t i = 0; i < map.size(); ++i) out << map.ids[i] << ' ' << format_double(map.scores[i]) << '\n';
  if (!out) throw Error("failed writing importance map");
}

void write_importance(const ImportanceMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_importance(map, out);
}

ImportanceMap read_importance(std::istream& in) {
  ImportanceMap map;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto colon = text.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string_view key = trim(text.substr(1, colon - 1));
      const std::string value(trim(text.substr(colon + 1)));
      if (key == "layout") map.layout_name = value;
      else if (key == "task") map.task = value;
      else if (key == "arch") map.arch = value;
      else if (key == "n_samples") map.n_samples = static_cast<size_t>(parse_int(value, line_no));
      continue;
    }
    const auto fields = split_ws(text);
    if (fields.size() != 2) throw ParseError("expected 'electrode_id score'", line_no);
    map.ids.push_back(static_cast<int>(parse_int(fields[0], line_no)));
    map.scores.push_back(parse_double(fields[1], line_no));
  }
  try {
    map.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid importance map: ") + e.what());
  }
  return map;
}

ImportanceMap read_importance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open importance map " + path.string());
  return read_importance(in);
}

}  // namespace eegcs
