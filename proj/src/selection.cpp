#include "eegcs/selection.hpp"

#include "eegcs/error.hpp"
#include "eegcs/textio.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

namespace eegcs {

namespace {

std::vector<int> sorted_unique(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<int> with(std::vector<int> base, std::initializer_list<int> extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return sorted_unique(std::move(base));
}

}  // namespace

ClusterConfig make_cluster(std::string name, std::vector<int> ids, const ElectrodeLayout& layout) {
  if (ids.empty()) throw Error("cluster '" + name + "' is empty");
  for (int id : ids)
    if (!layout.contains(id))
      throw LayoutError("cluster '" + name + "' names electrode " + std::to_string(id) + ", which layout " +
                        layout.name() + " does not have");
  return {std::move(name), sorted_unique(std::move(ids))};
}

bool is_symmetry_closed(const ElectrodeLayout& layout, std::span<const int> ids) {
  const std::set<int> members(ids.begin(), ids.end());
  return std::all_of(ids.begin(), ids.end(), [&](int id) { return members.count(layout.partner(id)) != 0; });
}

std::vector<int> rank_electrodes(const ImportanceMap& map) {
  map.validate();
  std::vector<size_t> order(map.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (map.scores[a] != map.scores[b]) return map.scores[a] > map.scores[b];
    return map.ids[a] < map.ids[b];
  });
  std::vector<int> ids;
  ids.reserve(order.size());
  for (size_t i : order) ids.push_back(map.ids[i]);
  return ids;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::no_improvement: return "no_improvement";
    case StopReason::exhausted: return "exhausted";
    case StopReason::budget: return "budget";
  }
  return "?";
}

std::pair<ClusterConfig, SelectionTrace> greedy_symmetric_select(std::span<const int> rank,
                                                                 const ElectrodeLayout& layout,
                                                                 const ClusterEval& eval_fn, int patience,
                                                                 size_t budget) {
  if (patience < 1) throw Error("selection patience must be >= 1");
  if (budget > layout.size())
    throw Error("selection budget " + std::to_string(budget) + " exceeds the " + std::to_string(layout.size()) +
                " channels of " + layout.name());
  for (int id : rank)
    if (!layout.contains(id)) throw LayoutError("ranked electrode " + std::to_string(id) + " not in layout");

  SelectionTrace trace;
  std::vector<int> cluster;
  std::set<int> members;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  size_t pos = 0;
  while (true) {
    while (pos < rank.size() && members.count(rank[pos])) ++pos;
    if (pos == rank.size()) {
      trace.stopped_reason = StopReason::exhausted;
      break;
    }
    const int id = rank[pos];
    const int partner = layout.partner(id);
    SelectionStep step;
    step.added = partner == id ? std::vector<int>{id} : std::vector<int>{id, partner};
    if (budget != 0 && cluster.size() + step.added.size() > budget) {
      trace.stopped_reason = StopReason::budget;
      break;
    }
    for (int a : step.added) {
      cluster.push_back(a);
      members.insert(a);
    }
    step.cluster_size = cluster.size();
    try {
      step.loss = eval_fn(cluster);
    } catch (const std::exception& e) {
      throw Error("selection step " + std::to_string(trace.steps.size() + 1) + " (cluster size " +
                  std::to_string(cluster.size()) + "): " + e.what());
    }
    trace.steps.push_back(step);
    if (step.loss.mean < best) {
      best = step.loss.mean;
      trace.best_step = trace.steps.size() - 1;
      since_best = 0;
    } else if (++since_best >= patience) {
      trace.stopped_reason = StopReason::no_improvement;
      break;
    }
  }
  if (trace.steps.empty()) throw Error("selection evaluated no cluster (empty ranking or budget too small)");

  std::vector<int> chosen;
  for (size_t i = 0; i <= trace.best_step; ++i)
    chosen.insert(chosen.end(), trace.steps[i].added.begin(), trace.steps[i].added.end());
  return {make_cluster("selected", std::move(chosen), layout), std::move(trace)};
}

RegionSplit region_split(const ElectrodeLayout& layout, std::span<const int> ids, double frontier) {
  RegionSplit out;
  out.front.name = "front";
  out.back.name = "back";
  for (int id : ids) {
    const double y = layout.by_id(id).pos.y;
    if (y > frontier) out.front.electrode_ids.push_back(id);
    else if (y < -frontier) out.back.electrode_ids.push_back(id);
  }
  out.front.electrode_ids = sorted_unique(std::move(out.front.electrode_ids));
  out.back.electrode_ids = sorted_unique(std::move(out.back.electrode_ids));
  if (out.front.electrode_ids.empty())
    out.warnings.push_back("front region is empty at frontier " + format_double(frontier));
  if (out.back.electrode_ids.empty())
    out.warnings.push_back("back region is empty at frontier " + format_double(frontier));
  return out;
}

const std::vector<ClusterConfig>& cluster_registry() {
  static const std::vector<ClusterConfig> registry = [] {
    const std::vector<int> top2 = {125, 128};
    const std::vector<int> top3 = with(top2, {17});
    const std::vector<int> top8 = with(top3, {1, 32, 38, 121, 129});
    const std::vector<int> sidefronts = with(top8, {4, 5, 6, 8, 12, 14, 19, 21, 25, 33, 43, 120, 122, 126, 127});
    return std::vector<ClusterConfig>{
        {"top2", top2}, {"top3", top3}, {"top8", top8}, {"sidefronts", sidefronts}};
  }();
  return registry;
}

const std::vector<std::string>& cluster_names() {
  static const std::vector<std::string> names = {"top2", "top3", "top8", "sidefronts", "front",
                                                 "back", "front_ext", "back_ext", "all"};
  return names;
}

ClusterConfig resolve_cluster(std::string_view name, const ElectrodeLayout& layout, const ClusterOptions& opts) {
  for (const ClusterConfig& c : cluster_registry())
    if (c.name == name) return make_cluster(c.name, c.electrode_ids, layout);
  if (name == "all") return make_cluster("all", layout.ids(), layout);

  const bool front = name == "front" || name == "front_ext";
  const bool back = name == "back" || name == "back_ext";
  if (front || back) {
    const bool extended = name.ends_with("_ext");
    RegionSplit split;
    if (opts.ranking) {
      const size_t k = std::min(opts.ranking->size(), opts.region_prefix * (extended ? 2 : 1));
      split = region_split(layout, std::span<const int>(opts.ranking->data(), k), opts.frontier);
    } else {
      const std::vector<int> all = layout.ids();
      split = region_split(layout, all, extended ? 0.0 : opts.frontier);
    }
    ClusterConfig c = front ? split.front : split.back;
    c.name = std::string(name);
    if (c.electrode_ids.empty()) throw Error("cluster '" + c.name + "' is empty on layout " + layout.name());
    return c;
  }

  if (!name.empty() && name.find_first_not_of("0123456789, ") == std::string_view::npos) {
    std::vector<int> ids;
    for (auto field : split(name, ','))
      if (!trim(field).empty()) ids.push_back(static_cast<int>(parse_int(field)));
    return make_cluster(std::string(name), std::move(ids), layout);
  }
  throw Error("unknown cluster '" + std::string(name) +
              "' (expected top2, top3, top8, sidefronts, front, back, front_ext, back_ext, all or an id list)");
}

std::vector<ClusterConfig> read_cluster_file(std::istream& in) {
  std::vector<ClusterConfig> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected 'name: id,id,...'", line_no);
    ClusterConfig c;
    c.name = std::string(trim(text.substr(0, colon)));
    if (c.name.empty()) throw ParseError("cluster name is empty", line_no);
    for (auto field : split(text.substr(colon + 1), ','))
      if (!trim(field).empty()) c.electrode_ids.push_back(static_cast<int>(parse_int(field, line_no)));
    if (c.electrode_ids.empty()) throw ParseError("cluster '" + c.name + "' has no electrodes", line_no);
    c.electrode_ids = sorted_unique(std::move(c.electrode_ids));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ClusterConfig> read_cluster_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cluster file " + path.string());
  return read_cluster_file(in);
}

void write_cluster_file(std::span<const ClusterConfig> clusters, std::ostream& out) {
  for (const ClusterConfig& c : clusters) {
    out << c.name << ':';
    for (size_t i = 0; i < c.electrode_ids.size(); ++i) out << (i ? "," : " ") << c.electrode_ids[i];
    out << '\n';
  }
  if (!out) throw Error("failed writing cluster file");
}

void write_cluster_file(std::span<const ClusterConfig> clusters, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_cluster_file(clusters, out);
}

}  // namespace eegcs
