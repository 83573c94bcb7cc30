#pragma once

#include "eegcs/layout.hpp"
#include "eegcs/saliency.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eegcs {

struct ClusterConfig {
  std::string name;
  std::vector<int> electrode_ids;  // ascending, unique

  bool operator==(const ClusterConfig&) const = default;
};

/// Sorts and deduplicates ids and checks them against the layout.
ClusterConfig make_cluster(std::string name, std::vector<int> ids, const ElectrodeLayout& layout);

bool is_symmetry_closed(const ElectrodeLayout& layout, std::span<const int> ids);

/// Ids sorted by descending score; equal scores by ascending id.
std::vector<int> rank_electrodes(const ImportanceMap& map);

enum class StopReason { no_improvement, exhausted, budget };
std::string_view to_string(StopReason r);

struct LossEstimate {
  double mean = 0.0;
  double std = 0.0;
};

struct SelectionStep {
  std::vector<int> added;
  size_t cluster_size = 0;
  LossEstimate loss;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  StopReason stopped_reason = StopReason::exhausted;
  size_t best_step = 0;  // index into steps
};

/// Validation loss of a model retrained on the given cluster (lower is better).
using ClusterEval = std::function<LossEstimate(const std::vector<int>& cluster_ids)>;

/// Grows a cluster from empty by adding the best-ranked unused electrode and
/// its mirror partner, evaluating after each step. Stops once the loss has not
/// improved for `patience` consecutive steps, when the ranking is used up, or
/// when the next step would exceed `budget` electrodes (0: no limit). Returns
/// the best-loss prefix.
std::pair<ClusterConfig, SelectionTrace> greedy_symmetric_select(std::span<const int> rank,
                                                                 const ElectrodeLayout& layout,
                                                                 const ClusterEval& eval_fn, int patience = 1,
                                                                 size_t budget = 0);

struct RegionSplit {
  ClusterConfig front;
  ClusterConfig back;
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultFrontier = 0.2;

/// front = {y > frontier}, back = {y < -frontier}; ids in the band are dropped.
RegionSplit region_split(const ElectrodeLayout& layout, std::span<const int> ids, double frontier = kDefaultFrontier);

/// Top2, Top3, Top8 and SideFronts on the 129-electrode layout.
const std::vector<ClusterConfig>& cluster_registry();

/// Names accepted by resolve_cluster.
const std::vector<std::string>& cluster_names();

struct ClusterOptions {
  double frontier = kDefaultFrontier;
  std::optional<std::vector<int>> ranking;  // importance ranking for front/back
  size_t region_prefix = 40;                // ranked prefix for front/back; doubled for *_ext
};

/// Resolves a registry name, `all`, `front|back|front_ext|back_ext`, or a
/// literal id list `id,id,...`. Without a ranking, front/back split every
/// electrode at the frontier and the extended variants split at 0.
ClusterConfig resolve_cluster(std::string_view name, const ElectrodeLayout& layout, const ClusterOptions& opts = {});

/// `name: id,id,...` per line; `#` starts a comment.
std::vector<ClusterConfig> read_cluster_file(std::istream& in);
std::vector<ClusterConfig> read_cluster_file(const std::filesystem::path& path);
void write_cluster_file(std::span<const ClusterConfig> clusters, std::ostream& out);
void write_cluster_file(std::span<const ClusterConfig> clusters, const std::filesystem::path& path);

}  // namespace eegcs
