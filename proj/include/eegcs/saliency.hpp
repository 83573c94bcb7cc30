#pragma once

#include "eegcs/layout.hpp"
#include "eegcs/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eegcs {

enum class SaliencyNorm { max, l2 };

std::string_view to_string(SaliencyNorm n);
SaliencyNorm parse_saliency_norm(std::string_view text);

/// Per-electrode importance in layout order. Normalised maps sum to 1.
struct ImportanceMap {
  std::string layout_name;
  std::vector<int> ids;
  std::vector<double> scores;
  std::string task;
  std::string arch;
  size_t n_samples = 0;

  size_t size() const { return ids.size(); }
  double score_of(int id) const;
  void validate() const;  // matching lengths, scores >= 0 and finite
};

/// Input-gradient saliency of the task loss at the true labels. Each sample's
/// B x C x T gradient is divided by its max |entry| (or its L2 norm), absolute
/// values are summed over time per electrode, averaged over samples and the
/// result normalised to sum 1. Electrodes the model does not see score 0.
ImportanceMap electrode_importance(const TrainedModel& model, const WindowedDataset& ds, const ElectrodeLayout& layout,
                                   SaliencyNorm norm = SaliencyNorm::max);

/// Arithmetic mean, renormalised. Maps must share layout and electrode order.
ImportanceMap average_maps(std::span<const ImportanceMap> maps);

/// Total score held by `ids`.
double importance_mass(const ImportanceMap& map, std::span<const int> ids);

void write_importance(const ImportanceMap& map, std::ostream& out);
void write_importance(const ImportanceMap& map, const std::filesystem::path& path);
ImportanceMap read_importance(std::istream& in);
ImportanceMap read_importance(const std::filesystem::path& path);

}  // namespace eegcs
