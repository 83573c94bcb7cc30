#pragma once

#include "eegcs/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eegcs {

// ---- tensors -------------------------------------------------------------------

struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> dims, double fill = 0.0, bool grad = false);

  size_t numel() const;
  size_t dim(size_t i) const { return shape.at(i); }

  double& at(size_t i, size_t j) { return values[i * shape[1] + j]; }
  double at(size_t i, size_t j) const { return values[i * shape[1] + j]; }
  double& at(size_t i, size_t j, size_t k) { return values[(i * shape[1] + j) * shape[2] + k]; }
  double at(size_t i, size_t j, size_t k) const { return values[(i * shape[1] + j) * shape[2] + k]; }

  void validate() const;  // length matches shape, values finite
};

// ---- specs -----------------------------------------------------------------------

enum class Arch { linear, compact_cnn, pyramidal_cnn };
enum class Task { lr, amplitude, angle, position };

std::string_view to_string(Arch a);
std::string_view to_string(Task t);
Arch parse_arch(std::string_view text);
Task parse_task(std::string_view text);

/// Output width of the task head: 1 for lr/amplitude, 2 for angle (sin, cos)
/// and position (x, y).
size_t head_width(Task t);

/// Regression targets are fed to the network in units of this many pixels;
/// positions are additionally centred on the screen.
inline constexpr double kTargetPixelScale = 100.0;

struct ModelSpec {
  Arch arch = Arch::compact_cnn;
  size_t in_channels = 0;
  size_t window = kWindowSamples;
  Task task = Task::lr;
  double input_scale = 1.0;  // inputs are divided by this before the first layer
};

size_t param_count(const ModelSpec& spec);
std::vector<double> init_params(const ModelSpec& spec, std::uint64_t seed);

/// Human-readable layer listing, one layer per line.
std::string describe(const ModelSpec& spec);

struct EpochLog {
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const EpochLog&) const = default;
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<double> params;
  std::vector<EpochLog> train_log;
  std::uint64_t seed = 0;
  std::vector<size_t> channels;  // dataset rows fed to the model; empty means all rows
};

// ---- forward / loss / backward ----------------------------------------------------

/// batch: B x C x window. Returns B x head_width predictions after the task
/// link (logistic, softplus, unit-normalised pair, identity).
Tensor forward(const TrainedModel& model, const Tensor& batch);

/// Mean over the batch. lr: binary cross-entropy on probabilities; amplitude:
/// squared error; angle and position: squared Euclidean distance between pairs.
double loss(Task task, const Tensor& pred, const Tensor& target);

struct Gradients {
  double loss = 0.0;
  std::vector<double> params;
  Tensor input;  // B x C x window, empty unless requested
};

/// Exact reverse-mode gradients of the mean batch loss.
Gradients backward(const TrainedModel& model, const Tensor& batch, const Tensor& targets, bool input_grad = true);

// ---- data plumbing ------------------------------------------------------------------

/// Gathers windows `samples` restricted to dataset rows `channels` (all rows when
/// empty) into a B x C x window tensor.
Tensor make_batch(const WindowedDataset& ds, std::span<const size_t> samples, std::span<const size_t> channels);

/// Network-space targets: lr label in {0,1}; amplitude / 100 px; angle as
/// (sin, cos); position centred on the screen and divided by 100 px.
Tensor make_targets(Task task, const WindowedDataset& ds, std::span<const size_t> samples);

// ---- training -------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 30;
  size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  int patience = 5;

  void validate() const;
};

/// Adam on shuffled mini-batches; keeps the parameters with the lowest
/// validation loss and stops after `patience` epochs without improvement.
/// input_scale is set to the RMS of the training inputs.
TrainedModel train(ModelSpec spec, const WindowedDataset& train_ds, const WindowedDataset& val_ds,
                   const TrainConfig& cfg, std::vector<size_t> channels = {});

struct Metrics {
  Task task = Task::lr;
  double value = 0.0;
  size_t n = 0;

  std::string_view unit() const;
  bool higher_is_better() const { return task == Task::lr; }
};

/// lr: accuracy in percent; amplitude: mean absolute error in px; angle: mean
/// absolute wrapped angular error in rad; position: mean Euclidean distance in px.
Metrics evaluate(const TrainedModel& model, const WindowedDataset& ds);

/// Mean task loss over a dataset, in network units.
double dataset_loss(const TrainedModel& model, const WindowedDataset& ds);

/// |atan2(sin d, cos d)| for d = a - b.
double wrapped_angle_error(double a, double b);

// ---- checkpoints ------------------------------------------------------------------------

void save_checkpoint(const TrainedModel& model, std::ostream& out);
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(std::istream& in);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace eegcs
