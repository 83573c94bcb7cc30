#pragma once

// Internal: the sequential reverse-mode core behind forward()/backward().

#include "eegcs/model.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace eegcs::nn {

struct Shape {
  size_t channels = 0;
  size_t length = 0;
  size_t size() const { return channels * length; }
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual Shape output(Shape in) const = 0;
  virtual size_t param_count(Shape /*in*/) const { return 0; }
  virtual void init(std::span<double> /*params*/, Shape /*in*/, std::mt19937_64& /*rng*/) const {}

  // x: batch x in.size(), y: batch x output(in).size(). `aux` is per-layer
  // scratch that survives from forward to backward.
  virtual void forward(std::span<const double> params, Shape in, size_t batch, const double* x, double* y,
                       std::vector<std::uint32_t>& aux) const = 0;

  // Accumulates into dparams; writes dx when non-null.
  virtual void backward(std::span<const double> params, Shape in, size_t batch, const double* x, const double* y,
                        const double* dy, double* dx, std::span<double> dparams,
                        const std::vector<std::uint32_t>& aux) const = 0;
};

/// Activations kept between forward and backward for one batch.
struct Workspace {
  size_t batch = 0;
  std::vector<std::vector<double>> acts;  // acts[0] is the scaled input
  std::vector<std::vector<std::uint32_t>> aux;
};

class Network {
 public:
  explicit Network(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  size_t param_count() const { return total_params_; }
  size_t output_width() const { return shapes_.back().size(); }
  std::vector<double> init(std::uint64_t seed) const;
  std::string describe() const;

  /// Raw head outputs (before the task link), batch x output_width.
  const std::vector<double>& forward(std::span<const double> params, const Tensor& batch, Workspace& ws) const;

  /// d_out: batch x output_width gradient of the loss w.r.t. raw outputs.
  void backward(std::span<const double> params, Workspace& ws, const std::vector<double>& d_out,
                std::span<double> dparams, std::vector<double>* d_input) const;

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape> shapes_;  // shapes_[i] is the input of layer i; back() is the output
  std::vector<size_t> offsets_;
  size_t total_params_ = 0;
};

// Task links and losses on raw outputs. `d_raw` receives dLoss/dRaw when non-null.
void apply_link(Task task, std::span<const double> raw, size_t batch, std::span<double> pred);
double loss_from_raw(Task task, std::span<const double> raw, const Tensor& target, std::vector<double>* d_raw);

}  // namespace eegcs::nn
