#include "eegcs/error.hpp"
#include "eegcs/model.hpp"
#include "eegcs/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace eegcs {

Tensor::Tensor(std::vector<size_t> dims, double fill, bool grad)
    : shape(std::move(dims)), values(numel(), fill), requires_grad(grad) {}

size_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
}

void Tensor::validate() const {
  if (values.size() != numel())
    throw ShapeError("tensor holds " + std::to_string(values.size()) + " values but its shape needs " +
                     std::to_string(numel()));
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("tensor contains a non-finite value");
}

std::string_view to_string(Arch a) {
  switch (a) {
    case Arch::linear: return "linear";
    case Arch::compact_cnn: return "compact_cnn";
    case Arch::pyramidal_cnn: return "pyramidal_cnn";
  }
  return "?";
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::lr: return "lr";
    case Task::amplitude: return "amplitude";
    case Task::angle: return "angle";
    case Task::position: return "position";
  }
  return "?";
}

Arch parse_arch(std::string_view text) {
  for (Arch a : {Arch::linear, Arch::compact_cnn, Arch::pyramidal_cnn})
    if (to_string(a) == text) return a;
  throw Error("unknown architecture '" + std::string(text) + "' (expected linear, compact_cnn or pyramidal_cnn)");
}

Task parse_task(std::string_view text) {
  for (Task t : {Task::lr, Task::amplitude, Task::angle, Task::position})
    if (to_string(t) == text) return t;
  throw Error("unknown task '" + std::string(text) + "' (expected lr, amplitude, angle or position)");
}

size_t head_width(Task t) { return t == Task::angle || t == Task::position ? 2 : 1; }

double wrapped_angle_error(double a, double b) {
  const double d = a - b;
  return std::abs(std::atan2(std::sin(d), std::cos(d)));
}

std::string_view Metrics::unit() const {
  switch (task) {
    case Task::lr: return "%";
    case Task::angle: return "rad";
    default: return "px";
  }
}

Tensor make_batch(const WindowedDataset& ds, std::span<const size_t> samples, std::span<const size_t> channels) {
  const size_t n_rows = ds.channels();
  std::vector<size_t> all;
  if (channels.empty()) {
    all.resize(n_rows);
    std::iota(all.begin(), all.end(), size_t{0});
    channels = all;
  }
  Tensor out({samples.size(), channels.size(), kWindowSamples});
  for (size_t b = 0; b < samples.size(); ++b) {
    const SignalMatrix& w = ds.windows.at(samples[b]).data;
    if (w.cols() != static_cast<Eigen::Index>(kWindowSamples))
      throw ShapeError("window " + std::to_string(samples[b]) + " has " + std::to_string(w.cols()) + " samples");
    for (size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] >= n_rows) throw ShapeError("channel row " + std::to_string(channels[c]) + " out of range");
      const float* src = w.row(static_cast<Eigen::Index>(channels[c])).data();
      double* dst = &out.at(b, c, 0);
      for (size_t t = 0; t < kWindowSamples; ++t) dst[t] = src[t];
    }
  }
  return out;
}

Tensor make_targets(Task task, const WindowedDataset& ds, std::span<const size_t> samples) {
  Tensor out({samples.size(), head_width(task)});
  for (size_t b = 0; b < samples.size(); ++b) {
    const Event& e = ds.windows.at(samples[b]).event;
    switch (task) {
      case Task::lr: out.at(b, 0) = e.lr == Side::right ? 1.0 : 0.0; break;
      case Task::amplitude: out.at(b, 0) = e.amplitude / kTargetPixelScale; break;
      case Task::angle:
        out.at(b, 0) = std::sin(static_cast<double>(e.angle));
        out.at(b, 1) = std::cos(static_cast<double>(e.angle));
        break;
      case Task::position:
        out.at(b, 0) = (e.pos_x - kScreenWidth / 2.0) / kTargetPixelScale;
        out.at(b, 1) = (e.pos_y - kScreenHeight / 2.0) / kTargetPixelScale;
        break;
    }
  }
  return out;
}

namespace {

void check_pair(Task task, const Tensor& pred, const Tensor& target) {
  const size_t w = head_width(task);
  if (pred.shape.size() != 2 || pred.shape[1] != w)
    throw ShapeError("prediction must be B x " + std::to_string(w) + " for task " + std::string(to_string(task)));
  if (target.shape != pred.shape) throw ShapeError("target shape does not match prediction shape");
  if (pred.shape[0] == 0) throw ShapeError("loss of an empty batch");
  for (double v : target.values)
    if (!std::isfinite(v)) throw NumericError("non-finite target");
}

}  // namespace

double loss(Task task, const Tensor& pred, const Tensor& target) {
  check_pair(task, pred, target);
  const size_t batch = pred.shape[0];
  double total = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    switch (task) {
      case Task::lr: {
        const double p = std::clamp(pred.at(b, 0), 1e-15, 1.0 - 1e-15);
        const double y = target.at(b, 0);
        total += -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
        break;
      }
      case Task::amplitude: {
        const double d = pred.at(b, 0) - target.at(b, 0);
        total += d * d;
        break;
      }
      case Task::angle:
      case Task::position: {
        const double d0 = pred.at(b, 0) - target.at(b, 0);
        const double d1 = pred.at(b, 1) - target.at(b, 1);
        total += (d0 * d0 + d1 * d1) / (task == Task::angle ? 2.0 : 1.0);
        break;
      }
    }
  }
  return total / static_cast<double>(batch);
}

namespace nn {

namespace {

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void apply_link(Task task, std::span<const double> raw, size_t batch, std::span<double> pred) {
  const size_t w = head_width(task);
  for (size_t b = 0; b < batch; ++b) {
    const double* z = &raw[b * w];
    double* p = &pred[b * w];
    switch (task) {
      case Task::lr: p[0] = sigmoid(z[0]); break;
      case Task::amplitude: p[0] = softplus(z[0]); break;
      case Task::angle: {
        const double norm = std::hypot(z[0], z[1]);
        if (norm > 0.0) {
          p[0] = z[0] / norm;
          p[1] = z[1] / norm;
        } else {
          p[0] = 0.0;
          p[1] = 1.0;
        }
        break;
      }
      case Task::position:
        p[0] = z[0];
        p[1] = z[1];
        break;
    }
  }
}

// Losses written directly on the raw outputs so the lr case stays stable for
// saturated logits.
double loss_from_raw(Task task, std::span<const double> raw, const Tensor& target, std::vector<double>* d_raw) {
  const size_t w = head_width(task);
  const size_t batch = target.shape.at(0);
  if (raw.size() != batch * w) throw ShapeError("raw output size does not match targets");
  for (double v : target.values)
    if (!std::isfinite(v)) throw NumericError("non-finite target");
  if (d_raw) d_raw->assign(raw.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    const double* z = &raw[b * w];
    const double* t = &target.values[b * w];
    double* d = d_raw ? d_raw->data() + b * w : nullptr;
    switch (task) {
      case Task::lr:
        total += softplus(z[0]) - t[0] * z[0];
        if (d) d[0] = (sigmoid(z[0]) - t[0]) * inv_b;
        break;
      case Task::amplitude: {
        const double e = softplus(z[0]) - t[0];
        total += e * e;
        if (d) d[0] = 2.0 * e * sigmoid(z[0]) * inv_b;
        break;
      }
      case Task::angle: {
        const double norm = std::hypot(z[0], z[1]);
        const double u0 = norm > 0.0 ? z[0] / norm : 0.0;
        const double u1 = norm > 0.0 ? z[1] / norm : 1.0;
        const double e0 = u0 - t[0], e1 = u1 - t[1];
        total += 0.5 * (e0 * e0 + e1 * e1);
        if (d && norm > 0.0) {
          const double g0 = e0 * inv_b, g1 = e1 * inv_b;
          const double proj = u0 * g0 + u1 * g1;
          d[0] = (g0 - u0 * proj) / norm;
          d[1] = (g1 - u1 * proj) / norm;
        }
        break;
      }
      case Task::position: {
        const double e0 = z[0] - t[0], e1 = z[1] - t[1];
        total += e0 * e0 + e1 * e1;
        if (d) {
          d[0] = 2.0 * e0 * inv_b;
          d[1] = 2.0 * e1 * inv_b;
        }
        break;
      }
    }
  }
  return total * inv_b;
}

}  // namespace nn

}  // namespace eegcs
