#include "eegcs/error.hpp"
#include "eegcs/model.hpp"
#include "eegcs/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace eegcs {

namespace {

constexpr size_t kEvalChunk = 256;

size_t input_channels(const WindowedDataset& ds, std::span<const size_t> channels) {
  return channels.empty() ? ds.channels() : channels.size();
}

// Runs the network over the dataset in fixed chunks, handing raw outputs to `visit`.
template <typename Visit>
void for_each_chunk(const nn::Network& net, const TrainedModel& model, const WindowedDataset& ds, Visit visit) {
  nn::Workspace ws;
  std::vector<size_t> idx;
  for (size_t start = 0; start < ds.size(); start += kEvalChunk) {
    const size_t stop = std::min(ds.size(), start + kEvalChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor batch = make_batch(ds, idx, model.channels);
    const auto& raw = net.forward(model.params, batch, ws);
    visit(std::span<const size_t>(idx), raw);
  }
}

void check_dataset(const TrainedModel& model, const WindowedDataset& ds) {
  if (ds.empty()) throw Error("dataset is empty");
  if (input_channels(ds, model.channels) != model.spec.in_channels)
    throw ShapeError("dataset provides " + std::to_string(input_channels(ds, model.channels)) +
                     " channels, model expects " + std::to_string(model.spec.in_channels));
}

double input_rms(const WindowedDataset& ds, std::span<const size_t> channels) {
  double sum = 0.0;
  size_t count = 0;
  for (const Window& w : ds.windows) {
    if (channels.empty()) {
      sum += w.data.cast<double>().squaredNorm();
      count += static_cast<size_t>(w.data.size());
    } else {
      for (size_t c : channels) {
        sum += w.data.row(static_cast<Eigen::Index>(c)).cast<double>().squaredNorm();
        count += static_cast<size_t>(w.data.cols());
      }
    }
  }
  const double rms = count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
  return rms > 0.0 && std::isfinite(rms) ? rms : 1.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw Error("adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw Error("adam eps must be positive");
  if (patience < 1) throw Error("patience must be >= 1");
}

double dataset_loss(const TrainedModel& model, const WindowedDataset& ds) {
  check_dataset(model, ds);
  const nn::Network net(model.spec);
  double total = 0.0;
  for_each_chunk(net, model, ds, [&](std::span<const size_t> idx, const std::vector<double>& raw) {
    const Tensor targets = make_targets(model.spec.task, ds, idx);
    total += nn::loss_from_raw(model.spec.task, raw, targets, nullptr) * static_cast<double>(idx.size());
  });
  return total / static_cast<double>(ds.size());
}

Metrics evaluate(const TrainedModel& model, const WindowedDataset& ds) {
  check_dataset(model, ds);
  const nn::Network net(model.spec);
  const Task task = model.spec.task;
  const size_t w = head_width(task);
  double total = 0.0;
  std::vector<double> pred;
  for_each_chunk(net, model, ds, [&](std::span<const size_t> idx, const std::vector<double>& raw) {
    pred.resize(raw.size());
    nn::apply_link(task, raw, idx.size(), pred);
    for (size_t b = 0; b < idx.size(); ++b) {
      const Event& e = ds.windows[idx[b]].event;
      const double* p = &pred[b * w];
      switch (task) {
        case Task::lr: total += (p[0] >= 0.5) == (e.lr == Side::right) ? 1.0 : 0.0; break;
        case Task::amplitude: total += std::abs(p[0] * kTargetPixelScale - e.amplitude); break;
        case Task::angle: total += wrapped_angle_error(std::atan2(p[0], p[1]), e.angle); break;
        case Task::position:
          total += std::hypot(p[0] * kTargetPixelScale + kScreenWidth / 2.0 - e.pos_x,
                              p[1] * kTargetPixelScale + kScreenHeight / 2.0 - e.pos_y);
          break;
      }
    }
  });
  Metrics m;
  m.task = task;
  m.n = ds.size();
  m.value = total / static_cast<double>(ds.size()) * (task == Task::lr ? 100.0 : 1.0);
  return m;
}

TrainedModel train(ModelSpec spec, const WindowedDataset& train_ds, const WindowedDataset& val_ds,
                   const TrainConfig& cfg, std::vector<size_t> channels) {
  cfg.validate();
  if (train_ds.empty()) throw Error("training set is empty");
  if (val_ds.empty()) throw Error("validation set is empty");
  if (val_ds.channels() != train_ds.channels())
    throw ShapeError("training and validation sets have different channel counts");
  const size_t n_in = input_channels(train_ds, channels);
  if (spec.in_channels == 0) spec.in_channels = n_in;
  if (spec.in_channels != n_in)
    throw ShapeError("model expects " + std::to_string(spec.in_channels) + " channels, data provides " +
                     std::to_string(n_in));
  spec.input_scale = input_rms(train_ds, channels);

  const nn::Network net(spec);
  TrainedModel model;
  model.spec = spec;
  model.seed = cfg.seed;
  model.channels = std::move(channels);
  model.params = net.init(cfg.seed);

  const size_t np = model.params.size();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np);
  std::vector<double> best = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFull);
  std::vector<size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), size_t{0});
  nn::Workspace ws;
  std::vector<double> d_raw;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_total = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::span<const size_t> idx(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      const Tensor batch = make_batch(train_ds, idx, model.channels);
      const Tensor targets = make_targets(spec.task, train_ds, idx);
      double batch_loss = 0.0;
      try {
        const auto& raw = net.forward(model.params, batch, ws);
        batch_loss = nn::loss_from_raw(spec.task, raw, targets, &d_raw);
        if (!std::isfinite(batch_loss)) throw NumericError("non-finite loss");
        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(model.params, ws, d_raw, grad, nullptr);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      train_total += batch_loss * static_cast<double>(idx.size());

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (size_t i = 0; i < np; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        model.params[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
      }
    }
    EpochLog log;
    log.train_loss = train_total / static_cast<double>(order.size());
    try {
      log.val_loss = dataset_loss(model, val_ds);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(log.val_loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite validation loss");
    model.train_log.push_back(log);
    if (log.val_loss < best_val) {
      best_val = log.val_loss;
      best = model.params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.params = std::move(best);
  return model;
}

}  // namespace eegcs
