#include "eegcs/network.hpp"

#include "eegcs/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>

namespace eegcs::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using Eigen::Index;

Index ix(size_t v) { return static_cast<Index>(v); }

void uniform_fill(std::span<double> out, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : out) v = u(rng);
}

// Valid 1D convolution. Params: W[filters][channels][kernel] then b[filters].
class Conv1d final : public Layer {
 public:
  Conv1d(size_t kernel, size_t filters) : k_(kernel), f_(filters) {}

  std::string name() const override {
    return "conv1d(k=" + std::to_string(k_) + ", f=" + std::to_string(f_) + ")";
  }
  Shape output(Shape in) const override {
    if (in.length < k_) throw ShapeError(name() + " needs at least " + std::to_string(k_) + " samples");
    return {f_, in.length - k_ + 1};
  }
  size_t param_count(Shape in) const override { return f_ * in.channels * k_ + f_; }
  void init(std::span<double> params, Shape in, std::mt19937_64& rng) const override {
    const size_t nw = f_ * in.channels * k_;
    uniform_fill(params.first(nw), std::sqrt(1.0 / static_cast<double>(in.channels * k_)), rng);
    std::fill(params.begin() + static_cast<long>(nw), params.end(), 0.0);
  }

  void forward(std::span<const double> params, Shape in, size_t batch, const double* x, double* y,
               std::vector<std::uint32_t>&) const override {
    const Shape out = output(in);
    const size_t ck = in.channels * k_;
    CMapMat w(params.data(), ix(f_), ix(ck));
    Eigen::Map<const Eigen::VectorXd> bias(params.data() + f_ * ck, ix(f_));
    RowMat cols(ix(ck), ix(out.length));
    for (size_t b = 0; b < batch; ++b) {
      im2col(in, out.length, x + b * in.size(), cols);
      MapMat yb(y + b * out.size(), ix(f_), ix(out.length));
      yb.noalias() = w * cols;
      yb.colwise() += bias;
    }
  }

  void backward(std::span<const double> params, Shape in, size_t batch, const double* x, const double*,
                const double* dy, double* dx, std::span<double> dparams,
                const std::vector<std::uint32_t>&) const override {
    const Shape out = output(in);
    const size_t ck = in.channels * k_;
    CMapMat w(params.data(), ix(f_), ix(ck));
    MapMat dw(dparams.data(), ix(f_), ix(ck));
    Eigen::Map<Eigen::VectorXd> db(dparams.data() + f_ * ck, ix(f_));
    RowMat cols(ix(ck), ix(out.length));
    RowMat dcols(ix(ck), ix(out.length));
    for (size_t b = 0; b < batch; ++b) {
      CMapMat dyb(dy + b * out.size(), ix(f_), ix(out.length));
      im2col(in, out.length, x + b * in.size(), cols);
      dw.noalias() += dyb * cols.transpose();
      db += dyb.rowwise().sum();
      if (dx) {
        dcols.noalias() = w.transpose() * dyb;
        double* dxb = dx + b * in.size();
        std::fill(dxb, dxb + in.size(), 0.0);
        for (size_t c = 0; c < in.channels; ++c)
          for (size_t k = 0; k < k_; ++k) {
            const double* src = dcols.data() + (c * k_ + k) * out.length;
            double* dst = dxb + c * in.length + k;
            for (size_t t = 0; t < out.length; ++t) dst[t] += src[t];
          }
      }
    }
  }

 private:
  void im2col(Shape in, size_t out_len, const double* x, RowMat& cols) const {
    for (size_t c = 0; c < in.channels; ++c)
      for (size_t k = 0; k < k_; ++k)
        std::copy_n(x + c * in.length + k, out_len, cols.data() + (c * k_ + k) * out_len);
  }

  size_t k_, f_;
};

class Relu final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Shape output(Shape in) const override { return in; }
  void forward(std::span<const double>, Shape in, size_t batch, const double* x, double* y,
               std::vector<std::uint32_t>&) const override {
    for (size_t i = 0, n = batch * in.size(); i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
  void backward(std::span<const double>, Shape in, size_t batch, const double* x, const double*, const double* dy,
                double* dx, std::span<double>, const std::vector<std::uint32_t>&) const override {
    if (!dx) return;
    for (size_t i = 0, n = batch * in.size(); i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  }
};

// Non-overlapping max pooling; trailing samples that do not fill a window are dropped.
class MaxPool final : public Layer {
 public:
  explicit MaxPool(size_t pool) : p_(pool) {}
  std::string name() const override { return "maxpool(" + std::to_string(p_) + ")"; }
  Shape output(Shape in) const override {
    if (in.length < p_) throw ShapeError(name() + " input shorter than the pool");
    return {in.channels, in.length / p_};
  }
  void forward(std::span<const double>, Shape in, size_t batch, const double* x, double* y,
               std::vector<std::uint32_t>& aux) const override {
    const Shape out = output(in);
    aux.resize(batch * out.size());
    for (size_t b = 0; b < batch; ++b)
      for (size_t c = 0; c < in.channels; ++c)
        for (size_t t = 0; t < out.length; ++t) {
          const double* seg = x + b * in.size() + c * in.length + t * p_;
          size_t best = 0;
          for (size_t i = 1; i < p_; ++i)
            if (seg[i] > seg[best]) best = i;
          const size_t o = b * out.size() + c * out.length + t;
          y[o] = seg[best];
          aux[o] = static_cast<std::uint32_t>(c * in.length + t * p_ + best);
        }
  }
  void backward(std::span<const double>, Shape in, size_t batch, const double*, const double*, const double* dy,
                double* dx, std::span<double>, const std::vector<std::uint32_t>& aux) const override {
    if (!dx) return;
    const Shape out = output(in);
    std::fill(dx, dx + batch * in.size(), 0.0);
    for (size_t b = 0; b < batch; ++b)
      for (size_t o = 0; o < out.size(); ++o) dx[b * in.size() + aux[b * out.size() + o]] += dy[b * out.size() + o];
  }

 private:
  size_t p_;
};

class GlobalAvgPool final : public Layer {
 public:
  std::string name() const override { return "global-avg-pool"; }
  Shape output(Shape in) const override { return {in.channels, 1}; }
  void forward(std::span<const double>, Shape in, size_t batch, const double* x, double* y,
               std::vector<std::uint32_t>&) const override {
    for (size_t b = 0; b < batch; ++b)
      for (size_t c = 0; c < in.channels; ++c) {
        const double* row = x + b * in.size() + c * in.length;
        double s = 0.0;
        for (size_t t = 0; t < in.length; ++t) s += row[t];
        y[b * in.channels + c] = s / static_cast<double>(in.length);
      }
  }
  void backward(std::span<const double>, Shape in, size_t batch, const double*, const double*, const double* dy,
                double* dx, std::span<double>, const std::vector<std::uint32_t>&) const override {
    if (!dx) return;
    const double inv = 1.0 / static_cast<double>(in.length);
    for (size_t b = 0; b < batch; ++b)
      for (size_t c = 0; c < in.channels; ++c) {
        const double g = dy[b * in.channels + c] * inv;
        std::fill_n(dx + b * in.size() + c * in.length, in.length, g);
      }
  }
};

// Fully connected on the flattened input. Params: W[out][in] then b[out].
class Dense final : public Layer {
 public:
  explicit Dense(size_t width) : o_(width) {}
  std::string name() const override { return "dense(" + std::to_string(o_) + ")"; }
  Shape output(Shape) const override { return {o_, 1}; }
  size_t param_count(Shape in) const override { return o_ * in.size() + o_; }
  void init(std::span<double> params, Shape in, std::mt19937_64& rng) const override {
    const size_t nw = o_ * in.size();
    uniform_fill(params.first(nw), std::sqrt(6.0 / static_cast<double>(in.size() + o_)), rng);
    std::fill(params.begin() + static_cast<long>(nw), params.end(), 0.0);
  }
  void forward(std::span<const double> params, Shape in, size_t batch, const double* x, double* y,
               std::vector<std::uint32_t>&) const override {
    const size_t d = in.size();
    CMapMat w(params.data(), ix(o_), ix(d));
    Eigen::Map<const Eigen::RowVectorXd> bias(params.data() + o_ * d, ix(o_));
    CMapMat xm(x, ix(batch), ix(d));
    MapMat ym(y, ix(batch), ix(o_));
    ym.noalias() = xm * w.transpose();
    ym.rowwise() += bias;
  }
  void backward(std::span<const double> params, Shape in, size_t batch, const double* x, const double*,
                const double* dy, double* dx, std::span<double> dparams,
                const std::vector<std::uint32_t>&) const override {
    const size_t d = in.size();
    CMapMat w(params.data(), ix(o_), ix(d));
    CMapMat xm(x, ix(batch), ix(d));
    CMapMat dym(dy, ix(batch), ix(o_));
    MapMat dw(dparams.data(), ix(o_), ix(d));
    Eigen::Map<Eigen::RowVectorXd> db(dparams.data() + o_ * d, ix(o_));
    dw.noalias() += dym.transpose() * xm;
    db += dym.colwise().sum();
    if (dx) {
      MapMat dxm(dx, ix(batch), ix(d));
      dxm.noalias() = dym * w;
    }
  }

 private:
  size_t o_;
};

}  // namespace

Network::Network(const ModelSpec& spec) : spec_(spec) {
  if (spec.in_channels == 0) throw ShapeError("model needs at least one input channel");
  if (spec.window == 0) throw ShapeError("model window must be positive");
  if (!(spec.input_scale > 0.0) || !std::isfinite(spec.input_scale)) throw Error("input_scale must be positive");
  switch (spec.arch) {
    case Arch::linear: break;
    case Arch::compact_cnn:
      layers_.push_back(std::make_unique<Conv1d>(32, 16));
      layers_.push_back(std::make_unique<Relu>());
      layers_.push_back(std::make_unique<MaxPool>(8));
      layers_.push_back(std::make_unique<Conv1d>(16, 16));
      layers_.push_back(std::make_unique<Relu>());
      layers_.push_back(std::make_unique<GlobalAvgPool>());
      break;
    case Arch::pyramidal_cnn:
      for (size_t filters : {8, 16, 32}) {
        layers_.push_back(std::make_unique<Conv1d>(16, filters));
        layers_.push_back(std::make_unique<Relu>());
        layers_.push_back(std::make_unique<MaxPool>(4));
      }
      break;
  }
  layers_.push_back(std::make_unique<Dense>(head_width(spec.task)));

  shapes_.push_back({spec.in_channels, spec.window});
  for (const auto& layer : layers_) {
    offsets_.push_back(total_params_);
    total_params_ += layer->param_count(shapes_.back());
    shapes_.push_back(layer->output(shapes_.back()));
  }
}

std::vector<double> Network::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<double> params(total_params_, 0.0);
  for (size_t i = 0; i < layers_.size(); ++i) {
    const size_t n = layers_[i]->param_count(shapes_[i]);
    layers_[i]->init(std::span<double>(params).subspan(offsets_[i], n), shapes_[i], rng);
  }
  return params;
}

std::string Network::describe() const {
  std::ostringstream out;
  out << "input " << shapes_[0].channels << "x" << shapes_[0].length << "\n";
  for (size_t i = 0; i < layers_.size(); ++i)
    out << layers_[i]->name() << " -> " << shapes_[i + 1].channels << "x" << shapes_[i + 1].length << " ("
        << layers_[i]->param_count(shapes_[i]) << " params)\n";
  return out.str();
}

const std::vector<double>& Network::forward(std::span<const double> params, const Tensor& batch,
                                            Workspace& ws) const {
  if (params.size() != total_params_)
    throw ShapeError("model expects " + std::to_string(total_params_) + " params, got " +
                     std::to_string(params.size()));
  if (batch.shape.size() != 3 || batch.shape[1] != spec_.in_channels || batch.shape[2] != spec_.window)
    throw ShapeError("batch must be B x " + std::to_string(spec_.in_channels) + " x " + std::to_string(spec_.window));
  if (batch.values.size() != batch.numel()) throw ShapeError("batch values do not match its shape");
  const size_t n = batch.shape[0];
  ws.batch = n;
  ws.acts.resize(layers_.size() + 1);
  ws.aux.resize(layers_.size());
  ws.acts[0].resize(batch.values.size());
  const double inv_scale = 1.0 / spec_.input_scale;
  for (size_t i = 0; i < batch.values.size(); ++i) ws.acts[0][i] = batch.values[i] * inv_scale;
  for (size_t i = 0; i < layers_.size(); ++i) {
    ws.acts[i + 1].resize(n * shapes_[i + 1].size());
    layers_[i]->forward(params.subspan(offsets_[i], layers_[i]->param_count(shapes_[i])), shapes_[i], n,
                        ws.acts[i].data(), ws.acts[i + 1].data(), ws.aux[i]);
  }
  for (double v : ws.acts.back())
    if (!std::isfinite(v)) throw NumericError("non-finite output of " + layers_.back()->name());
  return ws.acts.back();
}

void Network::backward(std::span<const double> params, Workspace& ws, const std::vector<double>& d_out,
                       std::span<double> dparams, std::vector<double>* d_input) const {
  const size_t n = ws.batch;
  if (d_out.size() != n * output_width()) throw ShapeError("output gradient has the wrong size");
  if (dparams.size() != total_params_) throw ShapeError("parameter gradient has the wrong size");
  std::vector<double> grad = d_out;
  std::vector<double> next;
  for (size_t li = layers_.size(); li-- > 0;) {
    const bool need_dx = li > 0 || d_input != nullptr;
    if (need_dx) next.assign(n * shapes_[li].size(), 0.0);
    const size_t np = layers_[li]->param_count(shapes_[li]);
    layers_[li]->backward(params.subspan(offsets_[li], np), shapes_[li], n, ws.acts[li].data(),
                          ws.acts[li + 1].data(), grad.data(), need_dx ? next.data() : nullptr,
                          dparams.subspan(offsets_[li], np), ws.aux[li]);
    if (need_dx) {
      for (double v : next)
        if (!std::isfinite(v)) throw NumericError("non-finite gradient in " + layers_[li]->name());
      grad.swap(next);
    }
  }
  if (d_input) {
    const double inv_scale = 1.0 / spec_.input_scale;
    for (double& v : grad) v *= inv_scale;
    *d_input = std::move(grad);
  }
}

}  // namespace eegcs::nn

namespace eegcs {

size_t param_count(const ModelSpec& spec) { return nn::Network(spec).param_count(); }

std::vector<double> init_params(const ModelSpec& spec, std::uint64_t seed) { return nn::Network(spec).init(seed); }

std::string describe(const ModelSpec& spec) { return nn::Network(spec).describe(); }

Tensor forward(const TrainedModel& model, const Tensor& batch) {
  const nn::Network net(model.spec);
  nn::Workspace ws;
  const auto& raw = net.forward(model.params, batch, ws);
  Tensor pred({ws.batch, head_width(model.spec.task)});
  nn::apply_link(model.spec.task, raw, ws.batch, pred.values);
  return pred;
}

Gradients backward(const TrainedModel& model, const Tensor& batch, const Tensor& targets, bool input_grad) {
  const nn::Network net(model.spec);
  if (targets.shape.size() != 2 || targets.shape[0] != batch.shape.at(0) ||
      targets.shape[1] != head_width(model.spec.task))
    throw ShapeError("targets must be B x " + std::to_string(head_width(model.spec.task)));
  nn::Workspace ws;
  const auto& raw = net.forward(model.params, batch, ws);
  std::vector<double> d_raw;
  Gradients g;
  g.loss = nn::loss_from_raw(model.spec.task, raw, targets, &d_raw);
  if (!std::isfinite(g.loss)) throw NumericError("non-finite loss");
  g.params.assign(net.param_count(), 0.0);
  std::vector<double> d_input;
  net.backward(model.params, ws, d_raw, g.params, input_grad ? &d_input : nullptr);
  if (input_grad) {
    g.input.shape = batch.shape;
    g.input.values = std::move(d_input);
  }
  return g;
}

}  // namespace eegcs
