#include "eegcs/binary_io.hpp"
#include "eegcs/error.hpp"
#include "eegcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace eegcs {

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'M'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

// Layout (little-endian): "EEGM", u16 version, u16 arch, u16 task, u16 reserved,
// u32 in_channels, u32 window, f64 input_scale, u64 seed, u32 n + u32 channel rows,
// u32 n + (f64 train, f64 val) per epoch, u64 n + f64 params.
void save_checkpoint(const TrainedModel& model, std::ostream& out) {
  if (model.params.size() != param_count(model.spec))
    throw ShapeError("model holds " + std::to_string(model.params.size()) + " params, its spec needs " +
                     std::to_string(param_count(model.spec)));
  detail::LeWriter w(out);
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.spec.arch));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.spec.task));
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.spec.in_channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.spec.window));
  w.put_f64(model.spec.input_scale);
  w.put<std::uint64_t>(model.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.channels.size()));
  for (size_t c : model.channels) w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.train_log.size()));
  for (const EpochLog& e : model.train_log) {
    w.put_f64(e.train_loss);
    w.put_f64(e.val_loss);
  }
  w.put<std::uint64_t>(model.params.size());
  for (double p : model.params) w.put_f64(p);
  if (!out) throw Error("failed writing checkpoint");
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

TrainedModel load_checkpoint(std::istream& in) {
  detail::LeReader r(in);
  char magic[4];
  r.read_exact(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad magic: not an EEGM checkpoint");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion)
    throw FormatError("checkpoint version mismatch: file has " + std::to_string(version) + ", expected " +
                      std::to_string(kVersion));
  TrainedModel model;
  const auto arch = r.get<std::uint16_t>("arch");
  const auto task = r.get<std::uint16_t>("task");
  if (arch > static_cast<std::uint16_t>(Arch::pyramidal_cnn)) throw FormatError("unknown arch code " + std::to_string(arch));
  if (task > static_cast<std::uint16_t>(Task::position)) throw FormatError("unknown task code " + std::to_string(task));
  model.spec.arch = static_cast<Arch>(arch);
  model.spec.task = static_cast<Task>(task);
  r.get<std::uint16_t>("reserved");
  model.spec.in_channels = r.get<std::uint32_t>("in_channels");
  model.spec.window = r.get<std::uint32_t>("window");
  model.spec.input_scale = r.get_f64("input_scale");
  model.seed = r.get<std::uint64_t>("seed");
  const auto n_rows = r.get<std::uint32_t>("channel count");
  if (n_rows != 0 && n_rows != model.spec.in_channels)
    throw FormatError("checkpoint lists " + std::to_string(n_rows) + " channel rows for a " +
                      std::to_string(model.spec.in_channels) + "-channel model");
  for (std::uint32_t i = 0; i < n_rows; ++i) model.channels.push_back(r.get<std::uint32_t>("channel row"));
  const auto n_epochs = r.get<std::uint32_t>("epoch count");
  for (std::uint32_t i = 0; i < n_epochs; ++i) {
    EpochLog e;
    e.train_loss = r.get_f64("train loss");
    e.val_loss = r.get_f64("val loss");
    model.train_log.push_back(e);
  }
  const auto n_params = r.get<std::uint64_t>("param count");
  const size_t expected = param_count(model.spec);
  if (n_params != expected)
    throw FormatError("checkpoint has " + std::to_string(n_params) + " params, spec needs " + std::to_string(expected));
  model.params.resize(expected);
  for (double& p : model.params) {
    p = r.get_f64("params");
    if (!std::isfinite(p)) throw FormatError("non-finite parameter in checkpoint");
  }
  return model;
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace eegcs
