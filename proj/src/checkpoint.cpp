// SPDX-License-Identifier: Apache-2.0

#include "srl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "srl/errors.hpp"

namespace srl {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
  std::string& buffer() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  void bytes(void* p, std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated");
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64s(std::size_t n) {
    if (n > (end_ - pos_) / sizeof(double)) throw CheckpointError("checkpoint truncated");
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const SrlModel& model, const TrainConfig& train,
                           const OptimizerState& optimizer, std::uint64_t epoch) {
  Checkpoint c;
  c.model = model.config();
  c.train = train;
  c.params = model.params().all();
  c.optimizer = optimizer;
  c.epoch = epoch;
  c.seed = train.optim.seed;
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(Checkpoint::kVersion);
  w.pod<std::uint64_t>(ckpt.model.hash());
  w.pod<std::uint64_t>(ckpt.train.hash());
  w.str(ckpt.model.to_json());
  w.str(ckpt.train.to_json());
  w.pod<std::uint64_t>(ckpt.epoch);
  w.pod<std::uint64_t>(ckpt.seed);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    if (p.values.size() != shape_size(p.shape)) {
      throw CheckpointError("parameter " + p.name + " does not match its shape");
    }
    w.str(p.name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.shape.size()));
    for (auto dim : p.shape) w.pod<std::uint64_t>(dim);
    w.f64s(p.values);
  }
  const auto& opt = ckpt.optimizer;
  const bool adam = opt.kind == OptimizerKind::Adam;
  w.pod<std::uint8_t>(adam ? 1 : 0);
  w.pod<std::uint64_t>(opt.step);
  auto write_moments = [&](const GradientSet& m, const char* what) {
    if (m.size() != ckpt.params.size()) {
      throw CheckpointError(std::string("optimizer ") + what + " does not cover the parameters");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i].size() != ckpt.params[i].values.size()) {
        throw CheckpointError(std::string("optimizer ") + what + " mismatch for " +
                              ckpt.params[i].name);
      }
      w.f64s(m[i]);
    }
  };
  write_moments(opt.first, "state");
  if (adam) write_moments(opt.second, "second moment");
  w.pod<std::uint64_t>(fnv1a(w.buffer()));
  return std::move(w.buffer());
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  constexpr std::size_t kTrailer = sizeof(std::uint64_t);
  if (bytes.size() < sizeof(kMagic) + kTrailer) throw CheckpointError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::size_t body = bytes.size() - kTrailer;
  std::uint64_t stored_sum = 0;
  std::memcpy(&stored_sum, bytes.data() + body, kTrailer);
  if (fnv1a(bytes.substr(0, body)) != stored_sum) throw CheckpointError("checkpoint checksum mismatch");

  Reader r(bytes, body);
  char magic[sizeof(kMagic)];
  r.bytes(magic, sizeof(magic));
  const auto version = r.pod<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto model_hash = r.pod<std::uint64_t>();
  const auto train_hash = r.pod<std::uint64_t>();

  Checkpoint c;
  try {
    c.model = ModelConfig::from_json(r.str());
    c.train = TrainConfig::from_json(r.str());
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  if (c.model.hash() != model_hash) throw CheckpointError("model config hash mismatch");
  if (c.train.hash() != train_hash) throw CheckpointError("train config hash mismatch");
  c.epoch = r.pod<std::uint64_t>();
  c.seed = r.pod<std::uint64_t>();

  const auto count = r.pod<std::uint32_t>();
  const SrlModel reference(c.model);
  const auto& expected = reference.params();
  if (count != expected.size()) throw CheckpointError("parameter count does not match the model config");
  c.params.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Parameter& p = c.params[i];
    p.name = r.str();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 4) throw CheckpointError("parameter " + p.name + " has implausible rank");
    for (std::uint32_t k = 0; k < rank; ++k) p.shape.push_back(r.pod<std::uint64_t>());
    if (p.name != expected[i].name || p.shape != expected[i].shape) {
      throw CheckpointError("parameter " + p.name + " does not match the model layout");
    }
    p.values = r.f64s(shape_size(p.shape));
  }

  const auto kind = r.pod<std::uint8_t>();
  if (kind > 1) throw CheckpointError("unknown optimizer kind in checkpoint");
  c.optimizer.kind = kind == 1 ? OptimizerKind::Adam : OptimizerKind::Sgd;
  c.optimizer.step = r.pod<std::uint64_t>();
  auto read_moments = [&](GradientSet& m) {
    m.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) m[i] = r.f64s(c.params[i].values.size());
  };
  read_moments(c.optimizer.first);
  if (kind == 1) read_moments(c.optimizer.second);
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

void restore_parameters(const Checkpoint& ckpt, SrlModel& model) {
  auto& params = model.params();
  if (ckpt.params.size() != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                          " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = ckpt.params[i];
    if (src.name != params[i].name || src.shape != params[i].shape ||
        src.values.size() != params[i].values.size()) {
      throw CheckpointError("checkpoint parameter " + src.name + " does not match the model");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].values = ckpt.params[i].values;
}

SrlModel model_from_checkpoint(const Checkpoint& ckpt) {
  SrlModel model(ckpt.model);
  restore_parameters(ckpt, model);
  return model;
}

}  // namespace srl
