#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "afresnet/model.hpp"

namespace afresnet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'S', 'B', '1'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void tensor(std::string_view name, const Tensor& t, StorageType storage) {
    str(name);
    u8(static_cast<std::uint8_t>(storage));
    u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) u32(static_cast<std::uint32_t>(d));
    if (storage == StorageType::kFloat32) {
      for (double v : t.values()) {
        const float f = static_cast<float>(v);
        raw(&f, sizeof f);
      }
    } else {
      raw(t.data(), t.size() * sizeof(double));
    }
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void raw(void* p, std::size_t n) {
    if (n > data_.size() - pos_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > data_.size() - pos_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

struct StoredTensor {
  std::string name;
  Tensor value;
};

StoredTensor read_tensor(Reader& r) {
  StoredTensor st;
  st.name = r.str();
  const std::uint8_t tag = r.u8();
  if (tag > 1) throw CheckpointError("tensor '" + st.name + "' has unknown dtype tag " + std::to_string(tag));
  const std::uint8_t rank = r.u8();
  if (rank > 3) throw CheckpointError("tensor '" + st.name + "' has rank " + std::to_string(rank));
  Shape dims(rank);
  std::size_t count = 1;
  for (auto& d : dims) {
    d = r.u32();
    count *= d;
  }
  std::vector<double> values(count);
  if (tag == static_cast<std::uint8_t>(StorageType::kFloat32)) {
    for (double& v : values) {
      float f;
      r.raw(&f, sizeof f);
      v = f;
    }
  } else {
    r.raw(values.data(), count * sizeof(double));
  }
  st.value = Tensor(std::move(dims), std::move(values));
  return st;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path, StorageType storage) {
  const auto stats = net.running_stats();
  const auto& stat_names = net.stats_names();
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(net.config_id());
  w.u32(static_cast<std::uint32_t>(net.parameters().size() + 2 * stats.size() + 1));
  for (const Parameter& p : net.parameters()) w.tensor(p.name, p.value, storage);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    w.tensor(stat_names[i] + ".running_mean", stats[i].mean, storage);
    w.tensor(stat_names[i] + ".running_var", stats[i].var, storage);
  }
  const auto& bn = net.batchnorm_options();
  w.tensor(kBatchNormMetaName, Tensor({2}, std::vector<double>{bn.eps, bn.momentum}), StorageType::kFloat64);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("'" + path.string() + "' is not an RSB1 checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const std::string config = r.str();

  Network net;
  try {
    net = build_from_text(config, 0);
  } catch (const std::exception& e) {
    throw CheckpointError("checkpoint config '" + config + "' is invalid: " + e.what());
  }

  std::map<std::string, Tensor*, std::less<>> slots;
  for (Parameter& p : net.parameters()) slots[p.name] = &p.value;
  auto stats = net.running_stats();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    slots[net.stats_names()[i] + ".running_mean"] = &stats[i].mean;
    slots[net.stats_names()[i] + ".running_var"] = &stats[i].var;
  }

  const std::uint32_t count = r.u32();
  std::size_t filled = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredTensor st = read_tensor(r);
    if (st.name == kBatchNormMetaName) {
      if (st.value.size() != 2) throw CheckpointError("malformed batchnorm metadata");
      net.set_batchnorm_options(ops::BatchNormOptions{st.value[0], st.value[1]});
      continue;
    }
    auto it = slots.find(st.name);
    if (it == slots.end()) throw CheckpointError("unknown tensor '" + st.name + "' for config '" + config + "'");
    if (it->second == nullptr) throw CheckpointError("duplicate tensor '" + st.name + "'");
    if (!it->second->same_shape(st.value))
      throw CheckpointError("tensor '" + st.name + "' has shape " + to_string(st.value.dims()) + ", expected " +
                            to_string(it->second->dims()));
    *it->second = std::move(st.value);
    it->second = nullptr;
    ++filled;
  }
  if (filled != slots.size())
    throw CheckpointError("checkpoint is missing " + std::to_string(slots.size() - filled) + " tensors");
  if (!r.done()) throw CheckpointError("trailing bytes after last tensor");
  net.zero_grad();
  return net;
}

}  // namespace afresnet
