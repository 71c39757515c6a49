#include "saunet/io/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>

#include "saunet/error.hpp"

namespace saunet::io {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;

class Writer {
 public:
  template <typename V>
  void put(V value) {
    static_assert(std::is_trivially_copyable_v<V>);
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(V));
  }

  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  template <typename T>
  void record(const std::string& name, const Shape* shape, std::span<const T> data) {
    if (name.size() > 0xFFFF) throw DataError("tensor name too long: " + name);
    put(static_cast<std::uint16_t>(name.size()));
    raw(name.data(), name.size());
    put(std::is_same_v<T, float> ? kDtypeF32 : kDtypeF64);
    if (shape) {
      put(static_cast<std::uint8_t>(shape->rank()));
      for (std::size_t d : shape->dims()) put(static_cast<std::uint64_t>(d));
    } else {
      put(std::uint8_t{1});
      put(static_cast<std::uint64_t>(data.size()));
    }
    raw(data.data(), data.size_bytes());
  }

  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::size_t end, std::string origin)
      : bytes_(bytes), end_(end), origin_(std::move(origin)) {}

  template <typename V>
  V get() {
    V value;
    std::memcpy(&value, take(sizeof(V)), sizeof(V));
    return value;
  }

  const char* take(std::size_t n) {
    if (n > end_ - pos_) throw DataError(origin_ + ": truncated checkpoint");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  struct Record {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> values;
  };

  Record record() {
    Record r;
    const auto len = get<std::uint16_t>();
    r.name.assign(take(len), len);
    const auto dtype = get<std::uint8_t>();
    if (dtype != kDtypeF32 && dtype != kDtypeF64) {
      throw DataError(origin_ + ": unknown dtype tag " + std::to_string(dtype) + " for '" + r.name + "'");
    }
    const auto rank = get<std::uint8_t>();
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const auto d = get<std::uint64_t>();
      if (d == 0 || d > end_) throw DataError(origin_ + ": invalid dimension in '" + r.name + "'");
      r.dims.push_back(static_cast<std::size_t>(d));
      count *= static_cast<std::size_t>(d);
      if (count > end_) throw DataError(origin_ + ": truncated checkpoint");
    }
    const std::size_t width = dtype == kDtypeF32 ? sizeof(float) : sizeof(double);
    const char* p = take(count * width);
    r.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (dtype == kDtypeF32) {
        float f;
        std::memcpy(&f, p + i * width, width);
        r.values[i] = f;
      } else {
        std::memcpy(&r.values[i], p + i * width, width);
      }
    }
    return r;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string origin_;
};

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t checksum(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_spec(Writer& w, const model::ArchitectureSpec& s) {
  w.put(static_cast<std::uint8_t>(s.variant));
  for (int v : {s.base_channels, s.depth, s.in_channels, s.out_channels, s.upconv_kernel, s.dropblock.block_size}) {
    w.put(static_cast<std::int32_t>(v));
  }
  w.put(s.dropblock.drop_rate);
}

model::ArchitectureSpec read_spec(Reader& r) {
  model::ArchitectureSpec s;
  s.variant = static_cast<model::Variant>(r.get<std::uint8_t>());
  s.base_channels = r.get<std::int32_t>();
  s.depth = r.get<std::int32_t>();
  s.in_channels = r.get<std::int32_t>();
  s.out_channels = r.get<std::int32_t>();
  s.upconv_kernel = r.get<std::int32_t>();
  s.dropblock.block_size = r.get<std::int32_t>();
  s.dropblock.drop_rate = r.get<double>();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint holds an invalid architecture spec: ") + e.what());
  }
  return s;
}

struct Parsed {
  model::ArchitectureSpec spec;
  std::vector<Reader::Record> params;
  std::optional<OptimizerSnapshot> optimizer;
  std::vector<std::string> moment_names;
};

Parsed parse(const std::filesystem::path& path, bool header_only) {
  const std::vector<char> bytes = read_file(path);
  const std::string origin = path.string();
  if (bytes.size() < sizeof(kCheckpointMagic) + 8) throw DataError(origin + ": truncated checkpoint");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw DataError(origin + ": not a checkpoint (bad magic)");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  Reader r(bytes, body, origin);
  r.take(sizeof(kCheckpointMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError(origin + ": checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  Parsed out;
  out.spec = read_spec(r);
  if (header_only) return out;

  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) out.params.push_back(r.record());
  if (r.get<std::uint8_t>() != 0) {
    OptimizerSnapshot snap;
    snap.config.lr = r.get<double>();
    snap.config.beta1 = r.get<double>();
    snap.config.beta2 = r.get<double>();
    snap.config.eps = r.get<double>();
    snap.step = r.get<std::uint64_t>();
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      Reader::Record rec = r.record();
      const bool first = rec.name.ends_with(".m");
      if (!first && !rec.name.ends_with(".v")) throw DataError(origin + ": bad optimizer record '" + rec.name + "'");
      const std::string base = rec.name.substr(0, rec.name.size() - 2);
      if (first) {
        out.moment_names.push_back(base);
        snap.m.push_back(std::move(rec.values));
      } else {
        if (out.moment_names.empty() || out.moment_names.back() != base) {
          throw DataError(origin + ": optimizer record '" + rec.name + "' out of order");
        }
        snap.v.push_back(std::move(rec.values));
      }
    }
    if (snap.m.size() != snap.v.size()) throw DataError(origin + ": unpaired optimizer moments");
    out.optimizer = std::move(snap);
  }
  if (r.position() != body) throw DataError(origin + ": trailing bytes before checksum");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != checksum(bytes.data(), body)) throw DataError(origin + ": checksum mismatch");
  return out;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Network<T>& net, const optim::Adam<T>* optimizer) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  write_spec(w, net.spec());
  const auto params = net.parameters();
  w.put(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) w.record<T>(p.name, &p.tensor.shape(), p.tensor.data());
  if (optimizer) {
    std::vector<std::string> names;
    for (const auto& p : params) {
      if (p.trainable) names.push_back(p.name);
    }
    if (names.size() != optimizer->size()) {
      throw ConfigError("optimizer does not cover the network's trainable parameters");
    }
    w.put(std::uint8_t{1});
    const auto& cfg = optimizer->config();
    for (double v : {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps}) w.put(v);
    w.put(static_cast<std::uint64_t>(optimizer->step_count()));
    w.put(static_cast<std::uint32_t>(2 * names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
      w.record<T>(names[i] + ".m", nullptr, optimizer->first_moments()[i]);
      w.record<T>(names[i] + ".v", nullptr, optimizer->second_moments()[i]);
    }
  } else {
    w.put(std::uint8_t{0});
  }
  w.put(checksum(w.bytes().data(), w.bytes().size()));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

model::ArchitectureSpec read_checkpoint_spec(const std::filesystem::path& path) { return parse(path, true).spec; }

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path, const model::ArchitectureSpec* expected) {
  Parsed parsed = parse(path, false);
  if (expected && !(*expected == parsed.spec)) {
    throw ConfigError(path.string() + ": checkpoint holds variant " +
                      std::string(model::variant_name(parsed.spec.variant)) +
                      " with base " + std::to_string(parsed.spec.base_channels) +
                      ", which does not match the requested " + std::string(model::variant_name(expected->variant)) +
                      " with base " + std::to_string(expected->base_channels));
  }
  auto net = model::Network<T>::build(parsed.spec, 0);
  auto params = net.parameters();
  if (params.size() != parsed.params.size()) {
    throw DataError(path.string() + ": expected " + std::to_string(params.size()) + " tensors, found " +
                    std::to_string(parsed.params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& rec = parsed.params[i];
    auto& p = params[i];
    if (rec.name != p.name || Shape(rec.dims) != p.tensor.shape()) {
      throw DataError(path.string() + ": tensor '" + rec.name + "' does not match '" + p.name + "' " +
                      p.tensor.shape().to_string());
    }
    auto dst = p.tensor.mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(rec.values[k]);
  }
  if (parsed.optimizer) {
    std::size_t j = 0;
    for (const auto& p : params) {
      if (!p.trainable) continue;
      if (j >= parsed.moment_names.size() || parsed.moment_names[j] != p.name ||
          parsed.optimizer->m[j].size() != p.tensor.numel() || parsed.optimizer->v[j].size() != p.tensor.numel()) {
        throw DataError(path.string() + ": optimizer state does not match parameter '" + p.name + "'");
      }
      ++j;
    }
    if (j != parsed.moment_names.size()) throw DataError(path.string() + ": extra optimizer state");
  }
  return LoadedCheckpoint<T>{std::move(net), std::move(parsed.optimizer)};
}

template <typename T>
void restore_optimizer(const OptimizerSnapshot& snapshot, optim::Adam<T>& optimizer) {
  auto convert = [](const std::vector<std::vector<double>>& src) {
    std::vector<std::vector<T>> out;
    for (const auto& buf : src) out.emplace_back(buf.begin(), buf.end());
    return out;
  };
  optimizer.load_state(snapshot.config, snapshot.step, convert(snapshot.m), convert(snapshot.v));
}

template void save_checkpoint(const std::filesystem::path&, const model::Network<float>&, const optim::Adam<float>*);
template void save_checkpoint(const std::filesystem::path&, const model::Network<double>&, const optim::Adam<double>*);
template LoadedCheckpoint<float> load_checkpoint(const std::filesystem::path&, const model::ArchitectureSpec*);
template LoadedCheckpoint<double> load_checkpoint(const std::filesystem::path&, const model::ArchitectureSpec*);
template void restore_optimizer(const OptimizerSnapshot&, optim::Adam<float>&);
template void restore_optimizer(const OptimizerSnapshot&, optim::Adam<double>&);

}  // namespace saunet::io
