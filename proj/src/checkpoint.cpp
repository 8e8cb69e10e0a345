#include "stressnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stressnet/errors.hpp"

namespace stressnet {

static_assert(sizeof(double) == 8);

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}

  void need(std::size_t n) {
    if (bytes.size() - pos < n) throw CheckpointError("corrupt checkpoint: truncated");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t max_len = 4096) {
    const std::uint32_t n = u32();
    if (n > max_len) throw CheckpointError("corrupt checkpoint: implausible string length");
    need(n);
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }

  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

}  // namespace

bool CheckpointData::has(const std::string& key) const {
  for (const auto& e : config)
    if (e.key == key) return true;
  return false;
}

std::int64_t CheckpointData::get_int(const std::string& key) const {
  for (const auto& e : config)
    if (e.key == key) {
      if (const auto* v = std::get_if<std::int64_t>(&e.value)) return *v;
      throw CheckpointError("config entry '" + key + "' is not an integer");
    }
  throw CheckpointError("checkpoint lacks config entry '" + key + "'");
}

double CheckpointData::get_double(const std::string& key) const {
  for (const auto& e : config)
    if (e.key == key) {
      if (const auto* v = std::get_if<double>(&e.value)) return *v;
      throw CheckpointError("config entry '" + key + "' is not a float");
    }
  throw CheckpointError("checkpoint lacks config entry '" + key + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const std::string& magic, const std::vector<ConfigEntry>& config,
                                            const ParamStore& params) {
  if (magic.size() != 8) throw CheckpointError("checkpoint magic must be 8 bytes");
  Writer w;
  w.out.insert(w.out.end(), magic.begin(), magic.end());
  w.u32(static_cast<std::uint32_t>(config.size()));
  for (const auto& e : config) {
    w.str(e.key);
    if (const auto* i = std::get_if<std::int64_t>(&e.value)) {
      w.u8(0);
      w.u64(static_cast<std::uint64_t>(*i));
    } else {
      w.u8(1);
      w.f64(std::get<double>(e.value));
    }
  }
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rank()));
    for (auto e : p->value.shape()) w.u64(e);
    for (double v : p->value.data()) w.f64(v);
  }
  return std::move(w.out);
}

CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(8);
  CheckpointData d;
  d.magic.assign(bytes.begin(), bytes.begin() + 8);
  r.pos = 8;
  if (d.magic.rfind("SNCKPT", 0) != 0) throw CheckpointError("corrupt checkpoint: bad magic");

  const std::uint32_t n_config = r.u32();
  for (std::uint32_t i = 0; i < n_config; ++i) {
    ConfigEntry e;
    e.key = r.str();
    const std::uint8_t type = r.u8();
    if (type == 0)
      e.value = static_cast<std::int64_t>(r.u64());
    else if (type == 1)
      e.value = r.f64();
    else
      throw CheckpointError("corrupt checkpoint: unknown config type");
    d.config.push_back(std::move(e));
  }

  const std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    NamedTensor p;
    p.name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw CheckpointError("corrupt checkpoint: bad rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& e : shape) {
      e = r.u64();
      if (e == 0 || e > (std::size_t{1} << 32)) throw CheckpointError("corrupt checkpoint: bad extent");
      count *= e;
    }
    r.need(count * 8);
    std::vector<double> values(count);
    for (auto& v : values) v = r.f64();
    p.value = Tensor(std::move(shape), std::move(values));
    d.params.push_back(std::move(p));
  }
  if (r.pos != bytes.size()) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return d;
}

void write_checkpoint(const std::filesystem::path& path, const std::string& magic,
                      const std::vector<ConfigEntry>& config, const ParamStore& params) {
  const auto bytes = encode_checkpoint(magic, config, params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void assign_params(const CheckpointData& data, ParamStore& params) {
  if (data.params.size() != params.size())
    throw ShapeError("checkpoint holds " + std::to_string(data.params.size()) + " parameters, model expects " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& stored = data.params[i];
    Param& p = params[i];
    if (stored.name != p.name) throw ShapeError("checkpoint parameter '" + stored.name + "' != '" + p.name + "'");
    if (stored.value.shape() != p.value.shape())
      throw ShapeError("checkpoint parameter '" + p.name + "' has shape " + shape_string(stored.value.shape()) +
                       ", model expects " + shape_string(p.value.shape()));
    p.value = stored.value;
    p.grad = Tensor(p.value.shape());
  }
}

}  // namespace stressnet
