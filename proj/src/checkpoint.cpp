#include "cgrl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "cgrl/errors.hpp"

namespace cgrl {

namespace {

constexpr char kMagic[8] = {'C', 'G', 'R', 'L', 'P', 'O', 'L', '\0'};

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw CheckpointError("checkpoint truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void check_field(const char* name, double file, double runtime) {
  if (file != runtime) {
    std::ostringstream msg;
    msg << "checkpoint shape mismatch: " << name << " is " << file << " in the file but " << runtime
        << " at runtime";
    throw CheckpointError(msg.str());
  }
}

}  // namespace

void save_params(std::ostream& out, const PolicyParams& params) {
  const PolicyConfig& c = params.config();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put(kCheckpointVersion);
  for (int v : {c.d_h, c.layers, c.heads, c.ff, c.features}) w.put(static_cast<std::int32_t>(v));
  w.put(c.clip);
  w.put(static_cast<std::uint32_t>(params.tensors().size()));
  for (const auto& t : params.tensors()) {
    w.put(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.put(static_cast<std::int32_t>(t.value.rows()));
    w.put(static_cast<std::int32_t>(t.value.cols()));
    w.bytes(t.value.data(), static_cast<std::size_t>(t.value.size()) * sizeof(double));
  }
  w.put(crc(w.buffer().data(), w.buffer().size()));
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw CheckpointError("checkpoint write failed");
}

void save_params(const std::string& path, const PolicyParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  save_params(out, params);
}

PolicyParams load_params(std::istream& in, const std::optional<PolicyConfig>& expected) {
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 2 * sizeof(std::uint32_t) || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("not a policy checkpoint");
  const std::size_t body = buf.size() - sizeof(std::uint32_t);
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + body, sizeof stored);
  if (stored != crc(buf.data(), body)) throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated)");

  Reader r(buf);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  PolicyConfig c;
  c.d_h = r.get<std::int32_t>();
  c.layers = r.get<std::int32_t>();
  c.heads = r.get<std::int32_t>();
  c.ff = r.get<std::int32_t>();
  c.features = r.get<std::int32_t>();
  c.clip = r.get<double>();
  if (expected) {
    check_field("d_h", c.d_h, expected->d_h);
    check_field("layers", c.layers, expected->layers);
    check_field("heads", c.heads, expected->heads);
    check_field("ff", c.ff, expected->ff);
    check_field("features", c.features, expected->features);
    check_field("clip", c.clip, expected->clip);
  }
  PolicyParams params;
  try {
    params = PolicyParams(c);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint header invalid: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  if (count != params.tensors().size())
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                          std::to_string(params.tensors().size()));
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = r.get<std::uint32_t>();
    if (len > r.remaining()) throw CheckpointError("checkpoint truncated");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    ad::Parameter* t = nullptr;
    try {
      t = &params.at(name);
    } catch (const std::out_of_range&) {
      throw CheckpointError("checkpoint has unknown tensor " + name);
    }
    const auto rows = r.get<std::int32_t>();
    const auto cols = r.get<std::int32_t>();
    if (rows != t->value.rows() || cols != t->value.cols())
      throw CheckpointError("checkpoint shape mismatch for " + name + ": " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " vs " + std::to_string(t->value.rows()) + "x" +
                            std::to_string(t->value.cols()));
    r.bytes(t->value.data(), static_cast<std::size_t>(t->value.size()) * sizeof(double));
  }
  if (r.remaining() != sizeof(std::uint32_t)) throw CheckpointError("checkpoint has trailing bytes");
  if (!params.all_finite()) throw CheckpointError("checkpoint holds non-finite values");
  return params;
}

PolicyParams load_params(const std::string& path, const std::optional<PolicyConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return load_params(in, expected);
}

}  // namespace cgrl
