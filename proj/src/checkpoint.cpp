#include "mrta/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mrta {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'T', 'A', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename U>
void put(std::string& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.append(reinterpret_cast<const char*>(buf), sizeof(U));
}

void put_f64(std::string& out, double d) { put(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}

  template <typename U>
  U get() {
    if (pos_ + sizeof(U) > s_.size()) throw CheckpointError("checkpoint: truncated file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

void write_net(std::string& out, const PolicyNet& net) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.role()));
  const auto& shapes = PolicyNet::shapes();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shapes.size()));
  for (const auto& s : shapes) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.in));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.out));
  }
  put<std::uint64_t>(out, net.params().size());
  for (double p : net.params()) put_f64(out, p);
}

PolicyNet read_net(Reader& in, Role expected) {
  const auto role = in.get<std::uint32_t>();
  if (role != static_cast<std::uint32_t>(expected)) throw CheckpointError("checkpoint: unexpected network role");
  const auto& shapes = PolicyNet::shapes();
  const auto layers = in.get<std::uint32_t>();
  if (layers != shapes.size()) {
    std::ostringstream msg;
    msg << "checkpoint: shape mismatch, " << layers << " layers stored, " << shapes.size() << " expected";
    throw CheckpointError(msg.str());
  }
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto fan_in = static_cast<int>(in.get<std::uint32_t>());
    const auto fan_out = static_cast<int>(in.get<std::uint32_t>());
    if (fan_in != shapes[k].in || fan_out != shapes[k].out) {
      std::ostringstream msg;
      msg << "checkpoint: shape mismatch in layer " << k << ": stored " << fan_in << "->" << fan_out
          << ", expected " << shapes[k].in << "->" << shapes[k].out;
      throw CheckpointError(msg.str());
    }
  }
  const auto count = in.get<std::uint64_t>();
  if (count != PolicyNet::parameter_count()) throw CheckpointError("checkpoint: parameter count mismatch");
  PolicyNet net(expected);
  for (double& p : net.params()) p = in.get_f64();
  return net;
}

}  // namespace

std::string serialize_checkpoint(const PolicyNet& planner, const PolicyNet& executor) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, 2);
  write_net(out, planner);
  write_net(out, executor);
  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  std::string body = bytes.substr(sizeof(kMagic));
  Reader in(body);
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  if (in.get<std::uint32_t>() != 2) throw CheckpointError("checkpoint: expected two networks");
  Checkpoint ck;
  ck.planner = read_net(in, Role::kPlanner);
  ck.executor = read_net(in, Role::kExecutor);
  const std::size_t hashed = sizeof(kMagic) + in.pos();
  const auto stored = in.get<std::uint64_t>();
  if (stored != fnv1a(bytes.data(), hashed)) throw CheckpointError("checkpoint: checksum mismatch (corrupt file)");
  if (sizeof(kMagic) + in.pos() != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const PolicyNet& planner, const PolicyNet& executor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
  const std::string bytes = serialize_checkpoint(planner, executor);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace mrta
