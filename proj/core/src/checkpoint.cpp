#include "stablesqf/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stablesqf::io {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'S', 'Q', 'F', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 8);
  }
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 4);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char b[8];
    take(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    take(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> vec(std::uint64_t limit) {
    const std::uint64_t n = u64();
    if (n > limit) throw CheckpointError("checkpoint vector length " + std::to_string(n) + " is implausible");
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

 private:
  void take(unsigned char* b, std::streamsize n) {
    in_.read(reinterpret_cast<char*>(b), n);
    if (in_.gcount() != n) throw CheckpointError("checkpoint file is truncated");
  }
  std::istream& in_;
};

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

LossDigest digest_trace(std::span<const LossRecord> trace) {
  LossDigest d;
  d.iterations = trace.size();
  d.hash = 0xcbf29ce484222325ULL;
  for (const auto& r : trace) {
    d.hash = fnv1a(d.hash, r.iteration);
    d.hash = fnv1a(d.hash, std::bit_cast<std::uint64_t>(r.quality));
    d.hash = fnv1a(d.hash, std::bit_cast<std::uint64_t>(r.instability));
    d.hash = fnv1a(d.hash, std::bit_cast<std::uint64_t>(r.total));
  }
  if (!trace.empty()) {
    d.final_quality = trace.back().quality;
    d.final_instability = trace.back().instability;
    d.final_total = trace.back().total;
  }
  return d;
}

SQFModel Checkpoint::model() const { return SQFModel(config.model, ema); }

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (ckpt.stats.size() != ckpt.series_ids.size()) {
    throw CheckpointError("checkpoint needs one standardization per series");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u64(ckpt.seed);
  w.vec(ckpt.params);
  w.vec(ckpt.ema);
  w.u64(ckpt.stats.size());
  for (const auto& s : ckpt.stats) {
    w.f64(s.mean);
    w.f64(s.std);
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());

  json side;
  side["format"] = "stablesqf-checkpoint";
  side["version"] = kCheckpointVersion;
  side["config"] = json::parse(to_json(ckpt.config));
  side["series_ids"] = ckpt.series_ids;
  side["seed"] = ckpt.seed;
  side["loss_trace"] = {{"iterations", ckpt.digest.iterations},
                        {"final_quality", ckpt.digest.final_quality},
                        {"final_instability", ckpt.digest.final_instability},
                        {"final_total", ckpt.digest.final_total},
                        {"fnv1a", ckpt.digest.hash}};
  std::ofstream sc(sidecar_path(path), std::ios::binary);
  if (!sc) throw CheckpointError("cannot write checkpoint sidecar for " + path.string());
  sc << side.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  Reader r(in);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.seed = r.u64();
  constexpr std::uint64_t limit = 1ULL << 32;
  ckpt.params = r.vec(limit);
  ckpt.ema = r.vec(limit);
  const auto n_stats = r.u64();
  if (n_stats > limit) throw CheckpointError("checkpoint series count is implausible");
  ckpt.stats.resize(n_stats);
  for (auto& s : ckpt.stats) {
    s.mean = r.f64();
    s.std = r.f64();
  }

  std::ifstream sc(sidecar_path(path));
  if (!sc) throw CheckpointError("missing checkpoint sidecar " + sidecar_path(path).string());
  json side;
  try {
    side = json::parse(sc);
    if (side.at("version").get<std::uint32_t>() != version) {
      throw CheckpointError("checkpoint and sidecar versions differ");
    }
    ckpt.config = parse_experiment_config(side.at("config").dump());
    ckpt.series_ids = side.at("series_ids").get<std::vector<std::string>>();
    const auto& lt = side.at("loss_trace");
    ckpt.digest.iterations = lt.at("iterations").get<std::uint64_t>();
    ckpt.digest.final_quality = lt.at("final_quality").get<double>();
    ckpt.digest.final_instability = lt.at("final_instability").get<double>();
    ckpt.digest.final_total = lt.at("final_total").get<double>();
    ckpt.digest.hash = lt.at("fnv1a").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint sidecar: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid config in checkpoint sidecar: ") + e.what());
  }

  const std::size_t expected = SQFModel::make_layout(ckpt.config.model).size();
  if (ckpt.params.size() != expected || ckpt.ema.size() != expected) {
    throw CheckpointError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                          " parameters, the configured layout needs " + std::to_string(expected));
  }
  if (ckpt.series_ids.size() != ckpt.stats.size()) {
    throw CheckpointError("checkpoint series ids and statistics disagree");
  }
  return ckpt;
}

}  // namespace stablesqf::io
