#include "lmsynth/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "lmsynth/error.hpp"
#include "lmsynth/record_io.hpp"

namespace lmsynth::ad {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'C', 'K'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) fail(ErrorCode::FormatError, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) fail(ErrorCode::FormatError, "truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".manifest.json");
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::ordered_json& manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u64(os, params.size());
  for (const auto& [name, p] : params) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) put_u64(os, static_cast<std::uint64_t>(d));
    for (double v : p.value.values()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) fail(ErrorCode::IoError, "write failed for " + path.string());

  nlohmann::ordered_json m;
  m["format_version"] = kCheckpointVersion;
  m["tensor_count"] = params.size();
  m["step"] = params.step();
  m["hyperparameters"] = manifest;
  write_json_file(manifest_path(path), m);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::FormatError, path.string() + " is not a checkpoint");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::UnsupportedVersion, "checkpoint version " + std::to_string(version) + " is not supported");
  }
  Checkpoint ck;
  const std::uint64_t count = get_u64(is);
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::uint32_t len = get_u32(is);
    if (len > (1u << 16)) fail(ErrorCode::FormatError, "implausible tensor name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) fail(ErrorCode::FormatError, "truncated checkpoint");
    const std::uint32_t rank = get_u32(is);
    if (rank == 0 || rank > 8) fail(ErrorCode::FormatError, "bad rank for '" + name + "'");
    std::vector<int> shape;
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint64_t d = get_u64(is);
      if (d == 0 || d > (1u << 24)) fail(ErrorCode::FormatError, "bad dimension for '" + name + "'");
      shape.push_back(static_cast<int>(d));
      n *= d;
    }
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(get_u64(is));
    Tensor t(std::move(shape), std::move(values));
    if (!t.all_finite()) fail(ErrorCode::NonFinite, "non-finite weights in '" + name + "'");
    ck.params.add(name, std::move(t));
  }
  const auto mpath = manifest_path(path);
  if (std::filesystem::exists(mpath)) {
    const auto m = read_ordered_json_file(mpath);
    if (m.value("format_version", 0u) != kCheckpointVersion) {
      fail(ErrorCode::UnsupportedVersion, "manifest version mismatch in " + mpath.string());
    }
    ck.params.set_step(m.value("step", 0));
    ck.manifest = m.value("hyperparameters", nlohmann::ordered_json::object());
  }
  return ck;
}

}  // namespace lmsynth::ad
