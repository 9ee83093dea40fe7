#include "cecm/block_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace cecm {

static_assert(std::endian::native == std::endian::little,
              "block formats are little-endian; big-endian hosts unsupported");

namespace {

constexpr char kBlockMagic[4] = {'C', 'U', 'B', 'B'};
constexpr char kWeightMagic[4] = {'C', 'U', 'B', 'W'};
constexpr std::uint32_t kBlockVersion = 1;

[[noreturn]] void format_error(const std::filesystem::path& path,
                               std::streamoff offset, const std::string& what) {
  throw InputError(path.string() + ": " + what + " (byte offset " +
                   std::to_string(static_cast<long long>(offset)) + ")");
}

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::filesystem::path& path) {
  T v{};
  const std::streamoff at = is.tellg();
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    format_error(path, at, "unexpected end of file");
  return v;
}

}  // namespace

void write_block_file(const std::filesystem::path& path, const Matrix& block) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(kBlockMagic, 4);
  write_pod(os, kBlockVersion);
  write_pod(os, static_cast<std::uint64_t>(block.rows()));
  write_pod(os, static_cast<std::uint64_t>(block.cols()));
  // Eigen stores column-major by default, matching the payload layout.
  os.write(reinterpret_cast<const char*>(block.data()),
           static_cast<std::streamsize>(sizeof(double) * block.size()));
  if (!os) throw InputError("write failed for " + path.string());
}

Matrix read_block_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kBlockMagic, 4) != 0)
    format_error(path, 0, "bad magic, expected \"CUBB\"");
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kBlockVersion)
    format_error(path, 4, "unsupported version " + std::to_string(version));
  const auto n = read_pod<std::uint64_t>(is, path);
  const auto m = read_pod<std::uint64_t>(is, path);
  Matrix block(static_cast<Index>(n), static_cast<Index>(m));
  const std::streamoff at = is.tellg();
  if (!is.read(reinterpret_cast<char*>(block.data()),
               static_cast<std::streamsize>(sizeof(double) * n * m)))
    format_error(path, at, "truncated payload");
  return block;
}

void write_weights_file(const std::filesystem::path& path, const Vector& w) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(kWeightMagic, 4);
  write_pod(os, static_cast<std::uint64_t>(w.size()));
  os.write(reinterpret_cast<const char*>(w.data()),
           static_cast<std::streamsize>(sizeof(double) * w.size()));
  if (!os) throw InputError("write failed for " + path.string());
}

Vector read_weights_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kWeightMagic, 4) != 0)
    format_error(path, 0, "bad magic, expected \"CUBW\"");
  const auto len = read_pod<std::uint64_t>(is, path);
  Vector w(static_cast<Index>(len));
  const std::streamoff at = is.tellg();
  if (!is.read(reinterpret_cast<char*>(w.data()),
               static_cast<std::streamsize>(sizeof(double) * len)))
    format_error(path, at, "truncated payload");
  return w;
}

BlockManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.contains("n") || !j.contains("blocks"))
    throw InputError(path.string() + ": manifest needs fields n and blocks");
  BlockManifest m;
  m.rows = j.at("n").get<Index>();
  const auto base = path.has_parent_path() ? path.parent_path()
                                           : std::filesystem::path(".");
  for (const auto& entry : j.at("blocks")) {
    std::filesystem::path p = entry.get<std::string>();
    if (p.is_relative()) p = base / p;
    m.block_paths.push_back(std::move(p));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const BlockManifest& manifest) {
  nlohmann::json j;
  j["n"] = manifest.rows;
  auto blocks = nlohmann::json::array();
  for (const auto& p : manifest.block_paths) blocks.push_back(p.string());
  j["blocks"] = std::move(blocks);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

FileBlockSource::FileBlockSource(const std::filesystem::path& manifest_path) {
  const BlockManifest m = read_manifest(manifest_path);
  rows_ = m.rows;
  paths_ = m.block_paths;
  if (paths_.empty())
    throw InputError(manifest_path.string() + ": manifest lists no blocks");
  // Headers only; payloads stay on disk until load().
  for (const auto& p : paths_) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw InputError("cannot open block file " + p.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kBlockMagic, 4) != 0)
      format_error(p, 0, "bad magic, expected \"CUBB\"");
    read_pod<std::uint32_t>(is, p);
    const auto n = read_pod<std::uint64_t>(is, p);
    const auto cols = read_pod<std::uint64_t>(is, p);
    if (static_cast<Index>(n) != rows_)
      throw InputError(p.string() + ": block row count " + std::to_string(n) +
                       " != manifest n " + std::to_string(rows_));
    cols_.push_back(static_cast<Index>(cols));
  }
}

Matrix FileBlockSource::load(int i) const {
  return read_block_file(paths_.at(static_cast<std::size_t>(i)));
}

}  // namespace cecm
