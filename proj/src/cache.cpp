#include "homog2d/cache.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homog2d/error.hpp"

namespace homog2d {

namespace {

template <class T>
void put(std::string& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out += static_cast<char>((v >> (8 * b)) & 0xff);
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("cache file is truncated");
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += sizeof(T);
  return v;
}

// Visits the arrays in file order.
template <class Bundle, class F>
void each_field(Bundle& cb, F&& f) {
  for (auto& x : cb.chi) f(x);
  for (auto& x : cb.theta) f(x);
  for (auto& bi : cb.b)
    for (auto& x : bi) f(x);
  for (auto& ej : cb.E)
    for (auto& ei : ej)
      for (auto& x : ei) f(x);
}

std::uint32_t crc(const std::string& s, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(n)));
}

}  // namespace

std::string encode_bundle(const CorrectorBundle& cb) {
  std::string out = "HOM2";
  put<std::uint16_t>(out, kCacheVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cb.N));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cb.m));
  each_field(cb, [&](const MatrixField& f) {
    if (f.N != cb.N || f.rows != cb.m || f.cols != cb.m) throw Error("corrector bundle has inconsistent field sizes");
    for (double v : f.v) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  });
  put<std::uint32_t>(out, crc(out, out.size()));
  return out;
}

CorrectorBundle decode_bundle(const std::string& in) {
  if (in.size() < 4 || in.compare(0, 4, "HOM2") != 0) throw Error("cache file has a bad magic number");
  std::size_t pos = 4;
  const auto version = take<std::uint16_t>(in, pos);
  if (version != kCacheVersion)
    throw Error(fmt::format("cache file version {} is not supported (expected {})", version, kCacheVersion));
  CorrectorBundle cb;
  cb.N = static_cast<int>(take<std::uint32_t>(in, pos));
  cb.m = static_cast<int>(take<std::uint32_t>(in, pos));
  if (cb.N < 1 || cb.N > 1 << 14 || cb.m < 1 || cb.m > 8) throw Error("cache file header is corrupt");
  const std::size_t per = static_cast<std::size_t>(cb.N) * cb.N * cb.m * cb.m;
  const std::size_t expected = pos + 24 * per * 8 + 4;
  if (in.size() != expected)
    throw Error(fmt::format("cache file has {} bytes, expected {} (truncated or corrupt)", in.size(), expected));
  const std::uint32_t stored = [&] {
    std::size_t p = in.size() - 4;
    return take<std::uint32_t>(in, p);
  }();
  if (stored != crc(in, in.size() - 4)) throw Error("cache file CRC32 mismatch");
  each_field(cb, [&](MatrixField& f) {
    f = MatrixField(cb.N, cb.m, cb.m);
    for (double& v : f.v) v = std::bit_cast<double>(take<std::uint64_t>(in, pos));
  });
  return cb;
}

void write_bundle(const CorrectorBundle& cb, const std::string& path) {
  const std::string bytes = encode_bundle(cb);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write cache file '{}'", tmp));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(fmt::format("short write to '{}'", tmp));
  }
  std::filesystem::rename(tmp, path);
}

CorrectorBundle read_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open cache file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_bundle(ss.str());
}

std::string cache_path(const std::string& dir, std::uint32_t hash) {
  return (std::filesystem::path(dir) / fmt::format("cell-{:08x}.hom2", hash)).string();
}

std::optional<CorrectorBundle> load_cached(const std::string& dir, std::uint32_t hash, int N, int m) {
  const std::string path = cache_path(dir, hash);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    CorrectorBundle cb = read_bundle(path);
    if (cb.N != N || cb.m != m) {
      spdlog::warn("cache {} holds N={}, m={} but N={}, m={} is needed; recomputing", path, cb.N, cb.m, N, m);
      return std::nullopt;
    }
    return cb;
  } catch (const Error& e) {
    spdlog::warn("ignoring cache {}: {}; recomputing", path, e.what());
    return std::nullopt;
  }
}

void store_cached(const std::string& dir, std::uint32_t hash, const CorrectorBundle& cb) {
  std::filesystem::create_directories(dir);
  write_bundle(cb, cache_path(dir, hash));
}

}  // namespace homog2d
