#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "homog2d/cache.hpp"
#include "homog2d/cell.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/error.hpp"

using namespace homog2d;
namespace fs = std::filesystem;

namespace {

CorrectorBundle bundle(const std::string& name, int N) {
  return solve_cell_problems(sample_grid(preset(name), N), 1e-10);
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("homog2d-cache-test-" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Bitwise equality of every stored array.
void expect_same(const CorrectorBundle& a, const CorrectorBundle& b) {
  ASSERT_EQ(a.N, b.N);
  ASSERT_EQ(a.m, b.m);
  auto same = [](const MatrixField& x, const MatrixField& y) {
    return x.v.size() == y.v.size() && std::memcmp(x.v.data(), y.v.data(), x.v.size() * sizeof(double)) == 0;
  };
  for (int k = 0; k < 3; ++k) {
    EXPECT_TRUE(same(a.chi[k], b.chi[k]));
    EXPECT_TRUE(same(a.theta[k], b.theta[k]));
    for (int i = 0; i < 2; ++i) {
      EXPECT_TRUE(same(a.b[i][k], b.b[i][k]));
      for (int j = 0; j < 2; ++j) EXPECT_TRUE(same(a.E[j][i][k], b.E[j][i][k]));
    }
  }
}

}  // namespace

TEST(Cache, RoundTripIsBitExact) {
  const auto cb = bundle("full-lower-order", 16);
  expect_same(decode_bundle(encode_bundle(cb)), cb);
  const auto dir = scratch("roundtrip");
  const auto path = (dir / "b.hom2").string();
  write_bundle(cb, path);
  expect_same(read_bundle(path), cb);
  fs::remove_all(dir);
}

TEST(Cache, HeaderLayout) {
  const auto bytes = encode_bundle(bundle("laminate", 16));
  ASSERT_GT(bytes.size(), 14u);
  EXPECT_EQ(bytes.substr(0, 4), "HOM2");
  // 14-byte header, 3 chi + 3 theta + 6 b + 12 E fields of N^2 doubles (m = 1), CRC32
  EXPECT_EQ(bytes.size(), 4u + 2 + 4 + 4 + 24u * 16 * 16 * 8 + 4);
}

TEST(Cache, TruncatedFileRejected) {
  const auto bytes = encode_bundle(bundle("laminate", 16));
  EXPECT_THROW(decode_bundle(bytes.substr(0, bytes.size() - 9)), Error);
  EXPECT_THROW(decode_bundle(bytes.substr(0, 8)), Error);
}

TEST(Cache, FlippedByteFailsCrc) {
  auto bytes = encode_bundle(bundle("laminate", 16));
  bytes[bytes.size() / 2] ^= 0x10;
  try {
    decode_bundle(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("CRC"), std::string::npos);
  }
}

TEST(Cache, MagicAndVersionChecked) {
  const auto good = encode_bundle(bundle("laminate", 16));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_bundle(bad), Error);
  bad = good;
  bad[4] = static_cast<char>(kCacheVersion + 1);
  EXPECT_THROW(decode_bundle(bad), Error);
}

TEST(Cache, LoadBypassesMismatchAndCorruption) {
  const auto dir = scratch("load").string();
  const auto cb = bundle("laminate", 16);
  const std::uint32_t hash = coefficient_hash(preset("laminate"));
  EXPECT_FALSE(load_cached(dir, hash, 16, 1).has_value());
  store_cached(dir, hash, cb);
  ASSERT_TRUE(load_cached(dir, hash, 16, 1).has_value());
  expect_same(*load_cached(dir, hash, 16, 1), cb);
  EXPECT_FALSE(load_cached(dir, hash, 32, 1).has_value());
  EXPECT_FALSE(load_cached(dir, hash, 16, 2).has_value());
  const auto path = cache_path(dir, hash);
  auto bytes = slurp(path);
  bytes[100] ^= 1;
  spit(path, bytes);
  EXPECT_FALSE(load_cached(dir, hash, 16, 1).has_value());
  fs::remove_all(dir);
}
