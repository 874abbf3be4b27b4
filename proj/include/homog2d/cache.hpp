#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "homog2d/cell.hpp"

namespace homog2d {

/// Corrector cache file: "HOM2", u16 version, u32 N, u32 m, then little-endian
/// float64 arrays chi0..2, Theta0..2, b[i][k], E[j][i][k] and a CRC32 of all
/// preceding bytes.
inline constexpr std::uint16_t kCacheVersion = 1;

std::string encode_bundle(const CorrectorBundle& cb);
/// Throws Error on bad magic, version, size or CRC. Residuals are not stored.
CorrectorBundle decode_bundle(const std::string& bytes);

void write_bundle(const CorrectorBundle& cb, const std::string& path);
CorrectorBundle read_bundle(const std::string& path);

/// <dir>/cell-<hash>.hom2
std::string cache_path(const std::string& dir, std::uint32_t hash);

/// Cached bundle for (hash, N, m), or nullopt with a logged warning when the
/// file is missing, corrupt or was written for another grid.
std::optional<CorrectorBundle> load_cached(const std::string& dir, std::uint32_t hash, int N, int m);
void store_cached(const std::string& dir, std::uint32_t hash, const CorrectorBundle& cb);

}  // namespace homog2d
