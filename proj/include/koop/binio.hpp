#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace koop {

using ordered_json = nlohmann::ordered_json;

/// Self-describing binary container: magic line, 8-byte little-endian JSON
/// length, JSON header, then a flat row-major float64 blob. Datasets and
/// model checkpoints share this layout.
struct BinContainer {
  ordered_json header;
  std::vector<double> blob;
};

inline constexpr char kBinMagic[] = "KOOPBIN1\n";

void write_container(const std::filesystem::path& path, const BinContainer& c);
BinContainer read_container(const std::filesystem::path& path);

/// Atomic text write (tmp + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// FNV-1a 64 over file bytes, as 16 hex chars. Integrity tag for manifests.
std::string file_digest(const std::filesystem::path& path);

}  // namespace koop
