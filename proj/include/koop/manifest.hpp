#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "koop/binio.hpp"

namespace koop {

inline constexpr char kToolVersion[] = "0.1.0";

/// Experiment manifests record the resolved config, seeds and file digests
/// of every command, enough to re-run it.
ordered_json manifest_base(const std::string& command, const ordered_json& resolved_config,
                           std::uint64_t seed);
void manifest_add_input(ordered_json& m, const std::string& label, const std::filesystem::path& path);
void manifest_add_output(ordered_json& m, const std::string& label, const std::filesystem::path& path);

/// Adds wall-clock and writes `<target>.manifest.json` (file target) or
/// `<target>/manifest.json` (directory target), atomically.
void write_manifest(const std::filesystem::path& target, ordered_json m, double wall_seconds);

/// If a sibling manifest records `path` as an output, verify the digest
/// matches; throws on mismatch. Returns false when no manifest covers it.
bool verify_against_manifest(const std::filesystem::path& path);

}  // namespace koop
