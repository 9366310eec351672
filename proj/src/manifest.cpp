#include "koop/manifest.hpp"

#include <stdexcept>

namespace koop {

ordered_json manifest_base(const std::string& command, const ordered_json& resolved_config,
                           std::uint64_t seed) {
  ordered_json m;
  m["command"] = command;
  m["config"] = resolved_config;
  m["seed"] = seed;
  m["inputs"] = ordered_json::object();
  m["outputs"] = ordered_json::object();
  return m;
}

void manifest_add_input(ordered_json& m, const std::string& label, const std::filesystem::path& path) {
  m["inputs"][label]["path"] = path.string();
  m["inputs"][label]["digest"] = file_digest(path);
}

void manifest_add_output(ordered_json& m, const std::string& label, const std::filesystem::path& path) {
  m["outputs"][label]["path"] = path.string();
  m["outputs"][label]["digest"] = file_digest(path);
}

void write_manifest(const std::filesystem::path& target, ordered_json m, double wall_seconds) {
  m["tool_version"] = kToolVersion;
  m["wall_clock_s"] = wall_seconds;
  const std::filesystem::path dest = std::filesystem::is_directory(target)
                                         ? target / "manifest.json"
                                         : std::filesystem::path(target.string() + ".manifest.json");
  write_text_atomic(dest, m.dump(2) + "\n");
}

bool verify_against_manifest(const std::filesystem::path& path) {
  const std::filesystem::path direct(path.string() + ".manifest.json");
  const std::filesystem::path sibling = path.parent_path() / "manifest.json";
  for (const auto& cand : {direct, sibling}) {
    if (!std::filesystem::exists(cand)) continue;
    ordered_json m;
    try {
      m = ordered_json::parse(std::ifstream(cand));
    } catch (...) {
      continue;
    }
    if (!m.contains("outputs")) continue;
    for (const auto& [label, entry] : m["outputs"].items()) {
      if (std::filesystem::path(entry.value("path", "")).filename() != path.filename()) continue;
      const std::string want = entry.value("digest", "");
      const std::string got = file_digest(path);
      if (want != got)
        throw std::runtime_error("digest mismatch for " + path.string() + ": manifest records " + want +
                                 " but file is " + got);
      return true;
    }
  }
  return false;
}

}  // namespace koop
