#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace percept {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Provenance sidecar written next to every CLI output artifact.
/// Timestamps live only here so that the artifacts themselves stay
/// byte-identical across reruns.
struct RunManifest {
  std::string command;
  std::string tool_version{kToolVersion};
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_digest;
  std::string started_at;
  std::string finished_at;
};

void write_manifest(const RunManifest& m, const std::filesystem::path& path);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string digest_file(const std::filesystem::path& path);

std::string now_iso8601_utc();

}  // namespace percept
