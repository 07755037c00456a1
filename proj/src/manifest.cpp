#include "percept/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "percept/errors.hpp"

namespace percept {

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  if (m.seed) j["seed"] = *m.seed;
  if (m.config_digest) j["config_digest"] = *m.config_digest;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::uint64_t hash = 0xCBF29CE484222325ull;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001B3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

std::string now_iso8601_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm_utc.tm_year + 1900,
                tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min,
                tm_utc.tm_sec);
  return buf;
}

}  // namespace percept
