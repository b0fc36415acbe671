#include "pcc/manifest.hpp"

#include <fstream>
#include <sstream>

#include "pcc/config.hpp"

#ifndef PCC_VERSION
#define PCC_VERSION "0.0.0"
#endif

namespace pcc {

std::string_view library_version() noexcept { return PCC_VERSION; }

Json to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["status"] = m.status;
  if (!m.error.empty()) j["error"] = m.error;
  j["artifacts"] = m.artifacts;
  j["wall_time_seconds"] = m.wall_time_seconds;
  j["config"] = m.config;
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<Seed>();
  m.status = j.at("status").get<std::string>();
  if (j.contains("error")) m.error = j.at("error").get<std::string>();
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  m.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  m.config = j.at("config");
  return m;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InputError("cannot write manifest '" + path.string() + "'");
    out << to_json(m).dump(2) << '\n';
    if (!out) throw InputError("error writing manifest '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

RunManifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(load_json_file(path)); }

}  // namespace pcc
