#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pcc/rng.hpp"
#include "pcc/serialization.hpp"

namespace pcc {

std::string_view library_version() noexcept;

struct RunManifest {
  std::string command;
  std::string version;
  std::string config_hash;
  Seed seed = 0;
  Json config;  // effective configuration after overrides
  std::vector<std::string> artifacts;
  std::string status = "incomplete";  // incomplete | complete | failed
  std::string error;                  // set when failed
  double wall_time_seconds = 0.0;
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

/// Writes via a temporary file and rename so a reader never sees a torn file.
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace pcc
