#include <doctest.h>

#include "pcc/config.hpp"
#include "pcc/manifest.hpp"
#include "test_support.hpp"

using namespace pcc;

TEST_SUITE("manifest") {
  TEST_CASE("round trip through a file") {
    const auto dir = test::scratch_dir("manifest");
    RunManifest m;
    m.command = "surface";
    m.version = std::string(library_version());
    m.config = Json::parse(R"({"seed": 4, "cohort": {"kind": "normal"}})");
    m.config_hash = config_hash(m.config);
    m.seed = 4;
    m.artifacts = {"result.json", "surface_d_optimality.csv"};
    m.status = "complete";
    m.wall_time_seconds = 1.5;
    write_manifest(m, dir / "manifest.json");
    const RunManifest back = read_manifest(dir / "manifest.json");
    CHECK(back.command == m.command);
    CHECK(back.version == m.version);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.seed == 4);
    CHECK(back.artifacts == m.artifacts);
    CHECK(back.status == "complete");
    CHECK(back.wall_time_seconds == 1.5);
    CHECK(back.config == m.config);
    // The temporary file is gone after the rename.
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("version string") { CHECK(library_version() == "0.1.0"); }

  TEST_CASE("failed manifests keep the error") {
    RunManifest m;
    m.status = "failed";
    m.error = "cannot open cohort file";
    const Json j = to_json(m);
    CHECK(j["status"] == "failed");
    CHECK(j["error"] == "cannot open cohort file");
    CHECK(manifest_from_json(j).error == m.error);
  }
}
