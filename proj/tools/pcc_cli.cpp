// pcc: batch front end. One JSON config per run; --seed and --out override.
#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>

#include "pcc/errors.hpp"
#include "pcc/manifest.hpp"
#include "pcc/runner.hpp"
#include "pcc/service.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitFlagged = 3;

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  bool quiet = false;
};

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

int run(const std::string& command, const RunArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  pcc::Json effective;
  try {
    const pcc::Json config = pcc::load_json_file(args.config);
    effective = pcc::prepare_config(command, config, args.seed, pcc::kDefaultSeed);
  } catch (const pcc::InputError& e) {
    std::cerr << "pcc " << command << ": " << e.what() << '\n';
    return kExitInput;
  }

  const fs::path out_dir = args.out.empty() ? fs::path("pcc-out") / command : fs::path(args.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "pcc " << command << ": cannot create " << out_dir.string() << ": " << ec.message() << '\n';
    return kExitInput;
  }

  pcc::RunManifest manifest;
  manifest.command = command;
  manifest.version = std::string(pcc::library_version());
  manifest.config_hash = pcc::config_hash(effective);
  manifest.seed = effective.at("seed").get<std::uint64_t>();
  manifest.config = effective;
  const fs::path manifest_path = out_dir / "manifest.json";
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  auto fail = [&](const std::string& message, int code) {
    manifest.status = "failed";
    manifest.error = message;
    manifest.wall_time_seconds = elapsed();
    try {
      pcc::write_manifest(manifest, manifest_path);
    } catch (const std::exception&) {
    }
    std::cerr << "pcc " << command << ": " << message << '\n';
    return code;
  };

  try {
    pcc::write_manifest(manifest, manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "pcc " << command << ": " << e.what() << '\n';
    return kExitFailure;
  }

  pcc::ExecutionContext ctx;
  ctx.threads = std::max<std::size_t>(1, args.threads);
  ctx = pcc::with_threads(ctx, effective);
  if (!args.quiet) {
    ctx.progress = [last = std::make_shared<std::atomic<int>>(-1)](std::size_t done, std::size_t total) {
      const int pct = total == 0 ? 100 : static_cast<int>(100 * done / total);
      if (pct / 10 > last->load()) {
        last->store(pct / 10);
        std::cerr << "\r" << pct << "%" << std::flush;
        if (pct >= 100) std::cerr << '\n';
      }
    };
  }

  const fs::path base_dir = fs::absolute(args.config).parent_path();
  pcc::RunOutput output;
  try {
    output = pcc::run_command(command, effective, pcc::make_cohort_resolver(base_dir), ctx);
  } catch (const pcc::InfeasibleDesign& e) {
    return fail(e.what(), kExitFlagged);
  } catch (const pcc::InputError& e) {
    return fail(e.what(), kExitInput);
  } catch (const std::exception& e) {
    return fail(e.what(), kExitFailure);
  }

  try {
    write_file(out_dir / "result.json", pcc::result_bytes(output.result));
    manifest.artifacts.push_back("result.json");
    for (const pcc::Artifact& a : output.artifacts) {
      write_file(out_dir / a.name, a.content);
      manifest.artifacts.push_back(a.name);
    }
  } catch (const std::exception& e) {
    return fail(e.what(), kExitFailure);
  }
  manifest.status = "complete";
  manifest.wall_time_seconds = elapsed();
  pcc::write_manifest(manifest, manifest_path);

  for (const std::string& note : output.notes) std::cerr << "pcc " << command << ": " << note << '\n';
  if (!args.quiet) std::cout << out_dir.string() << '\n';
  return output.flagged ? kExitFlagged : kExitOk;
}

pcc::Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcc: predictive case control study planning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pcc::library_version()));

  RunArgs args;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"surface", "expected information over a (k, w) grid"},
      {"power", "recalibration test power by sample size"},
      {"revision", "lasso support recovery curves"},
      {"robustness", "surfaces under several assumed parameter settings"},
      {"compare", "one PCC design against SRS"},
      {"gen-cohort", "write a simulated cohort"},
  };
  for (const auto& entry : commands) {
    const char* name = entry.first;
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", args.out, "output directory (default pcc-out/<command>)");
    sub->add_option("--seed", args.seed, "master seed (overrides the config)");
    sub->add_option("--threads,-j", args.threads, "worker threads; results do not depend on it");
    sub->add_flag("--quiet,-q", args.quiet, "no progress output");
    sub->callback([&chosen, name] { chosen = name; });
  }

  std::string host = "127.0.0.1";
  int port = 8080;
  pcc::ServiceOptions service_options;
  std::string base_dir = ".";
  CLI::App* serve = app.add_subcommand("serve", "run the HTTP job service");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "listen port");
  serve->add_option("--workers", service_options.workers, "concurrent jobs");
  serve->add_option("--job-threads", service_options.job_threads, "threads per job");
  serve->add_option("--base-dir", base_dir, "directory for file cohorts");
  serve->callback([&chosen] { chosen = "serve"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (chosen == "serve") {
    service_options.base_dir = base_dir;
    pcc::Service service(service_options);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "pcc serve: listening on " << host << ":" << port << '\n';
    const bool ok = service.listen(host, port);
    g_service = nullptr;
    if (!ok) {
      std::cerr << "pcc serve: cannot bind " << host << ":" << port << '\n';
      return kExitFailure;
    }
    return kExitOk;
  }
  return run(chosen, args);
}
