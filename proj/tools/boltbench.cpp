#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "bolt/harness/bench.hpp"

using namespace bolt::harness;

namespace {

int emit(const BenchReport& report, const std::string& report_path) {
  std::cout << report_human(report);
  if (!report_path.empty()) {
    if (auto s = write_report(report, report_path); !s.is_ok()) {
      std::cerr << "boltbench: " << s.error().detail << "\n";
      return 1;
    }
    std::cout << "report written to " << report_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boltbench - verification and benchmark harness"};
  app.require_subcommand(1);
  app.fallthrough();  // shared options may follow the subcommand

  std::string variant_name = "lazy";
  std::size_t forks = 100;
  std::size_t depth = 8;
  std::uint64_t ops = 10000;
  std::uint64_t seed = 1;
  std::string report_path;

  app.add_option("--variant", variant_name, "lazy | eager_tail | naive_cf")
      ->capture_default_str();
  app.add_option("--forks", forks, "fork fan-out")->capture_default_str();
  app.add_option("--depth", depth, "fork nesting depth")->capture_default_str();
  app.add_option("--ops", ops, "operation count")->capture_default_str();
  app.add_option("--seed", seed, "workload seed")->capture_default_str();
  app.add_option("--report", report_path, "write a machine-readable json report here");

  CLI::App* forklat = app.add_subcommand(
      "forklat", "fork-creation latency across parent sizes 10^3..10^6");
  CLI::App* ablate =
      app.add_subcommand("ablate", "per-append touched-structure cost for one variant");
  CLI::App* memory =
      app.add_subcommand("memory", "index entry totals, lazy vs copy-everything");
  CLI::App* depth_cmd = app.add_subcommand("depth", "recursive lookup cost by nesting depth");
  CLI::App* linearize =
      app.add_subcommand("linearize", "concurrent interleaving check against the real service");
  CLI::App* differential =
      app.add_subcommand("differential", "drive all variants with one recorded workload");

  CLI11_PARSE(app, argc, argv);

  if (forklat->parsed()) {
    return emit(bench_forklat({1000, 10000, 100000, 1000000}, 100), report_path);
  }
  if (ablate->parsed()) {
    Variant v;
    if (variant_name == "lazy") {
      v = Variant::kLazy;
    } else if (variant_name == "eager_tail") {
      v = Variant::kEagerTail;
    } else if (variant_name == "naive_cf") {
      v = Variant::kNaiveCF;
    } else {
      std::cerr << "boltbench: unknown variant " << variant_name << "\n";
      return 2;
    }
    return emit(bench_ablate(v, forks, ops, seed), report_path);
  }
  if (memory->parsed()) {
    // Bias most records at the root so inheritance amplification dominates.
    std::uint64_t to_root = ops * 52 / 100;
    return emit(bench_memory(forks, to_root, ops - to_root, seed), report_path);
  }
  if (depth_cmd->parsed()) {
    return emit(bench_depth(depth, ops, 20000, seed), report_path);
  }
  if (linearize->parsed()) {
    auto dir = std::filesystem::temp_directory_path() / "boltbench-linearize";
    return emit(bench_linearize(16, forks, ops, seed, dir.string()), report_path);
  }
  if (differential->parsed()) {
    WorkloadOptions opts;
    opts.seed = seed;
    opts.commands = ops;
    opts.min_forks = forks / 2;
    opts.min_nesting = depth / 2;
    return emit(bench_differential(opts), report_path);
  }
  return 2;
}
