#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fidstore/bench.hpp"

using namespace fidstore;

namespace {

struct Output {
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      std::string full = path;
      if (const char* dir = std::getenv("FIDSTORE_DIR"); dir && path.find('/') == std::string::npos)
        full = std::string(dir) + "/" + path;
      file.open(full);
      if (!file) throw std::runtime_error("cannot open " + full);
    }
  }
  std::ostream& out() { return file.is_open() ? static_cast<std::ostream&>(file) : std::cout; }
  std::ofstream file;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fidbench: desk-scale measurements for the FID mapping store"};
  app.require_subcommand(1);

  std::uint64_t iters = 1000000;
  std::uint64_t fields = 1000000;
  std::uint64_t width = 4;
  std::string mode = "read-write";
  std::string dist = "uniform";
  double theta = 0.8;
  double cache_pct = 25;
  std::size_t batch = 256;
  std::uint64_t seed = 1;
  std::uint64_t seeds = 100;
  std::uint64_t ops = 10000;
  std::uint64_t rows = 1000;
  std::string backend = "fid";
  std::string out_path;

  auto* ops_cmd = app.add_subcommand("ops", "put/get vs AEAD encrypt/decrypt of one field");
  ops_cmd->add_option("--iters", iters, "iterations per operation")->check(CLI::Range(100000ULL, 1000000000ULL));

  auto* storage_cmd = app.add_subcommand("storage", "storage accounting for the three schemes");
  storage_cmd->add_option("--fields", fields, "number of fields")->check(CLI::PositiveNumber);
  storage_cmd->add_option("--width", width, "plaintext bytes per field");

  auto* wl_cmd = app.add_subcommand("workload", "sysbench-style run through the zone simulator");
  wl_cmd->add_option("--mode", mode, "read-only|read-write|write-only|insert-only|point-select|range-select");
  wl_cmd->add_option("--dist", dist, "uniform|zipfian");
  wl_cmd->add_option("--theta", theta, "Zipfian skew in (0, 1]");
  wl_cmd->add_option("--cache-pct", cache_pct, "page cache as percent of data pages");
  wl_cmd->add_option("--batch", batch, "operator batch size");
  wl_cmd->add_option("--seed", seed, "workload seed");
  wl_cmd->add_option("--ops", ops, "statements to run");
  wl_cmd->add_option("--rows", rows, "rows per table");
  wl_cmd->add_option("--backend", backend, "fid|cipher")->check(CLI::IsMember({"fid", "cipher"}));

  auto* cm_cmd = app.add_subcommand("crash-matrix", "every crash point over a seed range");
  cm_cmd->add_option("--seeds", seeds, "seeds per crash point")->check(CLI::PositiveNumber);
  cm_cmd->add_option("--seed", seed, "first seed");
  cm_cmd->add_option("--ops", ops, "statements per run");

  for (auto* c : {ops_cmd, storage_cmd, wl_cmd, cm_cmd}) c->add_option("--out", out_path, "CSV output file");

  CLI11_PARSE(app, argc, argv);

  try {
    Output out(out_path);
    if (*ops_cmd) {
      const auto r = bench_ops(iters);
      out.out() << ops_csv_header() << "\n" << to_csv(r);
      std::cerr << "decrypt/get = " << r.decrypt_over_get << ", encrypt/put = " << r.encrypt_over_put << "\n";
      return 0;
    }
    if (*storage_cmd) {
      out.out() << storage_csv_header() << "\n" << to_csv(bench_storage(fields, width)) << "\n";
      return 0;
    }
    if (*wl_cmd) {
      WorkloadSpec spec;
      spec.mode = parse_mode(mode);
      spec.distribution = parse_distribution(dist);
      spec.theta = theta;
      spec.cache_fraction = cache_pct / 100.0;
      spec.batch_size = batch;
      spec.duration_ops = ops;
      spec.rows_per_table = rows;
      spec.validate();
      out.out() << workload_csv_header() << "\n";
      if (backend == "cipher") {
        CipherBackend cb;
        out.out() << to_csv(cb.run_workload(seed, spec), seed, spec) << "\n";
        return 0;
      }
      ZoneSim sim;
      const auto rep = sim.run_workload(seed, spec);
      out.out() << to_csv(rep) << "\n";
      return rep.final_invariant.holds ? 0 : 1;
    }
    if (*cm_cmd) {
      auto spec = crash_matrix_spec();
      spec.duration_ops = ops;
      out.out() << crash_csv_header() << "\n";
      std::uint64_t bad = 0;
      for (auto kind : kAllCrashKinds) {
        for (std::uint64_t s = seed; s < seed + seeds; ++s) {
          const auto row = run_crash_cell(kind, s, spec);
          out.out() << to_csv(row) << "\n";
          if (row.violations > 0 || row.final_violations > 0 || row.orphans_post_gc > 0) ++bad;
        }
      }
      if (bad > 0) {
        std::cerr << bad << " crash-matrix runs violated the invariant\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "fidbench: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
