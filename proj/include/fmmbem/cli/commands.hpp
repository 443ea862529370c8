#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmmbem/fmm/fmm.hpp"

namespace fmmbem::cli {

/// Exit statuses shared by every subcommand.
enum Exit : int { kSuccess = 0, kInputError = 1, kNotConverged = 2 };

struct BenchOptions {
  std::vector<std::size_t> sizes{10000};
  fmm::FmmConfig fmm{.order = 10};
  std::string distribution = "cube";  // cube: uniform in [0,1]^3; sphere: uniform on the unit sphere
  std::uint64_t seed = 1;
  std::size_t check = 1000;  // direct-check targets; 0 disables the error column
  int repeat = 1;            // best-of timing
};

struct BenchRecord {
  std::size_t n = 0;
  int p = 0, ncrit = 0, threads = 0;
  fmm::PhaseTimings timings;
  std::optional<double> rel_l2_err;
};

/// Seeded points in [0,1]^3 (or on the unit sphere) with weights in [-1, 1).
void bench_points(std::size_t n, const std::string& distribution, std::uint64_t seed, std::vector<Vec3>& points,
                  std::vector<double>& weights);
std::vector<BenchRecord> bench_fmm(const BenchOptions& options);
void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records);

/// Parses the command line, runs one subcommand and returns its exit status.
/// Reports go to `out` unless an output path is given; diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fmmbem::cli
