#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hl/cluster.hpp"
#include "hl/spectral.hpp"

namespace hl {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumericGuard = 2 };

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err`, progress and summaries to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

/// "1-5,9,12-13" style lists. Throws std::invalid_argument on bad syntax.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<std::size_t> parse_size_list(std::string_view text);
/// Inverse of parse_seed_list with maximal runs collapsed into ranges.
std::string format_seed_list(std::span<const std::uint64_t> seeds);

/// Powers of two below n, then n itself.
std::vector<std::size_t> default_checkpoints(std::size_t n);

/// Hash of the canonical argument vector a manifest records.
std::string config_hash(std::span<const std::string> canonical_args);

std::string trace_csv(std::span<const TracePoint> trace);
std::string trace_csv(std::span<const TracePoint> trace, double epsilon_witness);
std::string boundary_csv(std::span<const Complex> points);

struct SpectrumRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  LaurentSpectrum spectrum;
};
std::string spectrum_csv(std::span<const SpectrumRow> rows);

struct ModeSumRow {
  std::uint64_t seed = 0;
  ModeSums sums;
};
std::string modesums_csv(std::span<const ModeSumRow> rows);

}  // namespace hl
