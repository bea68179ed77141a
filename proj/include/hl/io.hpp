#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace hl {

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

/// 64-bit FNV-1a, used for manifest and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

/// Writes the whole file or throws std::runtime_error naming the path.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

struct SvgStyle {
  double width_px = 800.0;
  std::string stroke = "#1f3b73";
  double stroke_width = 1.0;  // in px; rescaled into data units
  std::string background = "#ffffff";
};

/// One closed polyline through the points, viewBox fitted to the data with a
/// 5% margin on each side. Output depends only on the inputs.
std::string render_svg(std::span<const std::complex<double>> points, const SvgStyle& style = {});
void emit_svg(const std::filesystem::path& path, std::span<const std::complex<double>> points,
              const SvgStyle& style = {});

}  // namespace hl
