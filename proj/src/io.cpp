#include "hl/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hl {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open '" + path.string() + "' for writing: " +
                             std::strerror(errno));
  out.write(contents.data(), std::streamsize(contents.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path.string() + "' for reading: " +
                             std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string render_svg(std::span<const std::complex<double>> points, const SvgStyle& style) {
  if (points.empty()) throw std::invalid_argument("render_svg: no points");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    // SVG y grows downwards; flip so the picture matches the complex plane.
    ymin = std::min(ymin, -p.imag());
    ymax = std::max(ymax, -p.imag());
  }
  const double span_x = std::max(xmax - xmin, 1e-12);
  const double span_y = std::max(ymax - ymin, 1e-12);
  const double vx = xmin - 0.05 * span_x;
  const double vy = ymin - 0.05 * span_y;
  const double vw = 1.1 * span_x;
  const double vh = 1.1 * span_y;
  const double height_px = style.width_px * vh / vw;
  const double stroke = style.stroke_width * vw / style.width_px;

  std::string out;
  out.reserve(points.size() * 24 + 512);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(style.width_px) +
         "\" height=\"" + svg_num(height_px) + "\" viewBox=\"" + svg_num(vx) + ' ' + svg_num(vy) +
         ' ' + svg_num(vw) + ' ' + svg_num(vh) + "\">\n";
  out += "<rect x=\"" + svg_num(vx) + "\" y=\"" + svg_num(vy) + "\" width=\"" + svg_num(vw) +
         "\" height=\"" + svg_num(vh) + "\" fill=\"" + style.background + "\"/>\n";
  out += "<polyline fill=\"none\" stroke=\"" + style.stroke + "\" stroke-width=\"" +
         svg_num(stroke) + "\" stroke-linejoin=\"round\" points=\"";
  for (std::size_t i = 0; i <= points.size(); ++i) {
    const auto& p = points[i % points.size()];
    if (i) out += ' ';
    out += svg_num(p.real());
    out += ',';
    out += svg_num(-p.imag());
  }
  out += "\"/>\n</svg>\n";
  return out;
}

void emit_svg(const std::filesystem::path& path, std::span<const std::complex<double>> points,
              const SvgStyle& style) {
  write_text_file(path, render_svg(points, style));
}

}  // namespace hl
