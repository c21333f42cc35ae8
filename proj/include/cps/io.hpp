#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "cps/errors.hpp"
#include "cps/image.hpp"
#include "cps/operators.hpp"

namespace cps {

// ---------------------------------------------------------------------------
// Whole-file atomic writes

/// Writes `bytes` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  static std::atomic<unsigned long> counter{0};
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(tid % 100000) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot create '" + tmp.string() + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw InputError("short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot rename onto '" + path.string() + "'");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// 16-bit binary PGM

/// Stored sample = round(65535 (v - offset) / range).
struct PgmScale {
  double offset = 0.0;
  double range = 1.0;
  bool rescaled = false;
};

namespace detail {

inline std::size_t pgm_header_field(const std::string& buf, std::size_t& pos, const char* what) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (pos == start)
    throw FormatError("PGM: expected " + std::string(what) + " at byte " + std::to_string(start));
  if (pos - start > 9)
    throw FormatError("PGM: " + std::string(what) + " too large at byte " + std::to_string(start));
  return std::stoul(buf.substr(start, pos - start));
}

} // namespace detail

/// Decodes a binary graymap into [0, 1]. 8-bit files are accepted.
inline Image parse_pgm(const std::string& buf) {
  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5')
    throw FormatError("PGM: bad magic at byte 0, expected 'P5'");
  std::size_t pos = 2;
  const std::size_t width_at = pos;
  const std::size_t width = detail::pgm_header_field(buf, pos, "width");
  const std::size_t height = detail::pgm_header_field(buf, pos, "height");
  const std::size_t maxval_at = pos;
  const std::size_t maxval = detail::pgm_header_field(buf, pos, "maxval");
  if (width == 0 || height == 0)
    throw FormatError("PGM: zero image dimension near byte " + std::to_string(width_at));
  if (maxval == 0 || maxval > 65535)
    throw FormatError("PGM: maxval " + std::to_string(maxval) + " out of range at byte " +
                      std::to_string(maxval_at));
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
    throw FormatError("PGM: missing separator after header at byte " + std::to_string(pos));
  ++pos;

  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  const std::size_t expected = width * height * bytes_per;
  const std::size_t actual = buf.size() - pos;
  if (actual < expected)
    throw FormatError("PGM: truncated payload at byte " + std::to_string(pos) + ": expected " +
                      std::to_string(expected) + " bytes, got " + std::to_string(actual));

  Image img(height, width);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned v = bytes_per == 1 ? p[i] : (unsigned(p[2 * i]) << 8) | p[2 * i + 1];
    if (v > maxval)
      throw FormatError("PGM: sample " + std::to_string(v) + " exceeds maxval at byte " +
                        std::to_string(pos + bytes_per * i));
    img[i] = double(v) / double(maxval);
  }
  return img;
}

/// Encodes at maxval 65535. Images inside [0, 1] are stored directly,
/// anything else is min-max scaled and the scale returned.
inline std::string encode_pgm(const Image& img, PgmScale* scale_out = nullptr) {
  if (img.empty()) throw ContractError("cannot encode an empty image");
  if (!all_finite(img)) throw InputError("cannot encode non-finite pixels");
  PgmScale sc;
  const double lo = min_value(img), hi = max_value(img);
  if (lo < 0.0 || hi > 1.0) {
    sc.rescaled = true;
    sc.offset = lo;
    sc.range = hi > lo ? hi - lo : 1.0;
  }
  std::string out = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n65535\n";
  const std::size_t head = out.size();
  out.resize(head + 2 * img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = std::clamp((img[i] - sc.offset) / sc.range, 0.0, 1.0);
    const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    out[head + 2 * i] = char(v >> 8);
    out[head + 2 * i + 1] = char(v & 0xff);
  }
  if (scale_out) *scale_out = sc;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline Image parse_image_csv(const std::string& text) {
  std::istringstream in(text);
  DenseMatrix m = parse_matrix_csv(in);
  return Image(Shape{m.rows, m.cols}, std::move(m.values));
}

/// Row-major, comma separated, round-trip precision.
inline std::string encode_csv(const Image& img) {
  std::string out;
  char cell[32];
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) {
      std::snprintf(cell, sizeof cell, "%.17g", img(r, c));
      if (c) out += ',';
      out += cell;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extension dispatch

enum class RasterFormat { pgm, csv };

inline RasterFormat raster_format(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".pgm") return RasterFormat::pgm;
  if (ext == ".csv") return RasterFormat::csv;
  throw ParameterError("unsupported raster extension '" + ext + "' (use .pgm or .csv)");
}

inline Image read_image(const std::filesystem::path& path) {
  const RasterFormat fmt = raster_format(path);
  const std::string buf = read_file(path);
  try {
    return fmt == RasterFormat::pgm ? parse_pgm(buf) : parse_image_csv(buf);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Returns the PGM scale (identity for CSV).
inline PgmScale write_image(const std::filesystem::path& path, const Image& img) {
  PgmScale sc;
  write_file_atomic(path, raster_format(path) == RasterFormat::pgm ? encode_pgm(img, &sc) : encode_csv(img));
  return sc;
}

// ---------------------------------------------------------------------------
// key = value configuration

using ConfigMap = std::map<std::string, std::string>;

/// One `key = value` per line; '#' starts a comment. Keys are unique.
inline ConfigMap parse_config(const std::string& text) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw FormatError("config line " + std::to_string(lineno) + ": empty key or value");
    if (!out.emplace(key, value).second)
      throw FormatError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

inline ConfigMap read_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

} // namespace cps
