#include "fredholm/grid_io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

#include <png.h>

#include <nlohmann/json.hpp>

namespace fredholm {
namespace {

constexpr char kMagic[] = "FGRID1\n";
constexpr std::size_t kMagicLen = 7;
constexpr std::int64_t kMaxDim = 1'000'000;
constexpr std::int64_t kMaxPixels = std::int64_t{1} << 28;

std::uint64_t to_le_bits(double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0x00000000000000ffULL) << 56) |
           ((bits & 0x000000000000ff00ULL) << 40) |
           ((bits & 0x0000000000ff0000ULL) << 24) |
           ((bits & 0x00000000ff000000ULL) << 8) |
           ((bits & 0x000000ff00000000ULL) >> 8) |
           ((bits & 0x0000ff0000000000ULL) >> 24) |
           ((bits & 0x00ff000000000000ULL) >> 40) |
           ((bits & 0xff00000000000000ULL) >> 56);
  }
  return bits;
}

double from_le_bits(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return std::bit_cast<double>(to_le_bits(std::bit_cast<double>(bits)));
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

ScalarField read_fgrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FgridError(FgridError::Kind::io_failure,
                     "cannot open " + path.string());
  }
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (in.gcount() != static_cast<std::streamsize>(kMagicLen) ||
      !std::equal(magic, magic + kMagicLen, kMagic)) {
    throw FgridError(FgridError::Kind::bad_magic,
                     path.string() + ": not an FGRID file");
  }
  std::string header;
  if (!std::getline(in, header) || header.size() > 4096) {
    throw FgridError(FgridError::Kind::bad_header,
                     path.string() + ": missing header line");
  }
  std::int64_t width = 0;
  std::int64_t height = 0;
  try {
    const auto j = nlohmann::json::parse(header);
    width = j.at("width").get<std::int64_t>();
    height = j.at("height").get<std::int64_t>();
    if (j.at("dtype").get<std::string>() != "f64le" ||
        j.at("origin").get<std::string>() != "center") {
      throw FgridError(FgridError::Kind::bad_header,
                       path.string() + ": unsupported dtype or origin");
    }
  } catch (const FgridError&) {
    throw;
  } catch (const std::exception& e) {
    throw FgridError(FgridError::Kind::bad_header,
                     path.string() + ": malformed header: " + e.what());
  }
  if (width < 1 || height < 1 || width > kMaxDim || height > kMaxDim ||
      width * height > kMaxPixels) {
    throw FgridError(FgridError::Kind::dimension_overflow,
                     path.string() + ": dimensions " + std::to_string(width) +
                         "x" + std::to_string(height) + " out of range");
  }

  ScalarField field(static_cast<int>(width), static_cast<int>(height));
  const std::size_t payload = field.size() * sizeof(double);
  std::vector<std::uint64_t> raw(field.size());
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(payload));
  if (in.gcount() != static_cast<std::streamsize>(payload)) {
    throw FgridError(FgridError::Kind::truncated_payload,
                     path.string() + ": payload truncated (" +
                         std::to_string(in.gcount()) + " of " +
                         std::to_string(payload) + " bytes)");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    field.data[i] = from_le_bits(raw[i]);
  }
  if (!field.all_finite()) {
    throw FgridError(FgridError::Kind::non_finite,
                     path.string() + ": payload contains non-finite values");
  }
  return field;
}

void write_fgrid(const ScalarField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FgridError(FgridError::Kind::io_failure,
                     "cannot open " + path.string() + " for writing");
  }
  char header[128];
  const int n = std::snprintf(
      header, sizeof(header),
      "{\"width\":%d,\"height\":%d,\"dtype\":\"f64le\",\"origin\":\"center\"}\n",
      field.width, field.height);
  out.write(kMagic, kMagicLen);
  out.write(header, n);
  std::vector<std::uint64_t> raw(field.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = to_le_bits(field.data[i]);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!out) {
    throw FgridError(FgridError::Kind::io_failure,
                     "write failed for " + path.string());
  }
}

void write_png_preview(const ScalarField& field,
                       const std::filesystem::path& path) {
  const auto [lo_it, hi_it] =
      std::minmax_element(field.data.begin(), field.data.end());
  const double lo = field.data.empty() ? 0.0 : *lo_it;
  const double hi = field.data.empty() ? 0.0 : *hi_it;
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) {
    throw FgridError(FgridError::Kind::io_failure,
                     "cannot open " + path.string() + " for writing");
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw FgridError(FgridError::Kind::io_failure,
                     "png encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(field.width),
               static_cast<png_uint_32>(field.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(field.width));
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      row[c] = static_cast<png_byte>(
          std::lround((field.at(r, c) - lo) * scale));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void write_csv(const ScalarField& field, const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) {
    throw FgridError(FgridError::Kind::io_failure,
                     "cannot open " + path.string() + " for writing");
  }
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      std::fprintf(fp, c + 1 < field.width ? "%.17g," : "%.17g",
                   field.at(r, c));
    }
    std::fputc('\n', fp);
  }
  if (std::fclose(fp) != 0) {
    throw FgridError(FgridError::Kind::io_failure,
                     "write failed for " + path.string());
  }
}

}  // namespace fredholm
