#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fredholm/grid.hpp"

namespace fredholm {

/// FGRID container: ASCII magic "FGRID1\n", one UTF-8 header line
/// {"width":W,"height":H,"dtype":"f64le","origin":"center"}, then W*H
/// little-endian IEEE-754 doubles, row-major, top row first.
struct FgridError : std::runtime_error {
  enum class Kind {
    bad_magic,
    bad_header,
    dimension_overflow,
    truncated_payload,
    non_finite,
    io_failure,
  };
  Kind kind;
  FgridError(Kind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
};

ScalarField read_fgrid(const std::filesystem::path& path);

/// Deterministic: the same field always produces identical bytes.
void write_fgrid(const ScalarField& field, const std::filesystem::path& path);

/// 8-bit grayscale preview, min-max normalized. Presentation only.
void write_png_preview(const ScalarField& field,
                       const std::filesystem::path& path);

/// One CSV row per grid row, full decimal precision.
void write_csv(const ScalarField& field, const std::filesystem::path& path);

}  // namespace fredholm
