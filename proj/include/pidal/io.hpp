#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "pidal/image.hpp"

namespace pidal {

/// File-system or format failure while reading/writing images.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PgmEncoding { ascii, binary };  // P2, P5

/// Reads P2 or P5 (8- or 16-bit) graymaps; '#' comments are skipped.
Image read_pgm(const std::filesystem::path& path);

/// Pixels are rounded to the nearest integer and clamped to [0, 65535].
/// maxval is 255 when every rounded pixel fits in a byte, else 65535.
void write_pgm(const std::filesystem::path& path, const Image& img,
               PgmEncoding encoding = PgmEncoding::binary);

/// Float matrix CSV: first line "rows,cols", then one comma-separated row per
/// line. Values are written with 17 significant digits so they round-trip.
Image read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Image& img);

/// Dispatches on extension: .pgm -> PGM, anything else -> CSV matrix.
Image read_image(const std::filesystem::path& path);

/// Shortest-exact decimal form used by every CSV writer in the project.
std::string format_real(double v);

}  // namespace pidal
