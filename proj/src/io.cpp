#include "pidal/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <vector>

namespace pidal {

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Cursor over a PGM header: whitespace and '#' comments separate tokens.
class PgmHeader {
 public:
  PgmHeader(const std::string& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}

  std::string token() {
    skip();
    std::size_t start = pos_;
    while (pos_ < buf_.size() && !std::isspace(static_cast<unsigned char>(buf_[pos_])) &&
           buf_[pos_] != '#') {
      ++pos_;
    }
    if (start == pos_) fail("truncated header");
    return buf_.substr(start, pos_ - start);
  }

  long number() {
    const std::string t = token();
    long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 0) fail("bad integer '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates maxval from binary raster data.
  std::size_t raster_start() {
    if (pos_ >= buf_.size() || !std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
      fail("missing raster separator");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError("PGM '" + path_.string() + "': " + msg);
  }

 private:
  void skip() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  const std::string buf = read_all(path);
  PgmHeader header(buf, path);
  const std::string magic = header.token();
  if (magic != "P2" && magic != "P5") header.fail("unsupported magic '" + magic + "'");
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (width <= 0 || height <= 0) header.fail("empty image");
  if (maxval <= 0 || maxval > 65535) header.fail("maxval out of range");

  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  Image img(h, w);
  if (magic == "P2") {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const long v = header.number();
      if (v > maxval) header.fail("sample exceeds maxval");
      img[i] = static_cast<double>(v);
    }
    return img;
  }

  const std::size_t start = header.raster_start();
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  if (buf.size() < start + img.size() * bytes_per) header.fail("truncated raster");
  const auto* raster = reinterpret_cast<const unsigned char*>(buf.data() + start);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned v = bytes_per == 1 ? raster[i] : (raster[2 * i] << 8u) | raster[2 * i + 1];
    img[i] = static_cast<double>(v);
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& img, PgmEncoding encoding) {
  if (img.empty()) throw IoError("write_pgm: empty image");
  std::vector<unsigned> samples(img.size());
  unsigned peak = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::isfinite(img[i]) ? std::round(img[i]) : 0.0;
    samples[i] = static_cast<unsigned>(std::clamp(v, 0.0, 65535.0));
    peak = std::max(peak, samples[i]);
  }
  const unsigned maxval = peak <= 255 ? 255 : 65535;

  auto out = open_for_write(path);
  out << (encoding == PgmEncoding::ascii ? "P2" : "P5") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << maxval << '\n';
  if (encoding == PgmEncoding::ascii) {
    for (std::size_t r = 0; r < img.height(); ++r) {
      for (std::size_t c = 0; c < img.width(); ++c) {
        out << samples[r * img.width() + c] << (c + 1 == img.width() ? '\n' : ' ');
      }
    }
  } else if (maxval == 255) {
    for (unsigned s : samples) out.put(static_cast<char>(s));
  } else {
    for (unsigned s : samples) {
      out.put(static_cast<char>(s >> 8u));
      out.put(static_cast<char>(s & 0xFFu));
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Image read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  auto fail = [&](const std::string& msg) -> IoError {
    return IoError("CSV '" + path.string() + "': " + msg);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail("missing header");
  std::size_t rows = 0;
  std::size_t cols = 0;
  {
    char comma = 0;
    std::istringstream hs(line);
    if (!(hs >> rows >> comma >> cols) || comma != ',' || rows == 0 || cols == 0) {
      throw fail("header must be 'rows,cols'");
    }
  }

  Image img(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw fail("expected " + std::to_string(rows) + " rows");
    std::size_t c = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string field = line.substr(pos, end - pos);
      if (c >= cols) throw fail("row " + std::to_string(r) + " has too many columns");
      try {
        std::size_t used = 0;
        img(r, c) = std::stod(field, &used);
        while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw fail("bad number '" + field + "' at row " + std::to_string(r));
      }
      ++c;
      pos = end + 1;
    }
    if (c != cols) throw fail("row " + std::to_string(r) + " has " + std::to_string(c) + " columns");
  }
  return img;
}

void write_csv_matrix(const std::filesystem::path& path, const Image& img) {
  auto out = open_for_write(path);
  out << img.height() << ',' << img.width() << '\n';
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      if (c) out << ',';
      out << format_real(img(r, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Image read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".pgm" ? read_pgm(path) : read_csv_matrix(path);
}

}  // namespace pidal
