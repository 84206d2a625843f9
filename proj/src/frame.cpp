#include "hpshield/frame.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hpshield {

Frame::Frame(std::size_t height, std::size_t width, double fill) : height_(height), width_(width) {
  if (height == 0 || width == 0) throw std::invalid_argument("frame dimensions must be positive");
  data_.assign(height * width, fill);
}

void Frame::blit(const Frame& patch, std::ptrdiff_t row, std::ptrdiff_t col) {
  for (std::size_t r = 0; r < patch.height(); ++r) {
    std::ptrdiff_t fr = row + static_cast<std::ptrdiff_t>(r);
    if (fr < 0 || fr >= static_cast<std::ptrdiff_t>(height_)) continue;
    for (std::size_t c = 0; c < patch.width(); ++c) {
      std::ptrdiff_t fc = col + static_cast<std::ptrdiff_t>(c);
      if (fc < 0 || fc >= static_cast<std::ptrdiff_t>(width_)) continue;
      (*this)(static_cast<std::size_t>(fr), static_cast<std::size_t>(fc)) = patch(r, c);
    }
  }
}

void Frame::clip() {
  for (double& v : data_) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

Frame Frame::shifted(std::ptrdiff_t dr, std::ptrdiff_t dc) const {
  Frame out(height_, width_);
  out.blit(*this, dr, dc);
  return out;
}

void write_pgm(std::ostream& out, const Frame& f) {
  out << "P5\n" << f.width() << ' ' << f.height() << "\n255\n";
  std::string row(f.width(), '\0');
  for (std::size_t r = 0; r < f.height(); ++r) {
    for (std::size_t c = 0; c < f.width(); ++c) {
      double v = std::clamp(f(r, c), 0.0, 1.0);
      row[c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

namespace {

std::size_t read_header_number(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::size_t n = 0;
  if (!(in >> n)) throw std::runtime_error("malformed PGM header");
  return n;
}

}  // namespace

Frame read_pgm(std::istream& in) {
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw std::runtime_error("not a binary PGM (P5) image");
  std::size_t w = read_header_number(in);
  std::size_t h = read_header_number(in);
  std::size_t maxval = read_header_number(in);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) throw std::runtime_error("unsupported PGM dimensions or depth");
  in.get();  // single whitespace after maxval
  Frame f(h, w);
  std::string row(w, '\0');
  for (std::size_t r = 0; r < h; ++r) {
    if (!in.read(row.data(), static_cast<std::streamsize>(w))) throw std::runtime_error("truncated PGM data");
    for (std::size_t c = 0; c < w; ++c) {
      f(r, c) = static_cast<double>(static_cast<unsigned char>(row[c])) / static_cast<double>(maxval);
    }
  }
  return f;
}

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_pgm(in);
}

}  // namespace hpshield
