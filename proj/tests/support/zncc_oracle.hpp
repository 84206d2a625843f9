#pragma once

#include <cmath>
#include <limits>

#include "hpshield/frame.hpp"

namespace oracle {

// Direct two-pass ZNCC of one window; NaN when the window or patch is flat.
inline double zncc(const hpshield::Frame& f, const hpshield::Frame& p, std::size_t r0, std::size_t c0) {
  const std::size_t h = p.height(), w = p.width();
  double fm = 0, pm = 0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      fm += f(r0 + r, c0 + c);
      pm += p(r, c);
    }
  }
  fm /= static_cast<double>(h * w);
  pm /= static_cast<double>(h * w);
  double num = 0, fv = 0, pv = 0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double a = f(r0 + r, c0 + c) - fm, b = p(r, c) - pm;
      num += a * b;
      fv += a * a;
      pv += b * b;
    }
  }
  if (fv < 1e-12 || pv < 1e-12) return std::numeric_limits<double>::quiet_NaN();
  return num / std::sqrt(fv * pv);
}

}  // namespace oracle
