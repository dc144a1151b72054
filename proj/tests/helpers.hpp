#pragma once

// Test-only oracles and generators. The naive reference implementations here
// stay independent of the library's fast paths on purpose.

#include <random>

#include "dimtm/array2d.hpp"
#include "dimtm/image.hpp"

namespace testutil {

using dimtm::Image;
using dimtm::Plane;

inline Plane random_plane(std::mt19937_64& rng, int w, int h, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Plane p(w, h);
  for (double& v : p) v = d(rng);
  return p;
}

inline Image random_image(std::mt19937_64& rng, int w, int h, int ch) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(w, h, ch);
  for (Plane& c : img.channels)
    for (double& v : c) v = d(rng);
  return img;
}

/// Reference same-size cross-correlation by direct quadruple loop.
inline Plane naive_xcorr_same(const Plane& p, const Plane& k) {
  const int cy = (k.height() - 1) / 2, cx = (k.width() - 1) / 2;
  Plane out(p.width(), p.height(), 0.0);
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      double acc = 0.0;
      for (int v = 0; v < k.height(); ++v)
        for (int u = 0; u < k.width(); ++u) {
          int sy = y + v - cy, sx = x + u - cx;
          if (sy < 0 || sx < 0 || sy >= p.height() || sx >= p.width()) continue;
          acc += k(v, u) * p(sy, sx);
        }
      out(y, x) = acc;
    }
  return out;
}

inline Plane naive_conv_same(const Plane& p, const Plane& k) {
  Plane r(k.width(), k.height());
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x)
      r(y, x) = k(k.height() - 1 - y, k.width() - 1 - x);
  return naive_xcorr_same(p, r);
}

/// Reference per-channel ZNCC summed over channels; both inputs taken as-is
/// (no colorspace conversion). Zero-variance patches and template channels
/// contribute zero.
inline Plane naive_zncc(const Image& img, const Image& tpl) {
  const int m = tpl.width, n = tpl.height;
  const int cx = (m - 1) / 2, cy = (n - 1) / 2;
  const double area = double(m) * n;
  Plane map(img.width, img.height, 0.0);
  for (int c = 0; c < img.channel_count(); ++c) {
    double tmean = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < m; ++x) tmean += tpl.channels[size_t(c)](y, x);
    tmean /= area;
    double tnorm2 = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < m; ++x) {
        double d = tpl.channels[size_t(c)](y, x) - tmean;
        tnorm2 += d * d;
      }
    if (tnorm2 <= 1e-12) continue;
    for (int py = cy; py + (n - cy) <= img.height; ++py)
      for (int px = cx; px + (m - cx) <= img.width; ++px) {
        double pmean = 0.0;
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < m; ++x)
            pmean += img.channels[size_t(c)](py - cy + y, px - cx + x);
        pmean /= area;
        double num = 0.0, pnorm2 = 0.0;
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < m; ++x) {
            double pd = img.channels[size_t(c)](py - cy + y, px - cx + x) - pmean;
            double td = tpl.channels[size_t(c)](y, x) - tmean;
            num += pd * td;
            pnorm2 += pd * pd;
          }
        if (pnorm2 <= 1e-12) continue;
        map(py, px) += num / std::sqrt(pnorm2 * tnorm2);
      }
  }
  return map;
}

inline double max_abs_diff(const Plane& a, const Plane& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double max_abs(const Plane& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testutil
