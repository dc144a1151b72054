#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dimtm/image.hpp"

namespace dimtm {

namespace detail {

/// Symmetric reflection with repeated border pixel, folding as often as
/// needed: [a b c] extends to ... b a | a b c | c b ...
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace detail

/// Pads with mirror reflections of the border pixels (edge pixel included in
/// the reflection). Pad amounts may not exceed the corresponding dimension.
inline Plane mirror_pad(const Plane& p, int left, int right, int top, int bottom) {
  if (left < 0 || right < 0 || top < 0 || bottom < 0)
    throw std::invalid_argument("mirror_pad: negative pad");
  if (left > p.width() || right > p.width() || top > p.height() || bottom > p.height())
    throw std::invalid_argument("mirror_pad: pad too large");
  Plane out(p.width() + left + right, p.height() + top + bottom);
  for (int y = 0; y < out.height(); ++y) {
    int sy = detail::reflect_index(y - top, p.height());
    for (int x = 0; x < out.width(); ++x)
      out(y, x) = p(sy, detail::reflect_index(x - left, p.width()));
  }
  return out;
}

inline Image mirror_pad(const Image& img, int left, int right, int top, int bottom) {
  Image out;
  out.width = img.width + left + right;
  out.height = img.height + top + bottom;
  for (const Plane& c : img.channels) out.channels.push_back(mirror_pad(c, left, right, top, bottom));
  return out;
}

/// Truncated circular-symmetric Gaussian; the 1D kernel is renormalized to
/// sum to one after truncation.
struct GaussianSpec {
  double sigma = 1.0;
  int radius = 1;

  static GaussianSpec from_sigma(double sigma) {
    return {sigma, std::max(1, int(std::ceil(3.0 * sigma)))};
  }
};

inline std::vector<double> gaussian_kernel(const GaussianSpec& spec) {
  if (spec.sigma <= 0.0 || spec.radius < 1)
    throw std::invalid_argument("gaussian_kernel: need sigma > 0 and radius >= 1");
  std::vector<double> k(size_t(2 * spec.radius + 1));
  double sum = 0.0;
  for (int i = -spec.radius; i <= spec.radius; ++i) {
    double v = std::exp(-(double(i) * i) / (2.0 * spec.sigma * spec.sigma));
    k[size_t(i + spec.radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable same-size blur; borders are handled by symmetric reflection so
/// constant inputs are preserved exactly up to rounding.
inline Plane gaussian_blur(const Plane& p, const GaussianSpec& spec) {
  const std::vector<double> k = gaussian_kernel(spec);
  const int r = spec.radius;
  Plane tmp(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    const double* src = p.row(y);
    for (int x = 0; x < p.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[size_t(i + r)] * src[detail::reflect_index(x + i, p.width())];
      tmp(y, x) = acc;
    }
  }
  Plane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[size_t(i + r)] * tmp(detail::reflect_index(y + i, p.height()), x);
      out(y, x) = acc;
    }
  return out;
}

inline Image gaussian_blur(const Image& img, const GaussianSpec& spec) {
  Image out;
  out.width = img.width;
  out.height = img.height;
  for (const Plane& c : img.channels) out.channels.push_back(gaussian_blur(c, spec));
  return out;
}

struct PadGeometry {
  int left = 0, right = 0, top = 0, bottom = 0;
  bool any() const { return left || right || top || bottom; }
};

/// Non-negative opponent-channel stack: pairs of planes holding the
/// rectified positive and negative parts of the local-contrast signal, plus
/// the padding applied before filtering.
struct ChannelStack {
  std::vector<Plane> planes;
  PadGeometry pad;

  int k() const { return int(planes.size()); }
  int width() const { return planes.empty() ? 0 : planes[0].width(); }
  int height() const { return planes.empty() ? 0 : planes[0].height(); }
};

/// Turns an image into the matcher input: mirror-pad by the template extent,
/// estimate local mean with a Gaussian of sigma = 0.5*min(tpl_w, tpl_h)
/// (scaled by sigma_scale), take twice the deviation from that mean, and
/// split each channel into ON/OFF half-wave rectified planes. The returned
/// stack stays padded; crop happens after matching.
inline ChannelStack preprocess(const Image& img, int tpl_w, int tpl_h,
                               double sigma_scale = 1.0) {
  if (tpl_w < 1 || tpl_h < 1) throw std::invalid_argument("preprocess: template dims >= 1");
  ChannelStack stack;
  stack.pad = {tpl_w, tpl_w, tpl_h, tpl_h};
  double sigma = 0.5 * std::min(tpl_w, tpl_h) * sigma_scale;
  GaussianSpec spec = GaussianSpec::from_sigma(sigma);
  for (const Plane& c : img.channels) {
    Plane padded = mirror_pad(c, tpl_w, tpl_w, tpl_h, tpl_h);
    Plane mean = gaussian_blur(padded, spec);
    Plane on(padded.width(), padded.height());
    Plane off(padded.width(), padded.height());
    for (int y = 0; y < padded.height(); ++y)
      for (int x = 0; x < padded.width(); ++x) {
        double v = 2.0 * (padded(y, x) - mean(y, x));
        on(y, x) = v > 0.0 ? v : 0.0;
        off(y, x) = v < 0.0 ? -v : 0.0;
      }
    stack.planes.push_back(std::move(on));
    stack.planes.push_back(std::move(off));
  }
  return stack;
}

}  // namespace dimtm
