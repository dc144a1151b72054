#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dimtm/convolution.hpp"
#include "dimtm/image.hpp"

namespace dimtm {

namespace detail {

// Prefix sums with a zero border row/column, so any window sum is four
// lookups.
inline Array2D<double> integral_image(const Plane& p, bool squared) {
  Array2D<double> s(p.width() + 1, p.height() + 1, 0.0);
  for (int y = 0; y < p.height(); ++y) {
    double rowsum = 0.0;
    for (int x = 0; x < p.width(); ++x) {
      double v = p(y, x);
      rowsum += squared ? v * v : v;
      s(y + 1, x + 1) = s(y, x + 1) + rowsum;
    }
  }
  return s;
}

inline double window_sum(const Array2D<double>& s, int x0, int y0, int w, int h) {
  return s(y0 + h, x0 + w) - s(y0, x0 + w) - s(y0 + h, x0) + s(y0, x0);
}

constexpr double kZnccVarEps = 1e-12;

}  // namespace detail

/// Zero-mean normalized cross-correlation of `tpl` against every placement
/// in `img`, computed per channel and summed. The map is image-sized and
/// indexed by the placement's anchor pixel; placements where the template
/// would overhang the border score 0, as do zero-variance image patches.
/// Template channels with zero variance contribute 0; a template that is
/// constant in every channel is rejected.
inline Plane zncc_match(const Image& img_in, const Image& tpl_in,
                        Colorspace colorspace = Colorspace::HSV, const ConvPlan& plan = {}) {
  // A grayscale side forces the comparison into grayscale.
  bool gray = img_in.grayscale() || tpl_in.grayscale();
  Image img = convert_colorspace(img_in, gray ? Colorspace::Gray : colorspace);
  Image tpl = convert_colorspace(tpl_in, gray ? Colorspace::Gray : colorspace);

  const int m = tpl.width, n = tpl.height;
  if (m > img.width || n > img.height)
    throw std::invalid_argument("zncc_match: template larger than image");

  const double area = double(m) * n;
  const int cx = kernel_center(m), cy = kernel_center(n);

  struct ChannelData {
    Plane deviations;  // template minus its mean
    double norm = 0.0;
  };
  std::vector<ChannelData> prepared;
  bool any_variance = false;
  for (int c = 0; c < tpl.channel_count(); ++c) {
    ChannelData d{Plane(m, n), 0.0};
    double mean = tpl.channels[c].sum() / area;
    double norm2 = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < m; ++x) {
        double v = tpl.channels[c](y, x) - mean;
        d.deviations(y, x) = v;
        norm2 += v * v;
      }
    d.norm = std::sqrt(norm2);
    if (norm2 > detail::kZnccVarEps) any_variance = true;
    prepared.push_back(std::move(d));
  }
  if (!any_variance) throw std::invalid_argument("zncc_match: degenerate template");

  Plane map(img.width, img.height, 0.0);
  for (int c = 0; c < img.channel_count(); ++c) {
    const ChannelData& d = prepared[size_t(c)];
    if (d.norm * d.norm <= detail::kZnccVarEps) continue;
    Plane num = xcorr2_same(img.channels[size_t(c)], d.deviations, plan);
    Array2D<double> s1 = detail::integral_image(img.channels[size_t(c)], false);
    Array2D<double> s2 = detail::integral_image(img.channels[size_t(c)], true);
    for (int y = cy; y + (n - cy) <= img.height; ++y) {
      for (int x = cx; x + (m - cx) <= img.width; ++x) {
        double sum = detail::window_sum(s1, x - cx, y - cy, m, n);
        double sq = detail::window_sum(s2, x - cx, y - cy, m, n);
        double var_term = sq - sum * sum / area;
        if (var_term <= detail::kZnccVarEps) continue;
        map(y, x) += num(y, x) / (std::sqrt(var_term) * d.norm);
      }
    }
  }
  return map;
}

}  // namespace dimtm
