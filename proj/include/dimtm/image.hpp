#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimtm/array2d.hpp"

namespace dimtm {

/// Multi-channel float image, values in [0,1]. One channel for grayscale,
/// three for color. 3-channel data is interpreted as RGB unless produced by
/// convert_colorspace.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Plane> channels;

  Image() = default;
  Image(int w, int h, int ch, double fill = 0.0) : width(w), height(h) {
    if (ch != 1 && ch != 3) throw std::invalid_argument("Image: channels must be 1 or 3");
    channels.assign(ch, Plane(w, h, fill));
  }

  int channel_count() const { return int(channels.size()); }
  bool grayscale() const { return channels.size() == 1; }
};

enum class Colorspace { Gray, CIELab, HSV, RGB };

namespace detail {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline void rgb_to_lab(double r, double g, double b, double& L, double& A, double& B) {
  r = srgb_to_linear(r);
  g = srgb_to_linear(g);
  b = srgb_to_linear(b);
  // D65 white point
  double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  auto f = [](double t) {
    constexpr double d3 = (6.0 / 29) * (6.0 / 29) * (6.0 / 29);
    return t > d3 ? std::cbrt(t) : t / (3.0 * (6.0 / 29) * (6.0 / 29)) + 4.0 / 29;
  };
  double fx = f(x), fy = f(y), fz = f(z);
  L = 116.0 * fy - 16.0;
  A = 500.0 * (fx - fy);
  B = 200.0 * (fy - fz);
}

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double maxc = std::max({r, g, b});
  double minc = std::min({r, g, b});
  double d = maxc - minc;
  v = maxc;
  s = maxc > 0.0 ? d / maxc : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (maxc == r)
    h = (g - b) / d;
  else if (maxc == g)
    h = 2.0 + (b - r) / d;
  else
    h = 4.0 + (r - g) / d;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

}  // namespace detail

/// Converts a [0,1] RGB (or grayscale) image to the target space, rescaling
/// CIELab to [0,1]: L/100, (a+128)/255, (b+128)/255. HSV hue is stored as
/// a [0,1) fraction of the circle.
inline Image convert_colorspace(const Image& img, Colorspace target) {
  if (img.grayscale()) {
    if (target != Colorspace::Gray)
      throw std::invalid_argument("convert_colorspace: grayscale source");
    return img;
  }
  if (target == Colorspace::RGB) return img;

  const Plane& r = img.channels[0];
  const Plane& g = img.channels[1];
  const Plane& b = img.channels[2];
  Image out(img.width, img.height, target == Colorspace::Gray ? 1 : 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double R = r(y, x), G = g(y, x), B = b(y, x);
      switch (target) {
        case Colorspace::Gray:
          out.channels[0](y, x) = 0.299 * R + 0.587 * G + 0.114 * B;
          break;
        case Colorspace::HSV: {
          double h, s, v;
          detail::rgb_to_hsv(R, G, B, h, s, v);
          out.channels[0](y, x) = h;
          out.channels[1](y, x) = s;
          out.channels[2](y, x) = v;
          break;
        }
        case Colorspace::CIELab: {
          double L, A, Bb;
          detail::rgb_to_lab(R, G, B, L, A, Bb);
          out.channels[0](y, x) = L / 100.0;
          out.channels[1](y, x) = (A + 128.0) / 255.0;
          out.channels[2](y, x) = (Bb + 128.0) / 255.0;
          break;
        }
        case Colorspace::RGB:
          break;
      }
    }
  }
  return out;
}

/// Rescales by `scale` (area average when shrinking, bilinear when
/// enlarging). Output dims are rounded, at least 1.
inline Image resize(const Image& img, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("resize: scale must be positive");
  int ow = std::max(1, int(std::lround(img.width * scale)));
  int oh = std::max(1, int(std::lround(img.height * scale)));
  Image out(ow, oh, img.channel_count());
  double sx = double(img.width) / ow;
  double sy = double(img.height) / oh;
  bool shrink = scale < 1.0;
  for (int c = 0; c < img.channel_count(); ++c) {
    const Plane& src = img.channels[c];
    Plane& dst = out.channels[c];
    if (shrink) {
      for (int y = 0; y < oh; ++y) {
        double y0 = y * sy, y1 = (y + 1) * sy;
        for (int x = 0; x < ow; ++x) {
          double x0 = x * sx, x1 = (x + 1) * sx;
          double acc = 0.0;
          for (int yy = int(std::floor(y0)); yy < int(std::ceil(y1)); ++yy) {
            double wy = std::min(y1, double(yy + 1)) - std::max(y0, double(yy));
            if (wy <= 0.0) continue;
            for (int xx = int(std::floor(x0)); xx < int(std::ceil(x1)); ++xx) {
              double wx = std::min(x1, double(xx + 1)) - std::max(x0, double(xx));
              if (wx <= 0.0) continue;
              acc += wx * wy *
                     src(std::min(yy, img.height - 1), std::min(xx, img.width - 1));
            }
          }
          dst(y, x) = acc / (sx * sy);
        }
      }
    } else {
      for (int y = 0; y < oh; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int iy = int(std::floor(fy));
        double ty = fy - iy;
        int y0c = std::clamp(iy, 0, img.height - 1);
        int y1c = std::clamp(iy + 1, 0, img.height - 1);
        for (int x = 0; x < ow; ++x) {
          double fx = (x + 0.5) * sx - 0.5;
          int ix = int(std::floor(fx));
          double tx = fx - ix;
          int x0c = std::clamp(ix, 0, img.width - 1);
          int x1c = std::clamp(ix + 1, 0, img.width - 1);
          dst(y, x) = (1 - ty) * ((1 - tx) * src(y0c, x0c) + tx * src(y0c, x1c)) +
                      ty * ((1 - tx) * src(y1c, x0c) + tx * src(y1c, x1c));
        }
      }
    }
  }
  return out;
}

/// Min-max scales an arbitrary plane into a [0,1] grayscale image; flat
/// planes map to zero.
inline Image heatmap_image(const Plane& map) {
  Image out(map.width(), map.height(), 1);
  double lo = map.min_value(), hi = map.max_value();
  double span = hi - lo;
  if (span <= 0.0) return out;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out.channels[0](y, x) = (map(y, x) - lo) / span;
  return out;
}

inline void draw_rect(Image& img, int bx, int by, int bw, int bh, double r, double g, double b,
                      int thickness = 2) {
  if (img.grayscale()) {
    Image color(img.width, img.height, 3);
    color.channels[0] = img.channels[0];
    color.channels[1] = img.channels[0];
    color.channels[2] = img.channels[0];
    img = std::move(color);
  }
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    img.channels[0](y, x) = r;
    img.channels[1](y, x) = g;
    img.channels[2](y, x) = b;
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = bx - t; x < bx + bw + t; ++x) {
      put(x, by - t);
      put(x, by + bh - 1 + t);
    }
    for (int y = by - t; y < by + bh + t; ++y) {
      put(bx - t, y);
      put(bx + bw - 1 + t, y);
    }
  }
}

}  // namespace dimtm
