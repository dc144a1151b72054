#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "dimtm/image.hpp"

namespace dimtm {

/// One polyline for render_plot, in data coordinates.
struct PlotSeries {
  std::vector<double> x, y;
  double r = 0.0, g = 0.0, b = 0.0;
};

namespace detail {

// 3x5 glyphs for axis tick labels, row-major bits.
inline const uint16_t* tiny_glyph(char c) {
  static const uint16_t digits[10][5] = {
      {0b111, 0b101, 0b101, 0b101, 0b111}, {0b010, 0b110, 0b010, 0b010, 0b111},
      {0b111, 0b001, 0b111, 0b100, 0b111}, {0b111, 0b001, 0b011, 0b001, 0b111},
      {0b101, 0b101, 0b111, 0b001, 0b001}, {0b111, 0b100, 0b111, 0b001, 0b111},
      {0b111, 0b100, 0b111, 0b101, 0b111}, {0b111, 0b001, 0b010, 0b010, 0b010},
      {0b111, 0b101, 0b111, 0b101, 0b111}, {0b111, 0b101, 0b111, 0b001, 0b111}};
  static const uint16_t dot[5] = {0, 0, 0, 0, 0b010};
  static const uint16_t dash[5] = {0, 0, 0b111, 0, 0};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c == '.') return dot;
  if (c == '-') return dash;
  return nullptr;
}

inline void draw_tiny_text(Image& img, int x, int y, const std::string& text) {
  for (char c : text) {
    const uint16_t* glyph = tiny_glyph(c);
    if (glyph) {
      for (int ry = 0; ry < 5; ++ry)
        for (int rx = 0; rx < 3; ++rx)
          if (glyph[ry] & (1 << (2 - rx))) {
            int px = x + rx, py = y + ry;
            if (px >= 0 && py >= 0 && px < img.width && py < img.height)
              for (Plane& ch : img.channels) ch(py, px) = 0.0;
          }
    }
    x += 4;
  }
}

inline void draw_line(Image& img, double x0, double y0, double x1, double y1, double r, double g,
                      double b) {
  double dx = x1 - x0, dy = y1 - y0;
  int steps = std::max(1, int(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
  for (int i = 0; i <= steps; ++i) {
    int px = int(std::lround(x0 + dx * i / steps));
    int py = int(std::lround(y0 + dy * i / steps));
    if (px < 0 || py < 0 || px >= img.width || py >= img.height) continue;
    img.channels[0](py, px) = r;
    img.channels[1](py, px) = g;
    img.channels[2](py, px) = b;
  }
}

}  // namespace detail

/// Renders polylines into a framed plot with 0.1-step gridlines and numeric
/// tick labels. Ranges default to the data's bounding box expanded to [0,1]
/// when it fits.
inline Image render_plot(std::span<const PlotSeries> series, int width = 640, int height = 480) {
  Image img(width, height, 3, 1.0);
  const int ml = 34, mr = 10, mt = 10, mb = 22;  // margins
  const int x0 = ml, x1 = width - mr, y0 = mt, y1 = height - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  for (const PlotSeries& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmax = std::max(xmax, s.x[i]);
      ymax = std::max(ymax, s.y[i]);
    }

  auto sx = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * (x1 - x0); };
  auto sy = [&](double v) { return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0); };

  for (int i = 0; i <= 10; ++i) {
    double fx = xmin + (xmax - xmin) * i / 10.0;
    double fy = ymin + (ymax - ymin) * i / 10.0;
    detail::draw_line(img, sx(fx), y0, sx(fx), y1, 0.85, 0.85, 0.85);
    detail::draw_line(img, x0, sy(fy), x1, sy(fy), 0.85, 0.85, 0.85);
    char label[16];
    std::snprintf(label, sizeof label, "%.2g", fx);
    if (i % 2 == 0) detail::draw_tiny_text(img, int(sx(fx)) - 6, y1 + 6, label);
    std::snprintf(label, sizeof label, "%.2g", fy);
    if (i % 2 == 0) detail::draw_tiny_text(img, 4, int(sy(fy)) - 2, label);
  }
  detail::draw_line(img, x0, y0, x0, y1, 0, 0, 0);
  detail::draw_line(img, x0, y1, x1, y1, 0, 0, 0);

  for (const PlotSeries& s : series)
    for (size_t i = 1; i < s.x.size(); ++i)
      detail::draw_line(img, sx(s.x[i - 1]), sy(s.y[i - 1]), sx(s.x[i]), sy(s.y[i]), s.r, s.g,
                        s.b);
  return img;
}

}  // namespace dimtm
