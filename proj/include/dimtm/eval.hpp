#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dimtm/array2d.hpp"
#include "dimtm/convolution.hpp"

namespace dimtm {

struct BoundingBox {
  int x = 0, y = 0;
  int w = 1, h = 1;

  bool valid() const { return w >= 1 && h >= 1; }
  long long area() const { return (long long)w * h; }
  bool contains_box(const BoundingBox& o) const {
    return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
  }
  bool operator==(const BoundingBox&) const = default;
};

/// Box of dims (w,h) whose anchor pixel (the same-size kernel center) sits
/// at (cx, cy). Inverse of box_anchor.
inline BoundingBox box_around(int cx, int cy, int w, int h) {
  return {cx - kernel_center(w), cy - kernel_center(h), w, h};
}

inline std::pair<int, int> box_anchor(const BoundingBox& b) {
  return {b.x + kernel_center(b.w), b.y + kernel_center(b.h)};
}

inline BoundingBox clip_box_inside(BoundingBox b, int img_w, int img_h) {
  b.x = std::clamp(b.x, 0, std::max(0, img_w - b.w));
  b.y = std::clamp(b.y, 0, std::max(0, img_h - b.h));
  return b;
}

inline long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
  long long iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  long long ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return iw > 0 && ih > 0 ? iw * ih : 0;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("iou: invalid box");
  long long inter = intersection_area(a, b);
  long long uni = a.area() + b.area() - inter;
  return double(inter) / double(uni);
}

inline bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
  return intersection_area(a, b) > 0;
}

struct Point2 {
  double x = 0, y = 0;
};

/// Plane projective transform acting on homogeneous pixel coordinates.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty) {
    Homography h;
    h.m = {1, 0, tx, 0, 1, ty, 0, 0, 1};
    return h;
  }
  static Homography scaling(double s) {
    Homography h;
    h.m = {s, 0, 0, 0, s, 0, 0, 0, 1};
    return h;
  }

  double det() const {
    const auto& a = m;
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }
  bool invertible() const { return std::abs(det()) > 1e-12; }

  Homography operator*(const Homography& o) const {
    Homography r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[size_t(3 * i + k)] * o.m[size_t(3 * k + j)];
        r.m[size_t(3 * i + j)] = s;
      }
    return r;
  }

  Homography inverse() const {
    double d = det();
    if (std::abs(d) <= 1e-12) throw std::invalid_argument("Homography: not invertible");
    const auto& a = m;
    Homography r;
    r.m = {(a[4] * a[8] - a[5] * a[7]) / d, (a[2] * a[7] - a[1] * a[8]) / d,
           (a[1] * a[5] - a[2] * a[4]) / d, (a[5] * a[6] - a[3] * a[8]) / d,
           (a[0] * a[8] - a[2] * a[6]) / d, (a[2] * a[3] - a[0] * a[5]) / d,
           (a[3] * a[7] - a[4] * a[6]) / d, (a[1] * a[6] - a[0] * a[7]) / d,
           (a[0] * a[4] - a[1] * a[3]) / d};
    return r;
  }
};

inline Point2 apply_homography(const Homography& h, const Point2& p) {
  double w = h.m[6] * p.x + h.m[7] * p.y + h.m[8];
  if (std::abs(w) < 1e-12) throw std::runtime_error("apply_homography: point at infinity");
  return {(h.m[0] * p.x + h.m[1] * p.y + h.m[2]) / w,
          (h.m[3] * p.x + h.m[4] * p.y + h.m[5]) / w};
}

/// Monotone curve samples plus a scalar summary. Success curves fill
/// `values` (fraction over threshold) and `auc`; precision/recall curves
/// fill `values` (recall), `values2` (precision) and `best_fscore`.
struct EvalCurve {
  std::vector<double> thresholds;
  std::vector<double> values;
  std::vector<double> values2;
  double auc = std::numeric_limits<double>::quiet_NaN();
  double best_fscore = std::numeric_limits<double>::quiet_NaN();
};

/// Fraction of IoU samples strictly exceeding each threshold on a uniform
/// [0,1] grid; AUC is the mean over the grid.
inline EvalCurve success_curve(const std::vector<double>& ious, int grid_points = 101) {
  if (ious.empty()) throw std::invalid_argument("success_curve: empty input");
  if (grid_points < 2) throw std::invalid_argument("success_curve: need >= 2 grid points");
  EvalCurve c;
  c.thresholds.resize(size_t(grid_points));
  c.values.resize(size_t(grid_points));
  double total = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double t = double(i) / (grid_points - 1);
    size_t hits = 0;
    for (double v : ious) hits += v > t;
    c.thresholds[size_t(i)] = t;
    c.values[size_t(i)] = double(hits) / double(ious.size());
    total += c.values[size_t(i)];
  }
  c.auc = total / grid_points;
  return c;
}

struct Peak {
  int x = 0, y = 0;
  double score = 0.0;
};

/// Strict local maxima over the 8-neighborhood (missing neighbors at the
/// border are ignored), sorted by descending score.
inline std::vector<Peak> local_maxima(const Plane& map) {
  std::vector<Peak> peaks;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      double v = map(y, x);
      bool maxima = true;
      for (int dy = -1; dy <= 1 && maxima; ++dy)
        for (int dx = -1; dx <= 1 && maxima; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = x + dx, ny = y + dy;
          if (!map.in_bounds(nx, ny)) continue;
          if (map(ny, nx) >= v) maxima = false;
        }
      if (maxima) peaks.push_back({x, y, v});
    }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });
  return peaks;
}

inline std::vector<Peak> top_k_peaks(const Plane& map, int k) {
  if (k < 1) throw std::invalid_argument("top_k_peaks: k >= 1");
  std::vector<Peak> peaks = local_maxima(map);
  if (int(peaks.size()) > k) peaks.resize(size_t(k));
  return peaks;
}

struct Detection {
  BoundingBox box;
  double score = 0.0;
};

/// Boxes of the given dims centered on local maxima that strictly exceed the
/// threshold, clipped to stay inside the map.
inline std::vector<Detection> detect_matches(const Plane& map, double threshold, int box_w,
                                             int box_h) {
  std::vector<Detection> out;
  for (const Peak& p : local_maxima(map)) {
    if (p.score <= threshold) continue;
    BoundingBox b = clip_box_inside(box_around(p.x, p.y, box_w, box_h), map.width(), map.height());
    out.push_back({b, p.score});
  }
  return out;
}

/// One evaluation unit: all detections of one template in one image plus the
/// (possibly empty) ground truth boxes for that pairing.
struct DetectionCase {
  std::vector<Detection> detections;
  std::vector<BoundingBox> ground_truth;
};

namespace detail {

struct PrCounts {
  long long tp = 0, fp = 0, fn = 0;
};

/// Greedy matching at one threshold: detections in descending score order
/// consume the best-IoU unclaimed ground truth; IoU below iou_min or an
/// already-claimed ground truth makes a false positive.
inline PrCounts pr_counts_at(const DetectionCase& c, double threshold, double iou_min) {
  PrCounts n;
  std::vector<bool> used(c.ground_truth.size(), false);
  std::vector<const Detection*> kept;
  for (const Detection& d : c.detections)
    if (d.score > threshold) kept.push_back(&d);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Detection* a, const Detection* b) { return a->score > b->score; });
  for (const Detection* d : kept) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < c.ground_truth.size(); ++g) {
      if (used[g]) continue;
      double v = iou(d->box, c.ground_truth[g]);
      if (v >= iou_min && v > best_iou) {
        best_iou = v;
        best = int(g);
      }
    }
    if (best >= 0) {
      used[size_t(best)] = true;
      ++n.tp;
    } else {
      ++n.fp;
    }
  }
  for (bool u : used)
    if (!u) ++n.fn;
  return n;
}

}  // namespace detail

/// Pooled precision-recall curve over a uniform threshold grid on
/// [0, max score]; f-score = 2TP/(2TP+FP+FN), summarized by its maximum.
inline EvalCurve pr_curve(const std::vector<DetectionCase>& cases, double iou_min = 0.5,
                          int grid_points = 101) {
  double max_score = 0.0;
  for (const DetectionCase& c : cases)
    for (const Detection& d : c.detections) max_score = std::max(max_score, d.score);
  if (max_score <= 0.0) max_score = 1.0;  // keep the grid strictly increasing
  EvalCurve curve;
  curve.best_fscore = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double t = max_score * double(i) / (grid_points - 1);
    detail::PrCounts total;
    for (const DetectionCase& c : cases) {
      detail::PrCounts n = detail::pr_counts_at(c, t, iou_min);
      total.tp += n.tp;
      total.fp += n.fp;
      total.fn += n.fn;
    }
    double denom_p = double(total.tp + total.fp);
    double denom_r = double(total.tp + total.fn);
    double precision = denom_p > 0 ? total.tp / denom_p : 1.0;
    double recall = denom_r > 0 ? total.tp / denom_r : 0.0;
    double f = (2.0 * total.tp + total.fp + total.fn) > 0
                   ? 2.0 * total.tp / (2.0 * total.tp + total.fp + total.fn)
                   : 0.0;
    curve.thresholds.push_back(t);
    curve.values.push_back(recall);
    curve.values2.push_back(precision);
    curve.best_fscore = std::max(curve.best_fscore, f);
  }
  return curve;
}

}  // namespace dimtm
