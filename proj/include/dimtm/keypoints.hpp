#pragma once

#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dimtm/eval.hpp"
#include "dimtm/filtering.hpp"
#include "dimtm/image.hpp"
#include "dimtm/zncc.hpp"

namespace dimtm {

struct Keypoint {
  int x = 0, y = 0;
  double response = 0.0;
};

struct HarrisParams {
  double kappa = 0.04;
  double tensor_sigma = 1.5;
  int nms_radius = 1;
};

namespace detail {

inline void sobel_gradients(const Plane& p, Plane& gx, Plane& gy) {
  const int w = p.width(), h = p.height();
  gx = Plane(w, h);
  gy = Plane(w, h);
  auto at = [&](int y, int x) { return p(reflect_index(y, h), reflect_index(x, w)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gx(y, x) = at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1) -
                 at(y - 1, x - 1) - 2 * at(y, x - 1) - at(y + 1, x - 1);
      gy(y, x) = at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1) -
                 at(y - 1, x - 1) - 2 * at(y - 1, x) - at(y - 1, x + 1);
    }
}

}  // namespace detail

/// Harris corner response: det(M) - kappa*trace(M)^2 on the Gaussian-smoothed
/// structure tensor of Sobel gradients.
inline Plane harris_response(const Image& img, const HarrisParams& params = {}) {
  Image gray = img.grayscale() ? img : convert_colorspace(img, Colorspace::Gray);
  Plane gx, gy;
  detail::sobel_gradients(gray.channels[0], gx, gy);
  const int w = gray.width, h = gray.height;
  Plane xx(w, h), yy(w, h), xy(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      xx(y, x) = gx(y, x) * gx(y, x);
      yy(y, x) = gy(y, x) * gy(y, x);
      xy(y, x) = gx(y, x) * gy(y, x);
    }
  GaussianSpec spec = GaussianSpec::from_sigma(params.tensor_sigma);
  xx = gaussian_blur(xx, spec);
  yy = gaussian_blur(yy, spec);
  xy = gaussian_blur(xy, spec);
  Plane r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double det = xx(y, x) * yy(y, x) - xy(y, x) * xy(y, x);
      double tr = xx(y, x) + yy(y, x);
      r(y, x) = det - params.kappa * tr * tr;
    }
  return r;
}

/// All positive local maxima of the Harris response, strongest first.
/// Response plateaus (exact ties happen on synthetic patterns) keep their
/// first pixel in scan order so every corner yields exactly one keypoint.
inline std::vector<Keypoint> harris_corners(const Image& img, const HarrisParams& params = {}) {
  Plane r = harris_response(img, params);
  std::vector<Keypoint> out;
  const int rad = std::max(1, params.nms_radius);
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      double v = r(y, x);
      if (v <= 0.0) continue;
      bool maxima = true;
      for (int dy = -rad; dy <= rad && maxima; ++dy)
        for (int dx = -rad; dx <= rad && maxima; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = x + dx, ny = y + dy;
          if (!r.in_bounds(nx, ny)) continue;
          double nv = r(ny, nx);
          bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (nv > v || (nv == v && earlier)) maxima = false;
        }
      if (maxima) out.push_back({x, y, v});
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  return out;
}

struct KeypointPick {
  std::vector<Keypoint> points;
  bool complete = true;  // false when fewer than the requested count exist
};

/// Picks up to `count` corners greedily by descending response, skipping any
/// candidate closer than min_manhattan to an accepted one.
inline KeypointPick harris_detect(const Image& img, int count, int min_manhattan,
                                  const HarrisParams& params = {}) {
  KeypointPick pick;
  for (const Keypoint& kp : harris_corners(img, params)) {
    if (int(pick.points.size()) >= count) break;
    bool ok = true;
    for (const Keypoint& a : pick.points)
      if (std::abs(kp.x - a.x) + std::abs(kp.y - a.y) < min_manhattan) {
        ok = false;
        break;
      }
    if (ok) pick.points.push_back(kp);
  }
  pick.complete = int(pick.points.size()) >= count;
  return pick;
}

/// One query view a keypoint's template must land inside: image dims plus
/// the homography that maps reference-image pixels into it.
struct MappedTarget {
  int width = 0, height = 0;
  Homography h;
};

/// Keypoint rejection for homography-related image sets. A keypoint survives
/// when (1) its template box lies inside the reference image, (2) the box
/// around its mapped location lies inside every target view, and (3) it is
/// no closer than min(spacing_cap, max(tpl_w, tpl_h)) in Manhattan distance
/// to an already-accepted keypoint. The first `keep` survivors are returned
/// in the order given (callers pass response-sorted lists).
inline std::vector<Keypoint> filter_keypoints_vgg(const std::vector<Keypoint>& kps, int tpl_w,
                                                  int tpl_h, int img1_w, int img1_h,
                                                  std::span<const MappedTarget> targets,
                                                  int spacing_cap = 24, int keep = 25) {
  const int spacing = std::min(spacing_cap, std::max(tpl_w, tpl_h));
  std::vector<Keypoint> accepted;
  for (const Keypoint& kp : kps) {
    if (int(accepted.size()) >= keep) break;
    BoundingBox b1 = box_around(kp.x, kp.y, tpl_w, tpl_h);
    if (!BoundingBox{0, 0, img1_w, img1_h}.contains_box(b1)) continue;
    bool inside = true;
    for (const MappedTarget& t : targets) {
      Point2 p = apply_homography(t.h, {double(kp.x), double(kp.y)});
      BoundingBox b2 = box_around(int(std::lround(p.x)), int(std::lround(p.y)), tpl_w, tpl_h);
      if (!BoundingBox{0, 0, t.width, t.height}.contains_box(b2)) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    bool spaced = true;
    for (const Keypoint& a : accepted)
      if (std::abs(kp.x - a.x) + std::abs(kp.y - a.y) < spacing) {
        spaced = false;
        break;
      }
    if (spaced) accepted.push_back(kp);
  }
  return accepted;
}

inline std::vector<Keypoint> filter_keypoints_vgg(const std::vector<Keypoint>& kps, int tpl_w,
                                                  int tpl_h, int img1_w, int img1_h, int img2_w,
                                                  int img2_h, const Homography& h,
                                                  int min_spacing = 24, int keep = 25) {
  MappedTarget t{img2_w, img2_h, h};
  return filter_keypoints_vgg(kps, tpl_w, tpl_h, img1_w, img1_h, {&t, 1}, min_spacing, keep);
}

inline Image extract_patch(const Image& img, const BoundingBox& box) {
  if (!BoundingBox{0, 0, img.width, img.height}.contains_box(box))
    throw std::out_of_range("extract_patch: box outside image");
  Image out(box.w, box.h, img.channel_count());
  for (int c = 0; c < img.channel_count(); ++c)
    for (int y = 0; y < box.h; ++y)
      for (int x = 0; x < box.w; ++x)
        out.channels[size_t(c)](y, x) = img.channels[size_t(c)](box.y + y, box.x + x);
  return out;
}

/// Extracts a patch from a preprocessed stack. The box addresses original
/// image coordinates; the stack's padding offset is applied internally.
inline ChannelStack extract_patch(const ChannelStack& stack, const BoundingBox& box) {
  int orig_w = stack.width() - stack.pad.left - stack.pad.right;
  int orig_h = stack.height() - stack.pad.top - stack.pad.bottom;
  if (!BoundingBox{0, 0, orig_w, orig_h}.contains_box(box))
    throw std::out_of_range("extract_patch: box outside image");
  ChannelStack out;
  for (const Plane& p : stack.planes) {
    Plane q(box.w, box.h);
    for (int y = 0; y < box.h; ++y)
      for (int x = 0; x < box.w; ++x)
        q(y, x) = p(box.y + stack.pad.top + y, box.x + stack.pad.left + x);
    out.planes.push_back(std::move(q));
  }
  return out;
}

enum class SelectionKind { MaxCorrelation, Keypoint, Random, FromOtherImage };

/// How to pick additional (non-target) template locations.
struct SelectionStrategy {
  SelectionKind kind = SelectionKind::MaxCorrelation;
  int max_count = 4;
  uint64_t seed = 0;                                      // Random placements
  const Image* other_image = nullptr;                     // FromOtherImage source
  SelectionKind other_kind = SelectionKind::MaxCorrelation;
};

namespace detail {

inline bool placement_free(const BoundingBox& b, const std::vector<BoundingBox>& taken) {
  for (const BoundingBox& t : taken)
    if (boxes_overlap(b, t)) return false;
  return true;
}

inline std::vector<BoundingBox> select_boxes(const Image& source, const Image& target_patch,
                                             const BoundingBox* exclude, SelectionKind kind,
                                             int max_count, uint64_t seed) {
  std::vector<BoundingBox> taken;
  if (exclude) taken.push_back(*exclude);
  std::vector<BoundingBox> out;
  const int w = target_patch.width, h = target_patch.height;
  if (max_count <= 0 || w > source.width || h > source.height) return out;

  auto try_accept = [&](BoundingBox b) {
    b = clip_box_inside(b, source.width, source.height);
    if (!placement_free(b, taken)) return;
    taken.push_back(b);
    out.push_back(b);
  };

  switch (kind) {
    case SelectionKind::MaxCorrelation: {
      Plane corr;
      try {
        corr = zncc_match(source, target_patch, Colorspace::Gray);
      } catch (const std::invalid_argument&) {
        return out;  // constant target patch: no meaningful ranking
      }
      for (const Peak& p : local_maxima(corr)) {
        if (int(out.size()) >= max_count) break;
        try_accept(box_around(p.x, p.y, w, h));
      }
      break;
    }
    case SelectionKind::Keypoint: {
      for (const Keypoint& kp : harris_corners(source)) {
        if (int(out.size()) >= max_count) break;
        try_accept(box_around(kp.x, kp.y, w, h));
      }
      break;
    }
    case SelectionKind::Random: {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> dx(0, source.width - w);
      std::uniform_int_distribution<int> dy(0, source.height - h);
      for (int attempt = 0; attempt < 200 * max_count && int(out.size()) < max_count; ++attempt)
        try_accept({dx(rng), dy(rng), w, h});
      break;
    }
    case SelectionKind::FromOtherImage:
      break;  // handled by the caller
  }
  return out;
}

}  // namespace detail

/// Picks boxes for additional templates, all the same size as the target box
/// and mutually non-overlapping. In-image strategies also avoid the target
/// box; FromOtherImage applies `other_kind` to the unrelated source image,
/// where no target exclusion applies. May return fewer than max_count.
inline std::vector<BoundingBox> select_additional(const Image& img, const BoundingBox& target_box,
                                                  const SelectionStrategy& strategy) {
  Image patch = extract_patch(img, target_box);
  if (strategy.kind == SelectionKind::FromOtherImage) {
    if (!strategy.other_image)
      throw std::invalid_argument("select_additional: FromOtherImage needs a source image");
    return detail::select_boxes(*strategy.other_image, patch, nullptr, strategy.other_kind,
                                strategy.max_count, strategy.seed);
  }
  return detail::select_boxes(img, patch, &target_box, strategy.kind, strategy.max_count,
                              strategy.seed);
}

}  // namespace dimtm
