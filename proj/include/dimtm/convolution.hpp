#pragma once

#include <cmath>
#include <stdexcept>

#include "dimtm/array2d.hpp"
#include "dimtm/fft.hpp"

namespace dimtm {

enum class ConvMode { Direct, Fourier, Auto };

/// Backend selection for a same-size correlation/convolution. Auto picks the
/// Fourier path once the kernel area outweighs the log of the padded plane
/// area, the crossover point of the O(MNmn) direct cost against the
/// O(MN log MN) transform cost.
struct ConvPlan {
  ConvMode mode = ConvMode::Auto;
};

/// Kernel anchor used by every "same-size" operation in the library:
/// the response at (y, x) corresponds to the kernel pixel
/// (kernel_center_y, kernel_center_x) pinned at (y, x).
inline int kernel_center(int extent) { return (extent - 1) / 2; }

inline ConvMode resolve_conv_mode(const ConvPlan& plan, int plane_w, int plane_h, int kern_w,
                                  int kern_h) {
  if (plan.mode != ConvMode::Auto) return plan.mode;
  double kernel_area = double(kern_w) * double(kern_h);
  double padded_area = double(plane_h + 2 * kern_h) * double(plane_w + 2 * kern_w);
  return kernel_area > std::log(padded_area) ? ConvMode::Fourier : ConvMode::Direct;
}

namespace detail {

inline void check_conv_args(const Plane& plane, const Plane& k) {
  if (k.width() > plane.width() || k.height() > plane.height())
    throw std::invalid_argument("xcorr2_same: kernel larger than plane");
}

inline Plane xcorr2_same_direct(const Plane& plane, const Plane& k) {
  const int pw = plane.width(), ph = plane.height();
  const int cy = kernel_center(k.height()), cx = kernel_center(k.width());
  Plane out(pw, ph, 0.0);
  for (int v = 0; v < k.height(); ++v) {
    for (int u = 0; u < k.width(); ++u) {
      const double weight = k(v, u);
      if (weight == 0.0) continue;
      const int dy = v - cy, dx = u - cx;
      const int y0 = std::max(0, -dy), y1 = std::min(ph, ph - dy);
      const int x0 = std::max(0, -dx), x1 = std::min(pw, pw - dx);
      for (int y = y0; y < y1; ++y) {
        const double* src = plane.row(y + dy) + dx;
        double* dst = out.row(y);
        for (int x = x0; x < x1; ++x) dst[x] += weight * src[x];
      }
    }
  }
  return out;
}

/// Shared transform geometry for a batch of same-size operations on planes
/// and kernels of fixed dims. Callers combine forward spectra with
/// add_product / add_product_conj and gather the padded circular result back
/// to plane coordinates.
class SpectralWorkspace {
 public:
  SpectralWorkspace(int plane_w, int plane_h, int kern_w, int kern_h)
      : plane_w_(plane_w),
        plane_h_(plane_h),
        kern_w_(kern_w),
        kern_h_(kern_h),
        cols_(next_fast_size(size_t(plane_w) + kern_w - 1)),
        rows_(next_fast_size(size_t(plane_h) + kern_h - 1)) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  Spectrum forward(const Plane& p) const { return fft2_real(p, rows_, cols_); }

  /// Correlation gather: out(y,x) = circ((y - cy) mod R, (x - cx) mod C).
  Plane gather_xcorr(const Spectrum& product) const {
    Plane circ = ifft2_real(product);
    return gather(circ, -kernel_center(kern_h_), -kernel_center(kern_w_));
  }

  /// Convolution gather; offsets follow from conv = xcorr with the kernel
  /// rotated 180 degrees.
  Plane gather_conv(const Spectrum& product) const {
    Plane circ = ifft2_real(product);
    return gather(circ, kern_h_ - 1 - kernel_center(kern_h_),
                  kern_w_ - 1 - kernel_center(kern_w_));
  }

 private:
  Plane gather(const Plane& circ, int off_y, int off_x) const {
    const int rows = int(rows_), cols = int(cols_);
    Plane out(plane_w_, plane_h_);
    for (int y = 0; y < plane_h_; ++y) {
      const int sy = (y + off_y + rows) % rows;
      const double* src = circ.row(sy);
      double* dst = out.row(y);
      for (int x = 0; x < plane_w_; ++x) dst[x] = src[(x + off_x + cols) % cols];
    }
    return out;
  }

  int plane_w_, plane_h_, kern_w_, kern_h_;
  size_t cols_, rows_;
};

inline Plane xcorr2_same_fourier(const Plane& plane, const Plane& k) {
  SpectralWorkspace ws(plane.width(), plane.height(), k.width(), k.height());
  Spectrum prod(ws.rows(), ws.cols());
  prod.add_product_conj(ws.forward(plane), ws.forward(k));
  return ws.gather_xcorr(prod);
}

}  // namespace detail

/// Same-size cross-correlation: out(y,x) = sum_{u,v} k(v,u) * plane(y+v-cy, x+u-cx)
/// with out-of-range plane samples treated as zero.
inline Plane xcorr2_same(const Plane& plane, const Plane& k, const ConvPlan& plan = {}) {
  detail::check_conv_args(plane, k);
  ConvMode mode = resolve_conv_mode(plan, plane.width(), plane.height(), k.width(), k.height());
  return mode == ConvMode::Fourier ? detail::xcorr2_same_fourier(plane, k)
                                   : detail::xcorr2_same_direct(plane, k);
}

/// Same-size convolution, defined as cross-correlation with the kernel
/// rotated 180 degrees. For even kernel extents this fixes the anchor at
/// extent-1-floor((extent-1)/2), documented here once for the whole project.
inline Plane conv2_same(const Plane& plane, const Plane& k, const ConvPlan& plan = {}) {
  return xcorr2_same(plane, rot180(k), plan);
}

}  // namespace dimtm
