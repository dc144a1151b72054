#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dimtm/convolution.hpp"
#include "dimtm/eval.hpp"
#include "dimtm/filtering.hpp"
#include "dimtm/keypoints.hpp"
#include "dimtm/parallel.hpp"

namespace dimtm {

enum class TemplateRole { Target, Additional };

struct TemplateInfo {
  std::string source;
  BoundingBox box{};
};

struct BankTemplate {
  std::vector<Plane> w;  // per channel, jointly normalized to sum 1
  std::vector<Plane> v;  // same values, jointly normalized to max 1
  TemplateRole role = TemplateRole::Target;
  TemplateInfo info;
};

struct TemplateBank {
  int tpl_w = 0, tpl_h = 0;
  int k = 0;  // channel count
  std::vector<BankTemplate> templates;

  int size() const { return int(templates.size()); }
};

/// Builds normalized template kernel pairs from preprocessed patches. The
/// sum (for w) and max (for v) are taken over all channels and pixels of a
/// patch, so each template's w kernels jointly sum to one.
inline TemplateBank build_bank(std::span<const ChannelStack> patches,
                               std::span<const TemplateRole> roles = {}) {
  if (patches.empty()) throw std::invalid_argument("build_bank: no patches");
  TemplateBank bank;
  bank.k = patches[0].k();
  bank.tpl_w = patches[0].width();
  bank.tpl_h = patches[0].height();
  for (size_t j = 0; j < patches.size(); ++j) {
    const ChannelStack& patch = patches[j];
    if (patch.k() != bank.k || patch.width() != bank.tpl_w || patch.height() != bank.tpl_h)
      throw std::invalid_argument("build_bank: patches must share dims and channel count");
    double total = 0.0, peak = 0.0;
    for (const Plane& p : patch.planes)
      for (double vv : p) {
        if (vv < 0.0) throw std::invalid_argument("build_bank: negative patch value");
        total += vv;
        peak = std::max(peak, vv);
      }
    if (peak <= 0.0) throw std::invalid_argument("build_bank: degenerate template");
    BankTemplate t;
    t.role = j < roles.size() ? roles[j] : (j == 0 ? TemplateRole::Target : TemplateRole::Additional);
    for (const Plane& p : patch.planes) {
      Plane w(p.width(), p.height()), v(p.width(), p.height());
      for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
          w(y, x) = p(y, x) / total;
          v(y, x) = p(y, x) / peak;
        }
      t.w.push_back(std::move(w));
      t.v.push_back(std::move(v));
    }
    bank.templates.push_back(std::move(t));
  }
  return bank;
}

struct DimParams {
  double epsilon2 = 1e-2;
  // epsilon1 <= 0 selects the default epsilon2 / max_px(sum_j v_ji), where
  // the max runs over channels and kernel pixels of the per-pixel total
  // dictionary weight. epsilon1_scale multiplies the default (sensitivity
  // sweeps); epsilon1_ref_epsilon2 > 0 pins the numerator so that sweeping
  // epsilon2 leaves epsilon1 at its standard value.
  double epsilon1 = 0.0;
  double epsilon1_scale = 1.0;
  double epsilon1_ref_epsilon2 = 0.0;
  int iterations = 0;  // <= 0: 10 for banks of <= 31 templates, else 20
  double lambda = 0.025;
  ConvPlan plan{};
  int threads = 1;
};

/// Per-template similarity maps. Uncropped fields live in padded
/// coordinates; crop_field moves them to original image coordinates.
struct SimilarityField {
  std::vector<Plane> maps;
  PadGeometry pad;
  bool cropped = false;

  int width() const { return maps.empty() ? 0 : maps[0].width(); }
  int height() const { return maps.empty() ? 0 : maps[0].height(); }
};

namespace detail {

inline int resolve_iterations(const DimParams& p, int bank_size) {
  if (p.iterations > 0) return p.iterations;
  return bank_size <= 31 ? 10 : 20;
}

inline double resolve_epsilon1(const DimParams& p, const TemplateBank& bank) {
  if (p.epsilon1 > 0.0) return p.epsilon1;
  double peak = 0.0;
  for (int c = 0; c < bank.k; ++c)
    for (int y = 0; y < bank.tpl_h; ++y)
      for (int x = 0; x < bank.tpl_w; ++x) {
        double s = 0.0;
        for (const BankTemplate& t : bank.templates) s += t.v[size_t(c)](y, x);
        peak = std::max(peak, s);
      }
  double ref = p.epsilon1_ref_epsilon2 > 0.0 ? p.epsilon1_ref_epsilon2 : p.epsilon2;
  return p.epsilon1_scale * ref / peak;
}

inline void clamp_nonneg(Plane& p) {
  for (double& v : p)
    if (v < 0.0) v = 0.0;
}

/// Iterates the explaining-away update on a fixed input stack and bank:
///   R_i = sum_j conv(Y_j, v_ji)
///   E_i = X_i / max(eps2, R_i)
///   Y_j = max(eps1, Y_j) * sum_i xcorr(E_i, w_ji)
/// In Fourier mode kernel spectra are cached across iterations and the sums
/// over j / i are accumulated in the spectral domain, so one iteration costs
/// p+k forward and p+k inverse transforms. Tiny negative values from
/// transform round-off are clamped to zero (R, E and Y are non-negative by
/// construction).
class DimEngine {
 public:
  DimEngine(const ChannelStack& x, const TemplateBank& bank, const DimParams& params)
      : x_(&x),
        bank_(&bank),
        params_(params),
        mode_(resolve_conv_mode(params.plan, x.width(), x.height(), bank.tpl_w, bank.tpl_h)),
        ws_(x.width(), x.height(), bank.tpl_w, bank.tpl_h),
        eps1_(resolve_epsilon1(params, bank)),
        eps2_(params.epsilon2) {
    if (x.k() != bank.k) throw std::invalid_argument("dim: channel count mismatch");
    if (bank.tpl_w > x.width() || bank.tpl_h > x.height())
      throw std::invalid_argument("dim: template larger than input stack");
    if (eps1_ <= 0.0 || eps2_ <= 0.0) throw std::invalid_argument("dim: epsilons must be > 0");
    const int p = bank.size(), k = bank.k;
    if (mode_ == ConvMode::Fourier) {
      w_hat_.resize(size_t(p) * k);
      v_hat_.resize(size_t(p) * k);
      parallel_for(p * k, params_.threads, [&](int idx) {
        int j = idx / k, i = idx % k;
        w_hat_[size_t(idx)] = ws_.forward(bank.templates[size_t(j)].w[size_t(i)]);
        v_hat_[size_t(idx)] = ws_.forward(bank.templates[size_t(j)].v[size_t(i)]);
      });
    }
    maps_.assign(size_t(p), Plane(x.width(), x.height(), 0.0));
  }

  double epsilon1() const { return eps1_; }
  double epsilon2() const { return eps2_; }
  ConvMode mode() const { return mode_; }
  const std::vector<Plane>& maps() const { return maps_; }

  void set_maps(std::vector<Plane> maps) {
    maps_ = std::move(maps);
    start_from_zero_ = false;
  }

  void step() {
    const int p = bank_->size(), k = bank_->k;
    std::vector<Plane> errors(static_cast<size_t>(k));
    std::vector<detail::Spectrum> y_hat;

    if (mode_ == ConvMode::Fourier && !start_from_zero_) {
      y_hat.resize(size_t(p));
      parallel_for(p, params_.threads, [&](int j) { y_hat[size_t(j)] = ws_.forward(maps_[size_t(j)]); });
    }

    parallel_for(k, params_.threads, [&](int i) {
      Plane recon = reconstruct_channel(i, y_hat);
      const Plane& xi = x_->planes[size_t(i)];
      Plane e(xi.width(), xi.height());
      for (int y = 0; y < e.height(); ++y) {
        const double* xr = xi.row(y);
        const double* rr = recon.row(y);
        double* er = e.row(y);
        for (int x = 0; x < e.width(); ++x) er[x] = xr[x] / std::max(eps2_, rr[x]);
      }
      errors[size_t(i)] = std::move(e);
    });

    std::vector<Spectrum> e_hat;
    if (mode_ == ConvMode::Fourier) {
      e_hat.resize(size_t(k));
      parallel_for(k, params_.threads,
                   [&](int i) { e_hat[size_t(i)] = ws_.forward(errors[size_t(i)]); });
    }

    parallel_for(p, params_.threads, [&](int j) {
      Plane sum = correlate_errors(j, errors, e_hat);
      Plane& yj = maps_[size_t(j)];
      for (int y = 0; y < yj.height(); ++y) {
        double* yr = yj.row(y);
        const double* sr = sum.row(y);
        for (int x = 0; x < yj.width(); ++x) yr[x] = std::max(eps1_, yr[x]) * sr[x];
      }
    });
    start_from_zero_ = false;
  }

  /// Input reconstruction sum_j conv(Y_j, v_ji) for the current maps.
  ChannelStack reconstruction() const {
    ChannelStack r;
    r.pad = x_->pad;
    std::vector<Spectrum> y_hat;
    if (mode_ == ConvMode::Fourier && !start_from_zero_) {
      y_hat.resize(size_t(bank_->size()));
      for (int j = 0; j < bank_->size(); ++j) y_hat[size_t(j)] = ws_.forward(maps_[size_t(j)]);
    }
    r.planes.resize(size_t(bank_->k));
    for (int i = 0; i < bank_->k; ++i) r.planes[size_t(i)] = reconstruct_channel(i, y_hat);
    return r;
  }

 private:
  Plane reconstruct_channel(int i, const std::vector<Spectrum>& y_hat) const {
    const int p = bank_->size(), k = bank_->k;
    if (start_from_zero_) return Plane(x_->width(), x_->height(), 0.0);
    if (mode_ == ConvMode::Fourier) {
      Spectrum acc(ws_.rows(), ws_.cols());
      for (int j = 0; j < p; ++j) acc.add_product(y_hat[size_t(j)], v_hat_[size_t(j * k + i)]);
      Plane r = ws_.gather_conv(acc);
      clamp_nonneg(r);
      return r;
    }
    Plane r(x_->width(), x_->height(), 0.0);
    for (int j = 0; j < p; ++j) {
      Plane c = conv2_same(maps_[size_t(j)], bank_->templates[size_t(j)].v[size_t(i)],
                           ConvPlan{ConvMode::Direct});
      for (size_t idx = 0; idx < r.size(); ++idx) r.data()[idx] += c.data()[idx];
    }
    return r;
  }

  Plane correlate_errors(int j, const std::vector<Plane>& errors,
                         const std::vector<Spectrum>& e_hat) const {
    const int k = bank_->k;
    if (mode_ == ConvMode::Fourier) {
      Spectrum acc(ws_.rows(), ws_.cols());
      for (int i = 0; i < k; ++i) acc.add_product_conj(e_hat[size_t(i)], w_hat_[size_t(j * k + i)]);
      Plane s = ws_.gather_xcorr(acc);
      clamp_nonneg(s);
      return s;
    }
    Plane s(x_->width(), x_->height(), 0.0);
    for (int i = 0; i < k; ++i) {
      Plane c = xcorr2_same(errors[size_t(i)], bank_->templates[size_t(j)].w[size_t(i)],
                            ConvPlan{ConvMode::Direct});
      for (size_t idx = 0; idx < s.size(); ++idx) s.data()[idx] += c.data()[idx];
    }
    return s;
  }

  const ChannelStack* x_;
  const TemplateBank* bank_;
  DimParams params_;
  ConvMode mode_;
  SpectralWorkspace ws_;
  double eps1_, eps2_;
  std::vector<Spectrum> w_hat_, v_hat_;
  std::vector<Plane> maps_;
  bool start_from_zero_ = true;
};

}  // namespace detail

/// One update round applied to an explicit similarity state.
inline SimilarityField dim_step(const ChannelStack& x, const SimilarityField& y,
                                const TemplateBank& bank, const DimParams& params = {}) {
  if (int(y.maps.size()) != bank.size())
    throw std::invalid_argument("dim_step: map count does not match bank");
  for (const Plane& m : y.maps)
    if (m.width() != x.width() || m.height() != x.height())
      throw std::invalid_argument("dim_step: map dims do not match input stack");
  detail::DimEngine engine(x, bank, params);
  engine.set_maps(y.maps);
  engine.step();
  SimilarityField out;
  out.maps = engine.maps();
  out.pad = y.pad;
  out.cropped = y.cropped;
  return out;
}

/// Runs the fixed-point iteration from an all-zero start and returns the
/// uncropped similarity field with the input stack's pad geometry attached.
inline SimilarityField dim_solve(const ChannelStack& x, const TemplateBank& bank,
                                 const DimParams& params = {}) {
  detail::DimEngine engine(x, bank, params);
  int iters = detail::resolve_iterations(params, bank.size());
  for (int it = 0; it < iters; ++it) engine.step();
  SimilarityField out;
  out.maps = engine.maps();
  out.pad = x.pad;
  out.cropped = false;
  return out;
}

/// Input reconstruction for a given similarity state (diagnostics and
/// reconstruction-quality checks).
inline ChannelStack reconstruct(const ChannelStack& x, const SimilarityField& y,
                                const TemplateBank& bank, const DimParams& params = {}) {
  detail::DimEngine engine(x, bank, params);
  engine.set_maps(y.maps);
  return engine.reconstruction();
}

/// Generalized KL divergence between a stack and a reconstruction clamped at
/// epsilon2, the objective the iteration descends.
inline double kl_divergence(const ChannelStack& x, const ChannelStack& r, double epsilon2) {
  if (x.k() != r.k()) throw std::invalid_argument("kl_divergence: channel mismatch");
  double total = 0.0;
  for (int i = 0; i < x.k(); ++i) {
    const Plane& xi = x.planes[size_t(i)];
    const Plane& ri = r.planes[size_t(i)];
    if (!xi.same_dims(ri)) throw std::invalid_argument("kl_divergence: dim mismatch");
    for (size_t idx = 0; idx < xi.size(); ++idx) {
      double xv = xi.data()[idx];
      double rv = std::max(epsilon2, ri.data()[idx]);
      total += rv - xv;
      if (xv > 0.0) total += xv * std::log(xv / rv);
    }
  }
  return total;
}

/// Drops the padded margins so map coordinates index original image pixels.
inline SimilarityField crop_field(const SimilarityField& y) {
  if (y.cropped) throw std::logic_error("crop_field: field already cropped");
  SimilarityField out;
  out.cropped = true;
  int w = y.width() - y.pad.left - y.pad.right;
  int h = y.height() - y.pad.top - y.pad.bottom;
  if (w < 1 || h < 1) throw std::invalid_argument("crop_field: pad exceeds field dims");
  for (const Plane& m : y.maps) {
    Plane c(w, h);
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) c(yy, xx) = m(yy + y.pad.top, xx + y.pad.left);
    out.maps.push_back(std::move(c));
  }
  return out;
}

/// Binary kernel covering the ellipse (2dx/(lambda*w))^2 + (2dy/(lambda*h))^2 <= 1.
/// The center pixel always qualifies, so the kernel never degenerates below
/// one pixel and a tiny lambda leaves the field unchanged.
inline Plane elliptical_kernel(int tpl_w, int tpl_h, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("elliptical_kernel: lambda >= 0");
  double ax = lambda * tpl_w / 2.0, ay = lambda * tpl_h / 2.0;
  int rx = int(ax), ry = int(ay);
  Plane k(2 * rx + 1, 2 * ry + 1, 0.0);
  for (int dy = -ry; dy <= ry; ++dy)
    for (int dx = -rx; dx <= rx; ++dx) {
      double ex = dx == 0 ? 0.0 : (dx * dx) / (ax * ax);
      double ey = dy == 0 ? 0.0 : (dy * dy) / (ay * ay);
      if (ex + ey <= 1.0) k(dy + ry, dx + rx) = 1.0;
    }
  return k;
}

/// Sums each similarity map over a template-scaled elliptical neighborhood.
/// Expects a cropped field.
inline SimilarityField postprocess_sum(const SimilarityField& y, int tpl_w, int tpl_h,
                                       double lambda, const ConvPlan& plan = {}) {
  if (!y.cropped) throw std::logic_error("postprocess_sum: field must be cropped first");
  Plane kernel = elliptical_kernel(tpl_w, tpl_h, lambda);
  if (kernel.width() == 1 && kernel.height() == 1) return y;
  SimilarityField out;
  out.pad = y.pad;
  out.cropped = true;
  for (const Plane& m : y.maps) {
    Plane s = conv2_same(m, kernel, plan);
    detail::clamp_nonneg(s);
    out.maps.push_back(std::move(s));
  }
  return out;
}

/// A template source: an image plus the box to cut from it.
struct PatchSpec {
  const Image* source = nullptr;
  BoundingBox box{};
};

/// Full matching pipeline: preprocess sources and query with the target
/// template's dims, extract and normalize templates (target first), run the
/// competition, then crop and neighborhood-sum. Index 0 of the result is the
/// target template's similarity map.
inline SimilarityField match(const Image& query, const PatchSpec& target,
                             std::span<const PatchSpec> additional = {},
                             const DimParams& params = {}, double sigma_scale = 1.0) {
  if (!target.source) throw std::invalid_argument("match: null target source");
  const int tw = target.box.w, th = target.box.h;

  std::vector<const Image*> sources{target.source};
  std::vector<ChannelStack> stacks{preprocess(*target.source, tw, th, sigma_scale)};
  auto stack_for = [&](const Image* img) -> const ChannelStack& {
    for (size_t i = 0; i < sources.size(); ++i)
      if (sources[i] == img) return stacks[i];
    sources.push_back(img);
    stacks.push_back(preprocess(*img, tw, th, sigma_scale));
    return stacks.back();
  };

  std::vector<ChannelStack> patches;
  std::vector<TemplateRole> roles;
  patches.push_back(extract_patch(stacks[0], target.box));
  roles.push_back(TemplateRole::Target);
  for (const PatchSpec& spec : additional) {
    if (!spec.source) throw std::invalid_argument("match: null additional source");
    if (spec.box.w != tw || spec.box.h != th)
      throw std::invalid_argument("match: additional template dims differ from target");
    patches.push_back(extract_patch(stack_for(spec.source), spec.box));
    roles.push_back(TemplateRole::Additional);
  }

  TemplateBank bank = build_bank(patches, roles);
  bank.templates[0].info.box = target.box;
  for (size_t a = 0; a < additional.size(); ++a)
    bank.templates[a + 1].info.box = additional[a].box;

  ChannelStack xq = preprocess(query, tw, th, sigma_scale);
  SimilarityField field = dim_solve(xq, bank, params);
  field = crop_field(field);
  return postprocess_sum(field, tw, th, params.lambda, params.plan);
}

}  // namespace dimtm
