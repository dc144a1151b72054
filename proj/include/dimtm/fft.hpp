#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "dimtm/array2d.hpp"

namespace dimtm::detail {

using cplx = std::complex<double>;

/// Smallest length >= n whose prime factors are all in {2,3,5,7}; FFTW
/// handles these sizes at full speed.
inline size_t next_fast_size(size_t n) {
  for (size_t m = std::max<size_t>(n, 1);; ++m) {
    size_t r = m;
    for (size_t f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

/// Half-plane spectrum of a real rows x cols array: rows x (cols/2+1)
/// complex bins, the redundant Hermitian half dropped. Products and sums of
/// such spectra stay in the same representation.
struct Spectrum {
  size_t rows = 0, cols = 0;  // logical real dims
  std::vector<cplx> v;        // rows * (cols/2 + 1)

  Spectrum() = default;
  Spectrum(size_t r, size_t c) : rows(r), cols(c), v(r * (c / 2 + 1)) {}

  size_t half_cols() const { return cols / 2 + 1; }

  void add_product(const Spectrum& a, const Spectrum& b) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += a.v[i] * b.v[i];
  }
  void add_product_conj(const Spectrum& a, const Spectrum& b) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += a.v[i] * std::conj(b.v[i]);
  }
};

/// FFTW plans per transform size. Plan creation is serialized (FFTW's
/// planner is not thread-safe); executing a cached plan on fresh arrays is.
/// All transform buffers come from fftw_malloc so new-array execution sees
/// consistent alignment.
class FftwPlans {
 public:
  static FftwPlans& instance() {
    static FftwPlans p;
    return p;
  }

  struct PlanPair {
    fftw_plan forward = nullptr;   // r2c
    fftw_plan backward = nullptr;  // c2r
  };

  const PlanPair& get(size_t rows, size_t cols) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(rows, cols);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    double* re = fftw_alloc_real(rows * cols);
    fftw_complex* sp = fftw_alloc_complex(rows * (cols / 2 + 1));
    PlanPair pair;
    pair.forward = fftw_plan_dft_r2c_2d(int(rows), int(cols), re, sp, FFTW_ESTIMATE);
    pair.backward = fftw_plan_dft_c2r_2d(int(rows), int(cols), sp, re, FFTW_ESTIMATE);
    fftw_free(re);
    fftw_free(sp);
    return plans_.emplace(key, pair).first->second;
  }

 private:
  FftwPlans() = default;
  ~FftwPlans() {
    for (auto& [k, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }
  std::mutex mu_;
  std::map<std::pair<size_t, size_t>, PlanPair> plans_;
};

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

/// Forward transform of a real plane zero-padded to rows x cols.
inline Spectrum fft2_real(const Plane& a, size_t rows, size_t cols) {
  const auto& plans = FftwPlans::instance().get(rows, cols);
  std::unique_ptr<double, FftwDeleter> re(fftw_alloc_real(rows * cols));
  std::unique_ptr<fftw_complex, FftwDeleter> sp(fftw_alloc_complex(rows * (cols / 2 + 1)));
  std::memset(re.get(), 0, sizeof(double) * rows * cols);
  for (int y = 0; y < a.height(); ++y)
    std::memcpy(re.get() + size_t(y) * cols, a.row(y), sizeof(double) * size_t(a.width()));
  fftw_execute_dft_r2c(plans.forward, re.get(), sp.get());
  Spectrum s(rows, cols);
  std::memcpy(s.v.data(), sp.get(), sizeof(cplx) * s.v.size());
  return s;
}

/// Inverse transform back to a real rows x cols plane, scaled by 1/(rows*cols).
inline Plane ifft2_real(const Spectrum& s) {
  const size_t rows = s.rows, cols = s.cols;
  const auto& plans = FftwPlans::instance().get(rows, cols);
  std::unique_ptr<fftw_complex, FftwDeleter> sp(fftw_alloc_complex(s.v.size()));
  std::unique_ptr<double, FftwDeleter> re(fftw_alloc_real(rows * cols));
  std::memcpy(sp.get(), s.v.data(), sizeof(cplx) * s.v.size());
  fftw_execute_dft_c2r(plans.backward, sp.get(), re.get());
  Plane out{int(cols), int(rows)};
  const double scale = 1.0 / (double(rows) * double(cols));
  for (size_t i = 0; i < rows * cols; ++i) out.data()[i] = re.get()[i] * scale;
  return out;
}

}  // namespace dimtm::detail
