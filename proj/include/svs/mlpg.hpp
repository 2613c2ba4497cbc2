#pragma once

// Maximum-likelihood parameter generation: given per-frame Gaussian means
// and variances over static+dynamic features, solve
//     W' S^-1 W c = W' S^-1 mu
// for the static trajectory c. The normal-equation matrix is banded
// (bandwidth = 2 * max window halfwidth per static dimension), symmetric
// positive definite, and is factored with a banded Cholesky decomposition.
// Each static dimension is an independent solve under a diagonal covariance.

#include "svs/common.hpp"
#include "svs/dynamics.hpp"

namespace svs::mlpg {

struct GaussianSequence {
  Matrix means;      // T x (W*D)
  Matrix variances;  // T x (W*D), strictly positive

  void validate(std::size_t window_count) const {
    require(means.rows() >= 1, "gaussian sequence is empty");
    require(means.rows() == variances.rows() && means.cols() == variances.cols(),
            "gaussian sequence mean/variance shape mismatch");
    require(window_count >= 1 && means.cols() % window_count == 0,
            "gaussian sequence width not divisible by window count");
    for (std::size_t t = 0; t < variances.rows(); ++t)
      for (std::size_t d = 0; d < variances.cols(); ++d)
        require(variances(t, d) > 0.0, "nonpositive variance at frame " + std::to_string(t));
  }
};

// Symmetric banded matrix, lower storage: at(r, d) = A(r, r-d), 0 <= d <= band.
struct BandedSpd {
  std::size_t n = 0;
  int band = 0;
  std::vector<double> a;

  BandedSpd() = default;
  BandedSpd(std::size_t n_, int band_) : n(n_), band(band_), a(n_ * (band_ + 1), 0.0) {}

  double& at(std::size_t r, int d) { return a[r * (band + 1) + static_cast<std::size_t>(d)]; }
  double at(std::size_t r, int d) const { return a[r * (band + 1) + static_cast<std::size_t>(d)]; }
};

// In-band Cholesky solve. The factor L keeps the bandwidth of A, so the
// cost is O(n * band^2).
inline std::vector<double> solve_banded_spd(BandedSpd A, std::vector<double> rhs) {
  require(A.n == rhs.size(), "banded solve: rhs size mismatch");
  const std::size_t n = A.n;
  const int band = A.band;

  // factor A = L L' in place; at(r, d) holds L(r, r-d) afterwards
  for (std::size_t r = 0; r < n; ++r) {
    for (int d = std::min<int>(band, static_cast<int>(r)); d >= 0; --d) {
      std::size_t c = r - static_cast<std::size_t>(d);
      double sum = A.at(r, d);
      int kmax = std::min<int>(band - d, static_cast<int>(c));
      for (int k = 1; k <= kmax; ++k) sum -= A.at(r, d + k) * A.at(c, k);
      if (d == 0) {
        if (!(sum > 0.0))
          fail("banded Cholesky: nonpositive pivot at frame " + std::to_string(r));
        A.at(r, 0) = std::sqrt(sum);
      } else {
        A.at(r, d) = sum / A.at(c, 0);
      }
    }
  }
  // L y = b
  for (std::size_t r = 0; r < n; ++r) {
    double sum = rhs[r];
    int kmax = std::min<int>(band, static_cast<int>(r));
    for (int k = 1; k <= kmax; ++k) sum -= A.at(r, k) * rhs[r - static_cast<std::size_t>(k)];
    rhs[r] = sum / A.at(r, 0);
  }
  // L' x = y
  for (std::size_t ri = n; ri-- > 0;) {
    double sum = rhs[ri];
    int kmax = std::min<int>(band, static_cast<int>(n - 1 - ri));
    for (int k = 1; k <= kmax; ++k)
      sum -= A.at(ri + static_cast<std::size_t>(k), k) * rhs[ri + static_cast<std::size_t>(k)];
    rhs[ri] = sum / A.at(ri, 0);
  }
  return rhs;
}

// Minimizes (mu - W c)' S^-1 (mu - W c) per static dimension.
inline Matrix generate(const GaussianSequence& seq, const WindowSet& ws) {
  seq.validate(ws.count());
  const std::size_t W = ws.count();
  const std::size_t T = seq.means.rows();
  const std::size_t D = seq.means.cols() / W;
  const WindowMatrix wm(T, D, ws);
  const int H = wm.halfwidth();
  const int band = std::min<int>(2 * H, static_cast<int>(T) - 1);

  Matrix statics(T, D);
  for (std::size_t d = 0; d < D; ++d) {
    BandedSpd A(T, band);
    std::vector<double> b(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t w = 0; w < W; ++w) {
        const double inv_var = 1.0 / seq.variances(t, w * D + d);
        const double mean = seq.means(t, w * D + d);
        for (int i = -H; i <= H; ++i) {
          double ci = wm.folded_tap(t, w, i);
          if (ci == 0.0) continue;
          std::size_t row = static_cast<std::size_t>(static_cast<long>(t) + i);
          b[row] += ci * inv_var * mean;
          for (int j = -H; j <= i; ++j) {
            double cj = wm.folded_tap(t, w, j);
            if (cj == 0.0) continue;
            std::size_t col = static_cast<std::size_t>(static_cast<long>(t) + j);
            A.at(row, static_cast<int>(row - col)) += ci * inv_var * cj;
          }
        }
      }
    }
    std::vector<double> x = solve_banded_spd(std::move(A), std::move(b));
    for (std::size_t t = 0; t < T; ++t) statics(t, d) = x[t];
  }
  return statics;
}

}  // namespace svs::mlpg
