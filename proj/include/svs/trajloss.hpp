#pragma once

// Sequence-level trajectory likelihood: the negative log-likelihood of the
// windowed reference statics under a Gaussian centered at the windowed
// predicted statics, with one diagonal covariance tied across all frames.
// The loss is a sum over frames, so the closed-form covariance update and
// the MLPG equivalence hold exactly.

#include "svs/common.hpp"
#include "svs/dynamics.hpp"

namespace svs {

struct TiedCovariance {
  std::vector<double> variance;  // length W*D, shared by every frame
  double floor = 1e-6;

  void validate() const {
    require(!variance.empty(), "tied covariance is empty");
    require(floor > 0.0, "variance floor must be positive");
    for (double v : variance)
      require(v >= floor, "tied covariance entry below the floor");
  }
};

inline constexpr double kLog2Pi = 1.8378770664093453;

// 1/2 (o_ref - o_pred)' S^-1 (o_ref - o_pred) + T/2 * sum_d log(2 pi s_d^2)
inline double trajectory_nll(const Matrix& pred, const Matrix& ref, const WindowSet& ws,
                             const TiedCovariance& cov) {
  require(pred.rows() == ref.rows() && pred.cols() == ref.cols(),
          "trajectory nll: shape mismatch");
  cov.validate();
  require(cov.variance.size() == ws.count() * pred.cols(),
          "trajectory nll: covariance width mismatch");
  const std::size_t T = pred.rows();
  Matrix diff(T, pred.cols());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < pred.cols(); ++d) diff(t, d) = ref(t, d) - pred(t, d);
  Matrix r = apply_windows(diff, ws);

  double quad = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < r.cols(); ++d) quad += r(t, d) * r(t, d) / cov.variance[d];
  double logdet = 0.0;
  for (double v : cov.variance) logdet += kLog2Pi + std::log(v);
  return 0.5 * quad + 0.5 * static_cast<double>(T) * logdet;
}

// dL/dpred = -W' S^-1 (o_ref - o_pred), accumulated through the folded band
// without materializing W.
inline Matrix trajectory_nll_gradient(const Matrix& pred, const Matrix& ref,
                                      const WindowSet& ws, const TiedCovariance& cov) {
  require(pred.rows() == ref.rows() && pred.cols() == ref.cols(),
          "trajectory nll gradient: shape mismatch");
  cov.validate();
  require(cov.variance.size() == ws.count() * pred.cols(),
          "trajectory nll gradient: covariance width mismatch");
  const std::size_t T = pred.rows();
  const std::size_t D = pred.cols();
  Matrix diff(T, D);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) diff(t, d) = ref(t, d) - pred(t, d);
  const WindowMatrix wm(T, D, ws);
  Matrix r = wm.multiply(diff);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < r.cols(); ++d) r(t, d) /= cov.variance[d];
  Matrix g = wm.multiply_transpose(r);
  for (double& v : g.values()) v = -v;
  return g;
}

// Per-epoch accumulator of squared windowed residuals. Merging is an
// elementwise sum, so partial accumulators combine in any order.
struct ResidualAccumulator {
  std::vector<double> sumsq;
  std::uint64_t frames = 0;

  void add(const Matrix& pred, const Matrix& ref, const WindowSet& ws) {
    require(pred.rows() == ref.rows() && pred.cols() == ref.cols(),
            "residual accumulator: shape mismatch");
    Matrix diff(pred.rows(), pred.cols());
    for (std::size_t t = 0; t < pred.rows(); ++t)
      for (std::size_t d = 0; d < pred.cols(); ++d) diff(t, d) = ref(t, d) - pred(t, d);
    Matrix r = apply_windows(diff, ws);
    if (sumsq.empty()) sumsq.assign(r.cols(), 0.0);
    require(sumsq.size() == r.cols(), "residual accumulator: width changed");
    for (std::size_t t = 0; t < r.rows(); ++t)
      for (std::size_t d = 0; d < r.cols(); ++d) sumsq[d] += r(t, d) * r(t, d);
    frames += r.rows();
  }

  void add_windowed(const Matrix& windowed_residual) {
    if (sumsq.empty()) sumsq.assign(windowed_residual.cols(), 0.0);
    require(sumsq.size() == windowed_residual.cols(), "residual accumulator: width changed");
    for (std::size_t t = 0; t < windowed_residual.rows(); ++t)
      for (std::size_t d = 0; d < windowed_residual.cols(); ++d)
        sumsq[d] += windowed_residual(t, d) * windowed_residual(t, d);
    frames += windowed_residual.rows();
  }

  void merge(const ResidualAccumulator& other) {
    if (other.frames == 0) return;
    if (sumsq.empty()) sumsq.assign(other.sumsq.size(), 0.0);
    require(sumsq.size() == other.sumsq.size(), "residual accumulator: width mismatch");
    for (std::size_t d = 0; d < sumsq.size(); ++d) sumsq[d] += other.sumsq[d];
    frames += other.frames;
  }
};

// Maximum-likelihood re-estimate: per-dimension mean squared residual over
// the epoch, clamped to the floor.
inline TiedCovariance update_covariance(const ResidualAccumulator& acc, double floor) {
  require(acc.frames > 0, "covariance update with zero accumulated frames");
  require(floor > 0.0, "variance floor must be positive");
  TiedCovariance cov;
  cov.floor = floor;
  cov.variance.resize(acc.sumsq.size());
  for (std::size_t d = 0; d < acc.sumsq.size(); ++d)
    cov.variance[d] = std::max(floor, acc.sumsq[d] / static_cast<double>(acc.frames));
  return cov;
}

inline TiedCovariance unit_covariance(std::size_t dims, double floor = 1e-6) {
  TiedCovariance cov;
  cov.floor = floor;
  cov.variance.assign(dims, 1.0);
  return cov;
}

}  // namespace svs
