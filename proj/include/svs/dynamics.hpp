#pragma once

// Delta / delta-delta regression windows and the banded matrix that maps a
// static feature sequence c (T x D) to the augmented sequence o (T x W*D)
// via o = W * vec(c). Boundary frames use edge replication, so constant
// sequences have exactly zero dynamics and the matrix keeps full column rank.

#include "svs/common.hpp"

namespace svs {

struct Window {
  int halfwidth = 0;          // taps cover [-halfwidth, +halfwidth]
  std::vector<double> taps;   // size 2*halfwidth + 1
};

struct WindowSet {
  std::vector<Window> windows;  // windows[0] must be the identity window

  std::size_t count() const { return windows.size(); }

  int max_halfwidth() const {
    int h = 0;
    for (const auto& w : windows) h = std::max(h, w.halfwidth);
    return h;
  }

  void validate() const {
    require(!windows.empty(), "window set is empty");
    require(windows[0].halfwidth == 0 && windows[0].taps.size() == 1 &&
                windows[0].taps[0] == 1.0,
            "window 0 must be the identity window {0: 1.0}");
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      require(w.halfwidth >= 0 &&
                  w.taps.size() == static_cast<std::size_t>(2 * w.halfwidth + 1),
              "window " + std::to_string(i) + " must have an odd tap count");
      for (double t : w.taps)
        require(std::isfinite(t), "window " + std::to_string(i) + " has a non-finite tap");
    }
  }
};

// Static, 3-tap delta, 3-tap delta-delta.
inline WindowSet default_windows() {
  WindowSet ws;
  ws.windows.push_back({0, {1.0}});
  ws.windows.push_back({1, {-0.5, 0.0, 0.5}});
  ws.windows.push_back({1, {1.0, -2.0, 1.0}});
  return ws;
}

// o_t = [w0*c_t, w1*c_t, ...] with out-of-range taps clamped to the edges.
inline Matrix apply_windows(const Matrix& statics, const WindowSet& ws) {
  ws.validate();
  require(statics.rows() >= 1, "apply_windows: empty sequence");
  const std::size_t T = statics.rows(), D = statics.cols();
  const std::size_t W = ws.count();
  Matrix out(T, W * D);
  for (std::size_t w = 0; w < W; ++w) {
    const Window& win = ws.windows[w];
    for (std::size_t t = 0; t < T; ++t) {
      for (int tap = -win.halfwidth; tap <= win.halfwidth; ++tap) {
        double coeff = win.taps[static_cast<std::size_t>(tap + win.halfwidth)];
        if (coeff == 0.0) continue;
        std::size_t src = static_cast<std::size_t>(
            std::clamp<long>(static_cast<long>(t) + tap, 0, static_cast<long>(T) - 1));
        for (std::size_t d = 0; d < D; ++d)
          out(t, w * D + d) += coeff * statics(src, d);
      }
    }
  }
  return out;
}

// Banded representation of W. Boundary rows fold the replicated taps into
// the edge columns, so the folded taps at (t, w) cover source frames
// t+j for j in [-H, H] only.
class WindowMatrix {
 public:
  WindowMatrix(std::size_t frames, std::size_t dim, const WindowSet& ws)
      : frames_(frames), dim_(dim), ws_(ws), half_(ws.max_halfwidth()) {
    ws_.validate();
    require(frames_ >= 1, "window matrix needs at least one frame");
    const std::size_t W = ws_.count();
    const std::size_t span = static_cast<std::size_t>(2 * half_ + 1);
    fold_.assign(frames_ * W * span, 0.0);
    for (std::size_t t = 0; t < frames_; ++t) {
      for (std::size_t w = 0; w < W; ++w) {
        const Window& win = ws_.windows[w];
        for (int tap = -win.halfwidth; tap <= win.halfwidth; ++tap) {
          double coeff = win.taps[static_cast<std::size_t>(tap + win.halfwidth)];
          long src = std::clamp<long>(static_cast<long>(t) + tap, 0,
                                      static_cast<long>(frames_) - 1);
          int j = static_cast<int>(src - static_cast<long>(t));
          fold_[(t * W + w) * span + static_cast<std::size_t>(j + half_)] += coeff;
        }
      }
    }
  }

  std::size_t frames() const { return frames_; }
  std::size_t static_dim() const { return dim_; }
  std::size_t window_count() const { return ws_.count(); }
  const WindowSet& windows() const { return ws_; }

  // halfwidth of the folded band, in frames
  int halfwidth() const { return half_; }

  // folded coefficient applied to source frame t+j for output row (t, w)
  double folded_tap(std::size_t t, std::size_t w, int j) const {
    if (j < -half_ || j > half_) return 0.0;
    return fold_[(t * ws_.count() + w) * static_cast<std::size_t>(2 * half_ + 1) +
                 static_cast<std::size_t>(j + half_)];
  }

  // W * vec(c) through the band; equals apply_windows on the same inputs.
  Matrix multiply(const Matrix& statics) const {
    require(statics.rows() == frames_ && statics.cols() == dim_,
            "window matrix shape mismatch");
    const std::size_t W = ws_.count();
    Matrix out(frames_, W * dim_);
    for (std::size_t t = 0; t < frames_; ++t)
      for (std::size_t w = 0; w < W; ++w)
        for (int j = -half_; j <= half_; ++j) {
          double coeff = folded_tap(t, w, j);
          if (coeff == 0.0) continue;
          std::size_t src = static_cast<std::size_t>(static_cast<long>(t) + j);
          for (std::size_t d = 0; d < dim_; ++d)
            out(t, w * dim_ + d) += coeff * statics(src, d);
        }
    return out;
  }

  // W^T * vec(r) through the band (the adjoint map used by gradients).
  Matrix multiply_transpose(const Matrix& windowed) const {
    const std::size_t W = ws_.count();
    require(windowed.rows() == frames_ && windowed.cols() == W * dim_,
            "window matrix transpose shape mismatch");
    Matrix out(frames_, dim_);
    for (std::size_t t = 0; t < frames_; ++t)
      for (std::size_t w = 0; w < W; ++w)
        for (int j = -half_; j <= half_; ++j) {
          double coeff = folded_tap(t, w, j);
          if (coeff == 0.0) continue;
          std::size_t src = static_cast<std::size_t>(static_cast<long>(t) + j);
          for (std::size_t d = 0; d < dim_; ++d)
            out(src, d) += coeff * windowed(t, w * dim_ + d);
        }
    return out;
  }

  // Dense (W*D*T) x (D*T) materialization, frame-major on both sides.
  Matrix dense() const {
    const std::size_t W = ws_.count();
    Matrix out(frames_ * W * dim_, frames_ * dim_);
    for (std::size_t t = 0; t < frames_; ++t)
      for (std::size_t w = 0; w < W; ++w)
        for (int j = -half_; j <= half_; ++j) {
          double coeff = folded_tap(t, w, j);
          if (coeff == 0.0) continue;
          std::size_t src = static_cast<std::size_t>(static_cast<long>(t) + j);
          for (std::size_t d = 0; d < dim_; ++d)
            out((t * W + w) * dim_ + d, src * dim_ + d) += coeff;
        }
    return out;
  }

 private:
  std::size_t frames_, dim_;
  WindowSet ws_;
  int half_;
  std::vector<double> fold_;
};

inline WindowMatrix build_window_matrix(std::size_t frames, std::size_t dim,
                                        const WindowSet& ws) {
  return WindowMatrix(frames, dim, ws);
}

}  // namespace svs
