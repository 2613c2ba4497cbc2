#pragma once

// Minimal 1-D convolution kernel set with hand-derived backward passes:
// same-length convolutions (including 1x1), stride-2 down-sampling,
// stride-2 transposed up-sampling, ReLU / sigmoid / inverted dropout,
// He/Xavier initialization, Adam, and analytic multiply-accumulate counts.
//
// Weight layout for every convolution: w[out][in][tap], flattened;
// one bias per output channel. Same-length and down-sampling convolutions
// zero-pad by kernel/2.

#include "svs/common.hpp"

#include <numeric>

namespace svs::nn {

enum class ConvMode { Same, Down2, Up2 };

struct Conv1d {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  ConvMode mode = ConvMode::Same;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(in_ch) * out_ch * kernel;
  }
  std::size_t bias_count() const { return static_cast<std::size_t>(out_ch); }

  void validate() const {
    require(in_ch >= 1 && out_ch >= 1 && kernel >= 1, "conv: bad channel/kernel spec");
    if (mode == ConvMode::Same)
      require(kernel % 2 == 1, "same-length conv needs an odd filter size");
  }

  std::size_t out_frames(std::size_t T) const {
    switch (mode) {
      case ConvMode::Same:
        return T;
      case ConvMode::Down2:
        require(T % 2 == 0, "down-sampling conv needs an even frame count, got " +
                                std::to_string(T));
        return T / 2;
      case ConvMode::Up2:
        return 2 * T;
    }
    return T;
  }

  SequenceTensor forward(const SequenceTensor& x, std::span<const double> w,
                         std::span<const double> b) const {
    validate();
    require(x.channels == static_cast<std::size_t>(in_ch), "conv: input channel mismatch");
    require(x.frames >= 1, "conv: empty input");
    require(w.size() == weight_count() && b.size() == bias_count(),
            "conv: parameter size mismatch");
    const std::size_t T = x.frames;
    const std::size_t To = out_frames(T);
    const int pad = kernel / 2;
    SequenceTensor y(static_cast<std::size_t>(out_ch), To);
    for (int o = 0; o < out_ch; ++o) {
      double* yo = y.channel(static_cast<std::size_t>(o));
      std::fill(yo, yo + To, b[static_cast<std::size_t>(o)]);
      for (int c = 0; c < in_ch; ++c) {
        const double* xc = x.channel(static_cast<std::size_t>(c));
        const double* wc = w.data() + (static_cast<std::size_t>(o) * in_ch + c) * kernel;
        for (int j = 0; j < kernel; ++j) {
          const double wv = wc[j];
          if (wv == 0.0) continue;
          if (mode == ConvMode::Same) {
            const long shift = j - pad;
            const long t0 = std::max<long>(0, -shift);
            const long t1 = std::min<long>(static_cast<long>(T),
                                           static_cast<long>(T) - shift);
            for (long t = t0; t < t1; ++t) yo[t] += wv * xc[t + shift];
          } else if (mode == ConvMode::Down2) {
            for (std::size_t t = 0; t < To; ++t) {
              const long s = 2 * static_cast<long>(t) + j - pad;
              if (s >= 0 && s < static_cast<long>(T)) yo[t] += wv * xc[s];
            }
          } else {  // Up2: y[2t + j - pad] += w * x[t]
            for (std::size_t t = 0; t < T; ++t) {
              const long i = 2 * static_cast<long>(t) + j - pad;
              if (i >= 0 && i < static_cast<long>(To)) yo[i] += wv * xc[t];
            }
          }
        }
      }
    }
    return y;
  }

  // Returns dL/dx; accumulates dL/dw and dL/db into dw/db.
  SequenceTensor backward(const SequenceTensor& x, std::span<const double> w,
                          const SequenceTensor& dy, std::span<double> dw,
                          std::span<double> db) const {
    validate();
    require(x.channels == static_cast<std::size_t>(in_ch), "conv backward: input mismatch");
    const std::size_t T = x.frames;
    const std::size_t To = out_frames(T);
    require(dy.channels == static_cast<std::size_t>(out_ch) && dy.frames == To,
            "conv backward: upstream gradient shape mismatch");
    require(dw.size() == weight_count() && db.size() == bias_count(),
            "conv backward: gradient buffer mismatch");
    const int pad = kernel / 2;
    SequenceTensor dx(x.channels, T);
    for (int o = 0; o < out_ch; ++o) {
      const double* dyo = dy.channel(static_cast<std::size_t>(o));
      db[static_cast<std::size_t>(o)] += std::accumulate(dyo, dyo + To, 0.0);
      for (int c = 0; c < in_ch; ++c) {
        const double* xc = x.channel(static_cast<std::size_t>(c));
        double* dxc = dx.channel(static_cast<std::size_t>(c));
        const std::size_t wbase = (static_cast<std::size_t>(o) * in_ch + c) * kernel;
        for (int j = 0; j < kernel; ++j) {
          const double wv = w[wbase + static_cast<std::size_t>(j)];
          double gw = 0.0;
          if (mode == ConvMode::Same) {
            const long shift = j - pad;
            const long t0 = std::max<long>(0, -shift);
            const long t1 = std::min<long>(static_cast<long>(T),
                                           static_cast<long>(T) - shift);
            for (long t = t0; t < t1; ++t) {
              gw += dyo[t] * xc[t + shift];
              dxc[t + shift] += wv * dyo[t];
            }
          } else if (mode == ConvMode::Down2) {
            for (std::size_t t = 0; t < To; ++t) {
              const long s = 2 * static_cast<long>(t) + j - pad;
              if (s >= 0 && s < static_cast<long>(T)) {
                gw += dyo[t] * xc[s];
                dxc[s] += wv * dyo[t];
              }
            }
          } else {
            for (std::size_t t = 0; t < T; ++t) {
              const long i = 2 * static_cast<long>(t) + j - pad;
              if (i >= 0 && i < static_cast<long>(To)) {
                gw += dyo[i] * xc[t];
                dxc[t] += wv * dyo[i];
              }
            }
          }
          dw[wbase + static_cast<std::size_t>(j)] += gw;
        }
      }
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------
// Activations.

inline SequenceTensor relu(const SequenceTensor& x) {
  SequenceTensor y = x;
  for (double& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

inline SequenceTensor relu_backward(const SequenceTensor& pre, const SequenceTensor& dy) {
  require(pre.same_shape(dy), "relu backward: shape mismatch");
  SequenceTensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    if (pre.v[i] <= 0.0) dx.v[i] = 0.0;
  return dx;
}

inline SequenceTensor sigmoid(const SequenceTensor& x) {
  SequenceTensor y = x;
  for (double& v : y.v) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

// Takes the forward *output* y, not the pre-activation.
inline SequenceTensor sigmoid_backward(const SequenceTensor& y, const SequenceTensor& dy) {
  require(y.same_shape(dy), "sigmoid backward: shape mismatch");
  SequenceTensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= y.v[i] * (1.0 - y.v[i]);
  return dx;
}

// Inverted dropout. The mask holds per-element scales (0 or 1/(1-p)) so the
// same mask drives forward and backward; inference never draws from the rng.
inline std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng) {
  require(p >= 0.0 && p < 1.0, "dropout probability must lie in [0, 1)");
  std::vector<double> mask(n);
  if (p == 0.0) {
    std::fill(mask.begin(), mask.end(), 1.0);
    return mask;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = u(rng) < p ? 0.0 : scale;
  return mask;
}

inline SequenceTensor apply_mask(const SequenceTensor& x, std::span<const double> mask) {
  require(mask.size() == x.v.size(), "dropout mask size mismatch");
  SequenceTensor y = x;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask[i];
  return y;
}

// ---------------------------------------------------------------------------
// Parameters and Adam.

struct ParameterStore {
  std::vector<std::vector<double>> slots;
  std::vector<std::vector<double>> m1, m2;  // Adam moments, shaped like slots
  std::int64_t step = 0;

  std::size_t add_slot(std::size_t n) {
    slots.emplace_back(n, 0.0);
    m1.emplace_back(n, 0.0);
    m2.emplace_back(n, 0.0);
    return slots.size() - 1;
  }
  std::size_t total_parameters() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.size();
    return n;
  }
};

struct Gradients {
  std::vector<std::vector<double>> slots;

  explicit Gradients(const ParameterStore& ps) {
    slots.reserve(ps.slots.size());
    for (const auto& s : ps.slots) slots.emplace_back(s.size(), 0.0);
  }
  void zero() {
    for (auto& s : slots) std::fill(s.begin(), s.end(), 0.0);
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(ParameterStore& ps, const Gradients& g, const AdamConfig& hp) {
  require(g.slots.size() == ps.slots.size(), "adam: gradient/parameter mismatch");
  ps.step += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(ps.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(ps.step));
  for (std::size_t s = 0; s < ps.slots.size(); ++s) {
    auto& w = ps.slots[s];
    auto& m = ps.m1[s];
    auto& v = ps.m2[s];
    const auto& gr = g.slots[s];
    require(gr.size() == w.size(), "adam: slot size mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * gr[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * gr[i] * gr[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Initialization.

// `scale` shrinks the limit; residual branches use 1/sqrt(2R) so a stack of
// R identity-skip blocks keeps the activation variance bounded instead of
// doubling it per block.
inline void init_he_uniform(std::span<double> w, int fan_in, Rng& rng, double scale = 1.0) {
  const double limit = scale * std::sqrt(6.0 / fan_in);
  for (double& v : w) v = uniform(rng, -limit, limit);
}

inline void init_xavier_uniform(std::span<double> w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = uniform(rng, -limit, limit);
}

// ---------------------------------------------------------------------------
// Layer specs and MAC counting.

enum class LayerKind { Conv1x1, Conv, Down2, Up2, Relu, Sigmoid, Dropout, ResidualBlock };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv1x1;
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  int stride = 1;
  double dropout_p = 0.0;

  void validate() const {
    switch (kind) {
      case LayerKind::Conv1x1:
        require(kernel == 1 && stride == 1, "conv1x1 must have kernel 1, stride 1");
        break;
      case LayerKind::Conv:
      case LayerKind::ResidualBlock:
        require(kernel % 2 == 1, "same-length conv filter size must be odd");
        require(stride == 1, "same-length conv must have stride 1");
        if (kind == LayerKind::ResidualBlock)
          require(in_ch == out_ch, "residual block must preserve the channel count");
        break;
      case LayerKind::Down2:
      case LayerKind::Up2:
        require(stride == 2, "down2/up2 must have stride 2");
        break;
      default:
        break;
    }
  }
};

// Analytic multiply-accumulate count for one pass over `frames` input
// frames. A convolution contributes in*out*kernel multiplies per produced
// frame; the transposed up-sampler is counted per consumed input frame
// (each input scatters into in*out*kernel products). Down-sampling halves
// the frame count seen by every subsequent layer.
inline std::uint64_t mac_count(std::span<const LayerSpec> layers, std::uint64_t frames) {
  std::uint64_t total = 0;
  std::uint64_t T = frames;
  for (const LayerSpec& l : layers) {
    l.validate();
    const std::uint64_t per_frame =
        static_cast<std::uint64_t>(l.in_ch) * static_cast<std::uint64_t>(l.out_ch) *
        static_cast<std::uint64_t>(l.kernel);
    switch (l.kind) {
      case LayerKind::Conv1x1:
      case LayerKind::Conv:
        total += per_frame * T;
        break;
      case LayerKind::ResidualBlock:
        total += 2 * per_frame * T;
        break;
      case LayerKind::Down2:
        require(T % 2 == 0, "mac_count: odd frame count into down2");
        T /= 2;
        total += per_frame * T;
        break;
      case LayerKind::Up2:
        total += per_frame * T;
        T *= 2;
        break;
      case LayerKind::Relu:
      case LayerKind::Sigmoid:
      case LayerKind::Dropout:
        break;
    }
  }
  return total;
}

}  // namespace svs::nn
