#pragma once

// Waveform rendering: vibrato-modulated F0, mixed pulse/noise excitation,
// MLSA (mel log spectrum approximation) filtering of mel-cepstra, and a
// 16-bit PCM WAV writer.
//
// The MLSA filter realizes H(z) = exp(sum_m b(m) Phi_m(z)) with
//   Phi_0 = 1,  Phi_m(z) = (1 - a^2) z^-1 / (1 - a z^-1) * A(z)^(m-1),
//   A(z) = (z^-1 - a) / (1 - a z^-1),
// where b comes from the mel-cepstrum via b(M) = c(M),
// b(m) = c(m) - a b(m+1). exp(b(0)) is applied as a plain gain; the b(1)
// term and the b(2..M) sum are realized as two cascaded filter stages, each
// approximating exp(F) by the rational R(F) = N(F)/N(-F) with the Pade
// coefficient sets below. The approximation stays stable and accurate while
// the per-stage log-magnitude |F(e^jw)| is below 4.5 (order 4) or 6.0
// (order 5).

#include "svs/acoustic.hpp"

#include <numbers>

namespace svs::vocoder {

// ---------------------------------------------------------------------------
// Vibrato.

// f0'(t) = f0(t) * 2^(amp_cents * sin(phase) / 1200) on vibrato-flagged
// frames, operating on the log-F0 track. The phase accumulates
// 2 pi * freq * frame_shift per flagged frame and resets to zero at every
// 0 -> 1 flag transition.
inline std::vector<double> apply_vibrato(std::span<const double> lf0,
                                         std::span<const double> amp_cents,
                                         std::span<const double> freq_hz,
                                         std::span<const double> flag, double frame_shift) {
  require(lf0.size() == amp_cents.size() && lf0.size() == freq_hz.size() &&
              lf0.size() == flag.size(),
          "apply_vibrato: track length mismatch");
  require(frame_shift > 0.0, "apply_vibrato: bad frame shift");
  std::vector<double> out(lf0.begin(), lf0.end());
  double phase = 0.0;
  bool prev_on = false;
  for (std::size_t t = 0; t < lf0.size(); ++t) {
    const bool on = flag[t] >= 0.5;
    if (on) {
      if (!prev_on) phase = 0.0;
      require(freq_hz[t] >= 0.0, "apply_vibrato: negative vibrato frequency");
      out[t] += amp_cents[t] * std::sin(phase) * std::numbers::ln2 / 1200.0;
      phase += 2.0 * std::numbers::pi * freq_hz[t] * frame_shift;
    }
    prev_on = on;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Excitation.

// Voiced frames mix a pulse train (period = rate / f0 samples, phase carried
// across frames) with seeded white noise according to the frame's
// aperiodicity ratio; unvoiced frames are pure noise and reset the pulse
// phase. Every frame with nonzero content is scaled to unit RMS.
inline std::vector<double> make_excitation(std::span<const double> f0_hz,
                                           std::span<const double> voiced,
                                           std::span<const double> aperiodicity,
                                           double sample_rate, double frame_shift,
                                           std::uint64_t seed) {
  require(f0_hz.size() == voiced.size() && f0_hz.size() == aperiodicity.size(),
          "make_excitation: track length mismatch");
  require(sample_rate > 0.0 && frame_shift > 0.0, "make_excitation: bad timing");
  const double spf_exact = sample_rate * frame_shift;
  const std::size_t spf = static_cast<std::size_t>(std::llround(spf_exact));
  require(std::abs(spf_exact - static_cast<double>(spf)) < 1e-6,
          "make_excitation: frame shift times sample rate must be integral");

  const std::size_t T = f0_hz.size();
  std::vector<double> out(T * spf, 0.0);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double next_pulse = 0.0;  // absolute sample position of the next pulse
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t begin = t * spf;
    const std::size_t end = begin + spf;
    const bool v = voiced[t] >= 0.5;
    if (!v) {
      for (std::size_t s = begin; s < end; ++s) out[s] = gauss(rng);
      next_pulse = static_cast<double>(end);
    } else {
      if (!(f0_hz[t] > 0.0))
        fail("make_excitation: voiced frame " + std::to_string(t) + " with f0 <= 0");
      const double period = sample_rate / f0_hz[t];
      const double ap = std::clamp(aperiodicity[t], 0.0, 1.0);
      const double pulse_gain = std::sqrt(1.0 - ap) * std::sqrt(period);
      const double noise_gain = std::sqrt(ap);
      if (noise_gain > 0.0)
        for (std::size_t s = begin; s < end; ++s) out[s] = noise_gain * gauss(rng);
      while (next_pulse < static_cast<double>(end)) {
        if (next_pulse >= static_cast<double>(begin)) {
          const std::size_t s = static_cast<std::size_t>(next_pulse);
          out[s] += pulse_gain;
        }
        next_pulse += period;
      }
    }
    double energy = 0.0;
    for (std::size_t s = begin; s < end; ++s) energy += out[s] * out[s];
    if (energy > 0.0) {
      const double scale = 1.0 / std::sqrt(energy / static_cast<double>(spf));
      for (std::size_t s = begin; s < end; ++s) out[s] *= scale;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MLSA filter.

struct MlsaConfig {
  double alpha = 0.42;  // 0.42 at 16 kHz, 0.55 at 48 kHz
  int pade_order = 5;
  double sample_rate = 16000.0;
  double frame_shift = 0.005;

  void validate() const {
    require(alpha >= 0.0 && alpha < 1.0, "mlsa: alpha must lie in [0, 1)");
    require(pade_order == 4 || pade_order == 5, "mlsa: Pade order must be 4 or 5");
    require(sample_rate > 0.0 && frame_shift > 0.0, "mlsa: bad timing");
  }

  static double default_alpha(double sample_rate) {
    return sample_rate >= 32000.0 ? 0.55 : 0.42;
  }
};

inline std::span<const double> pade_coefficients(int order) {
  static const double pade4[] = {1.0, 4.999273e-1, 1.067005e-1, 1.170221e-2, 5.656279e-4};
  static const double pade5[] = {1.0, 4.999391e-1, 1.107098e-1, 1.369984e-2,
                                 9.564853e-4, 3.041721e-5};
  return order == 4 ? std::span<const double>(pade4) : std::span<const double>(pade5);
}

// mel-cepstrum -> filter coefficients b
inline void mcep_to_b(std::span<const double> c, double alpha, std::span<double> b) {
  require(c.size() == b.size() && !c.empty(), "mcep_to_b: size mismatch");
  const std::size_t M = c.size() - 1;
  b[M] = c[M];
  for (std::size_t m = M; m-- > 0;) b[m] = c[m] - alpha * b[m + 1];
}

class MlsaFilter {
 public:
  MlsaFilter(int order, double alpha, int pade_order)
      : order_(order), alpha_(alpha), pade_(pade_coefficients(pade_order)) {
    require(order_ >= 0, "mlsa: negative order");
    const std::size_t pd = pade_.size() - 1;
    d1_.assign(pd + 1, 0.0);
    t1_.assign(pd + 1, 0.0);
    fir_.assign(pd, std::vector<double>(static_cast<std::size_t>(order_) + 2, 0.0));
    t2_.assign(pd + 1, 0.0);
  }

  // Filters one sample with coefficients b (already converted; b[0] is the
  // log gain and is applied here).
  double step(double x, std::span<const double> b) {
    require(b.size() == static_cast<std::size_t>(order_) + 1, "mlsa: coefficient size mismatch");
    x *= std::exp(b[0]);
    if (order_ >= 1) x = stage1(x, b[1]);
    if (order_ >= 2) x = stage2(x, b);
    return x;
  }

 private:
  // exp(b1 * Phi_1) via the Pade feedback structure
  double stage1(double x, double b1) {
    const std::size_t pd = pade_.size() - 1;
    const double aa = 1.0 - alpha_ * alpha_;
    double out = 0.0;
    for (std::size_t i = pd; i >= 1; --i) {
      d1_[i] = aa * t1_[i - 1] + alpha_ * d1_[i];
      t1_[i] = d1_[i] * b1;
      const double v = t1_[i] * pade_[i];
      x += (i & 1) ? v : -v;
      out += v;
    }
    t1_[0] = x;
    return out + x;
  }

  // exp(sum_{m>=2} b(m) Phi_m) via per-tap warped FIR chains
  double stage2(double x, std::span<const double> b) {
    const std::size_t pd = pade_.size() - 1;
    double out = 0.0;
    for (std::size_t i = pd; i >= 1; --i) {
      t2_[i] = fir(t2_[i - 1], b, fir_[i - 1]);
      const double v = t2_[i] * pade_[i];
      x += (i & 1) ? v : -v;
      out += v;
    }
    t2_[0] = x;
    return out + x;
  }

  double fir(double x, std::span<const double> b, std::vector<double>& d) {
    const std::size_t M = static_cast<std::size_t>(order_);
    const double aa = 1.0 - alpha_ * alpha_;
    d[0] = x;
    d[1] = aa * d[0] + alpha_ * d[1];
    double y = 0.0;
    for (std::size_t m = 2; m <= M; ++m) {
      d[m] += alpha_ * (d[m + 1] - d[m - 1]);
      y += d[m] * b[m];
    }
    for (std::size_t m = M + 1; m > 1; --m) d[m] = d[m - 1];
    return y;
  }

  int order_;
  double alpha_;
  std::span<const double> pade_;
  std::vector<double> d1_, t1_, t2_;
  std::vector<std::vector<double>> fir_;
};

// Runs the MLSA filter over the excitation, with filter coefficients
// linearly interpolated between frame centers.
inline std::vector<double> mlsa_synthesize(const Matrix& mcep, std::span<const double> excitation,
                                           const MlsaConfig& cfg) {
  cfg.validate();
  require(mcep.rows() >= 1, "mlsa_synthesize: no frames");
  for (double v : mcep.values())
    require(std::isfinite(v), "mlsa_synthesize: non-finite cepstral coefficient");
  const std::size_t T = mcep.rows();
  const std::size_t M1 = mcep.cols();
  const std::size_t spf = static_cast<std::size_t>(std::llround(cfg.sample_rate * cfg.frame_shift));
  require(excitation.size() == T * spf,
          "mlsa_synthesize: excitation length must equal frames x shift samples");

  Matrix b(T, M1);
  std::vector<double> row(M1);
  for (std::size_t t = 0; t < T; ++t) {
    mcep_to_b(std::span<const double>(mcep.row(t), M1), cfg.alpha, row);
    std::copy(row.begin(), row.end(), b.row(t));
  }

  MlsaFilter filter(static_cast<int>(M1) - 1, cfg.alpha, cfg.pade_order);
  std::vector<double> bi(M1);
  std::vector<double> out(excitation.size());
  const double half = 0.5 * static_cast<double>(spf);
  for (std::size_t s = 0; s < excitation.size(); ++s) {
    const double pos = (static_cast<double>(s) - half) / static_cast<double>(spf);
    if (pos <= 0.0 || T == 1) {
      std::copy(b.row(0), b.row(0) + M1, bi.begin());
    } else if (pos >= static_cast<double>(T - 1)) {
      std::copy(b.row(T - 1), b.row(T - 1) + M1, bi.begin());
    } else {
      const std::size_t t0 = static_cast<std::size_t>(pos);
      const double u = pos - static_cast<double>(t0);
      for (std::size_t m = 0; m < M1; ++m) bi[m] = (1.0 - u) * b(t0, m) + u * b(t0 + 1, m);
    }
    out[s] = filter.step(excitation[s], bi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// WAV output.

// 16-bit little-endian PCM mono with the canonical 44-byte header. If the
// samples would clip, the whole take is scaled to peak at -1 dBFS.
inline void write_wav(const std::filesystem::path& path, std::span<const double> samples,
                      int sample_rate) {
  for (double s : samples) require(std::isfinite(s), "write_wav: non-finite sample");
  double peak = 0.0;
  for (double s : samples) peak = std::max(peak, std::abs(s));
  const double scale = peak > 1.0 ? std::pow(10.0, -1.0 / 20.0) / peak : 1.0;

  ByteWriter w;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  w.raw("RIFF", 4);
  w.u32(36 + data_bytes);
  w.raw("WAVE", 4);
  w.raw("fmt ", 4);
  w.u32(16);
  w.u32(1 | (1u << 16));  // PCM, mono
  w.u32(static_cast<std::uint32_t>(sample_rate));
  w.u32(static_cast<std::uint32_t>(sample_rate) * 2);
  w.u32(2 | (16u << 16));  // block align, bits per sample
  w.raw("data", 4);
  w.u32(data_bytes);
  for (double s : samples) {
    const long q = std::lround(std::clamp(s * scale, -1.0, 1.0) * 32767.0);
    const std::uint16_t u = static_cast<std::uint16_t>(static_cast<std::int16_t>(q));
    w.raw(&u, 2);
  }
  write_file_atomic(path, w.buffer());
}

// ---------------------------------------------------------------------------
// Full rendering path from an acoustic sequence.

inline std::vector<double> synthesize_waveform(const AcousticSequence& seq,
                                               std::uint64_t noise_seed = 1) {
  seq.validate();
  const AcousticLayout& lay = seq.layout;
  const std::size_t T = seq.frame_count();
  std::vector<double> lf0(T), amp(T), freq(T), flag(T), voiced(T), ap(T);
  for (std::size_t t = 0; t < T; ++t) {
    lf0[t] = seq.frames(t, lay.lf0_index());
    amp[t] = seq.frames(t, lay.vib_amp_index());
    freq[t] = std::max(0.0, seq.frames(t, lay.vib_freq_index()));
    flag[t] = seq.frames(t, lay.vib_flag_index());
    voiced[t] = seq.frames(t, lay.vuv_index());
    double mean_ap = 0.0;
    for (int bnd = 0; bnd < lay.aperiodicity_bands; ++bnd)
      mean_ap += seq.frames(t, lay.bap_begin() + static_cast<std::size_t>(bnd));
    ap[t] = mean_ap / lay.aperiodicity_bands;
  }
  std::vector<double> lf0_mod = apply_vibrato(lf0, amp, freq, flag, seq.frame_shift);
  std::vector<double> f0(T);
  for (std::size_t t = 0; t < T; ++t) f0[t] = std::exp(lf0_mod[t]);

  std::vector<double> excitation =
      make_excitation(f0, voiced, ap, seq.sample_rate, seq.frame_shift, noise_seed);

  Matrix mcep(T, lay.mcep_count());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < lay.mcep_count(); ++m)
      mcep(t, m) = seq.frames(t, lay.mcep_begin() + m);

  MlsaConfig cfg;
  cfg.sample_rate = seq.sample_rate;
  cfg.frame_shift = seq.frame_shift;
  cfg.alpha = MlsaConfig::default_alpha(seq.sample_rate);
  return mlsa_synthesize(mcep, excitation, cfg);
}

}  // namespace svs::vocoder
