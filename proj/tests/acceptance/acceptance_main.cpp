// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff all criteria pass.
//
//   acceptance [--only N] [--workdir DIR]

#include "svs/checkpoint.hpp"
#include "svs/corpus.hpp"
#include "svs/generate.hpp"
#include "svs/mlpg.hpp"
#include "svs/train.hpp"
#include "svs/vocoder.hpp"
#include "support/test_util.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <numbers>

using namespace svs;

namespace {

struct Context {
  std::filesystem::path workdir;
  std::filesystem::path corpus_dir;
  bool corpus_ready = false;
  Manifest manifest;

  const Manifest& default_corpus() {
    if (!corpus_ready) {
      CorpusConfig cfg;  // library defaults = the shipped corpus
      manifest = generate_corpus(cfg, corpus_dir, 1);
      corpus_ready = true;
    }
    return manifest;
  }
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

// ---------------------------------------------------------------------------
// 1. banded MLPG equals the dense normal-equation solve

void criterion_mlpg_oracle(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  WindowSet ws = default_windows();
  double worst = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t T = 1 + rng() % 32;
    const std::size_t D = 1 + rng() % 8;
    mlpg::GaussianSequence seq;
    seq.means = testutil::random_matrix(rng, T, 3 * D);
    seq.variances = testutil::random_matrix(rng, T, 3 * D, 0.05, 4.0);
    Matrix banded = mlpg::generate(seq, ws);
    Matrix dense = testutil::dense_mlpg(seq.means, seq.variances, ws);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        worst = std::max(worst, std::abs(banded(t, d) - dense(t, d)));
  }
  check(worst <= 1e-8, "max |banded - dense| = " + fmt_double(worst));
  check(elapsed_s(t0) < 5.0, "runtime " + fmt_double(elapsed_s(t0)) + " s exceeds 5 s");
}

// ---------------------------------------------------------------------------
// 2. finite-difference gradient suite over every layer and the loss

void criterion_gradients(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  const double tol = 1e-4;

  auto weighted = [](const SequenceTensor& y, const std::vector<double>& co) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) s += co[i] * y.v[i];
    return s;
  };

  // convolution variants: input, weight, and bias gradients
  for (auto mode : {nn::ConvMode::Same, nn::ConvMode::Down2, nn::ConvMode::Up2}) {
    for (int iter = 0; iter < 20; ++iter) {
      const int in_ch = 1 + static_cast<int>(rng() % 3);
      const int out_ch = 1 + static_cast<int>(rng() % 3);
      const int kernel = mode == nn::ConvMode::Same && iter % 2 == 0 ? 1 : 3;
      const std::size_t T = mode == nn::ConvMode::Down2 ? 8 : 7;
      nn::Conv1d op{in_ch, out_ch, kernel, mode};
      std::vector<double> w(op.weight_count()), b(op.bias_count());
      for (auto& v : w) v = uniform(rng, -1.0, 1.0);
      for (auto& v : b) v = uniform(rng, -0.5, 0.5);
      SequenceTensor x = testutil::random_tensor(rng, static_cast<std::size_t>(in_ch), T);
      SequenceTensor y0 = op.forward(x, w, b);
      std::vector<double> co(y0.v.size());
      for (auto& c : co) c = uniform(rng, -1.0, 1.0);
      SequenceTensor dy(y0.channels, y0.frames);
      for (std::size_t i = 0; i < dy.v.size(); ++i) dy.v[i] = co[i];
      std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
      SequenceTensor dx = op.backward(x, w, dy, dw, db);
      auto f = [&] { return weighted(op.forward(x, w, b), co); };
      check(testutil::gradient_mismatch(dx.v, testutil::fd_gradient(f, x.v)) < tol,
            "conv input gradient");
      check(testutil::gradient_mismatch(dw, testutil::fd_gradient(f, w)) < tol,
            "conv weight gradient");
      check(testutil::gradient_mismatch(db, testutil::fd_gradient(f, b)) < tol,
            "conv bias gradient");
    }
  }

  // activations and dropout (fixed mask)
  for (int iter = 0; iter < 20; ++iter) {
    SequenceTensor x = testutil::random_tensor(rng, 2, 6);
    for (auto& v : x.v)
      if (std::abs(v) < 1e-3) v += 0.01;
    std::vector<double> co(x.v.size());
    for (auto& c : co) c = uniform(rng, -1.0, 1.0);
    SequenceTensor dy(2, 6);
    for (std::size_t i = 0; i < dy.v.size(); ++i) dy.v[i] = co[i];

    SequenceTensor d_relu = nn::relu_backward(x, dy);
    auto f_relu = [&] { return weighted(nn::relu(x), co); };
    check(testutil::gradient_mismatch(d_relu.v, testutil::fd_gradient(f_relu, x.v)) < tol,
          "relu gradient");

    SequenceTensor y = nn::sigmoid(x);
    SequenceTensor d_sig = nn::sigmoid_backward(y, dy);
    auto f_sig = [&] { return weighted(nn::sigmoid(x), co); };
    check(testutil::gradient_mismatch(d_sig.v, testutil::fd_gradient(f_sig, x.v)) < tol,
          "sigmoid gradient");

    auto mask = nn::dropout_mask(x.v.size(), 0.25, rng);
    SequenceTensor d_drop = nn::apply_mask(dy, mask);
    auto f_drop = [&] { return weighted(nn::apply_mask(x, mask), co); };
    check(testutil::gradient_mismatch(d_drop.v, testutil::fd_gradient(f_drop, x.v)) < tol,
          "dropout gradient");
  }

  // residual block: conv(k) -> relu -> conv(k) plus the skip connection
  for (int iter = 0; iter < 20; ++iter) {
    const int ch = 2 + static_cast<int>(rng() % 2);
    nn::Conv1d conv{ch, ch, 3, nn::ConvMode::Same};
    std::vector<double> w1(conv.weight_count()), b1(conv.bias_count());
    std::vector<double> w2(conv.weight_count()), b2(conv.bias_count());
    for (auto* vec : {&w1, &w2})
      for (auto& v : *vec) v = uniform(rng, -0.7, 0.7);
    for (auto* vec : {&b1, &b2})
      for (auto& v : *vec) v = uniform(rng, -0.3, 0.3);
    SequenceTensor x = testutil::random_tensor(rng, static_cast<std::size_t>(ch), 6);
    auto block = [&] {
      SequenceTensor h1 = conv.forward(x, w1, b1);
      SequenceTensor h2 = conv.forward(nn::relu(h1), w2, b2);
      for (std::size_t i = 0; i < h2.v.size(); ++i) h2.v[i] += x.v[i];
      return h2;
    };
    SequenceTensor y0 = block();
    std::vector<double> co(y0.v.size());
    for (auto& c : co) c = uniform(rng, -1.0, 1.0);
    auto f = [&] { return weighted(block(), co); };

    SequenceTensor pre1 = conv.forward(x, w1, b1);
    SequenceTensor a1 = nn::relu(pre1);
    SequenceTensor dy(y0.channels, y0.frames);
    for (std::size_t i = 0; i < dy.v.size(); ++i) dy.v[i] = co[i];
    std::vector<double> dw1(w1.size(), 0.0), db1(b1.size(), 0.0);
    std::vector<double> dw2(w2.size(), 0.0), db2(b2.size(), 0.0);
    SequenceTensor da1 = conv.backward(a1, w2, dy, dw2, db2);
    SequenceTensor dpre1 = nn::relu_backward(pre1, da1);
    SequenceTensor dx = conv.backward(x, w1, dpre1, dw1, db1);
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dy.v[i];
    check(testutil::gradient_mismatch(dx.v, testutil::fd_gradient(f, x.v)) < tol,
          "residual block input gradient");
    check(testutil::gradient_mismatch(dw1, testutil::fd_gradient(f, w1)) < tol,
          "residual block first conv gradient");
    check(testutil::gradient_mismatch(dw2, testutil::fd_gradient(f, w2)) < tol,
          "residual block second conv gradient");
  }

  // trajectory NLL
  WindowSet ws = default_windows();
  for (int iter = 0; iter < 20; ++iter) {
    const std::size_t T = 1 + rng() % 6;
    const std::size_t D = 1 + rng() % 3;
    Matrix pred = testutil::random_matrix(rng, T, D);
    Matrix ref = testutil::random_matrix(rng, T, D);
    TiedCovariance cov;
    cov.floor = 1e-8;
    cov.variance.resize(3 * D);
    for (auto& v : cov.variance) v = uniform(rng, 0.05, 2.0);
    Matrix g = trajectory_nll_gradient(pred, ref, ws, cov);
    auto fd = testutil::fd_gradient([&] { return trajectory_nll(pred, ref, ws, cov); },
                                    pred.values());
    check(testutil::gradient_mismatch(g.values(), fd) < tol, "trajectory nll gradient");
  }

  check(elapsed_s(t0) < 30.0, "runtime " + fmt_double(elapsed_s(t0)) + " s exceeds 30 s");
}

// ---------------------------------------------------------------------------
// 3. gradient descent on the trajectory loss reaches the MLPG solution

void criterion_loss_mlpg_consistency(Context&) {
  Rng rng(3003);
  WindowSet ws = default_windows();
  for (int iter = 0; iter < 10; ++iter) {
    const std::size_t T = 2 + rng() % 7;
    const std::size_t D = 1 + rng() % 2;
    Matrix ref = testutil::random_matrix(rng, T, D);
    TiedCovariance cov;
    cov.floor = 1e-8;
    cov.variance.resize(3 * D);
    for (auto& v : cov.variance) v = uniform(rng, 0.05, 2.0);

    mlpg::GaussianSequence seq;
    seq.means = apply_windows(ref, ws);
    seq.variances = Matrix(T, 3 * D);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < 3 * D; ++j) seq.variances(t, j) = cov.variance[j];
    Matrix solved = mlpg::generate(seq, ws);

    Matrix c = testutil::random_matrix(rng, T, D);
    Matrix zero(T, D);
    for (int step = 0; step < 5000; ++step) {
      Matrix g = trajectory_nll_gradient(c, ref, ws, cov);
      double gnorm = 0.0;
      for (double v : g.values()) gnorm += v * v;
      if (gnorm < 1e-26) break;
      Matrix ag = trajectory_nll_gradient(g, zero, ws, cov);
      double gag = 0.0;
      for (std::size_t i = 0; i < g.values().size(); ++i)
        gag += g.values()[i] * ag.values()[i];
      const double alpha = gnorm / gag;
      for (std::size_t i = 0; i < c.values().size(); ++i)
        c.values()[i] -= alpha * g.values()[i];
    }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d)
        check(std::abs(c(t, d) - solved(t, d)) <= 1e-5,
              "descent/MLPG gap " + fmt_double(std::abs(c(t, d) - solved(t, d))));
  }
}

// ---------------------------------------------------------------------------
// 4. state-driven forward equals frame-driven forward; invocation counts

void criterion_state_frame_equivalence(Context&) {
  Rng rng(4004);
  ModelConfig cfg;
  cfg.input_dim = 5;
  cfg.position_dim = 5;
  cfg.static_dim = 4;
  cfg.ffnn_layers = 2;
  cfg.ffnn_width = 8;
  cfg.dropout_p = 0.0;
  cfg.cnn_channels = 6;
  cfg.residual_blocks = 1;
  Model model(cfg);
  Rng init(4005);
  model.init_params(init);

  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t T = 4 * (2 + rng() % 12);
    std::vector<StateSpan> spans;
    std::size_t cursor = 0, idx = 0;
    while (cursor < T) {
      std::size_t len = 1 + rng() % 7;
      if (cursor + len > T) len = T - cursor;
      spans.push_back({idx++, cursor, cursor + len});
      cursor += len;
    }
    const std::size_t N = spans.size();
    SequenceTensor state_in = testutil::random_tensor(rng, 5, N, 0.0, 1.0);
    SequenceTensor pos = testutil::random_tensor(rng, 5, T, 0.0, 1.0);
    SequenceTensor frame_in(5, T);
    for (const StateSpan& s : spans)
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t t = s.begin; t < s.end; ++t)
          frame_in.at(c, t) = state_in.at(c, s.state);

    model.reset_ffnn_invocations();
    SequenceTensor ys = model.forward_state(state_in, spans, pos, false, nullptr, nullptr);
    check(model.ffnn_invocations() == N, "state-mode invocations != state count");
    model.reset_ffnn_invocations();
    SequenceTensor yf = model.forward_frame(frame_in, pos, false, nullptr, nullptr);
    check(model.ffnn_invocations() == T, "frame-mode invocations != frame count");
    for (std::size_t i = 0; i < ys.v.size(); ++i)
      check(std::abs(ys.v[i] - yf.v[i]) <= 1e-10,
            "state/frame gap " + fmt_double(std::abs(ys.v[i] - yf.v[i])));
  }
}

// ---------------------------------------------------------------------------
// 5. analytic MAC reduction of the state-driven mode

void criterion_complexity_reduction(Context& ctx) {
  const Manifest& manifest = ctx.default_corpus();
  std::size_t frames = 0, states = 0;
  for (const auto& e : manifest.entries) {
    StateAlignment align = parse_alignment_file(ctx.corpus_dir / e.align_path);
    frames += e.frames;
    states += align.entries.size();
  }
  const double frames_per_state = static_cast<double>(frames) / states;
  std::cout << "    corpus: " << frames << " frames, " << states << " states ("
            << fmt_double(frames_per_state) << " frames/state)\n";

  ContextConfig ctxcfg;
  ctxcfg.inventory = manifest.inventory;
  ctxcfg.states_per_phoneme = manifest.states_per_phoneme;
  const int input_dim = static_cast<int>(ctxcfg.dim()) + 1;
  const int static_dim = static_cast<int>(manifest.layout.dim());

  const std::uint64_t frames_s = 200;  // one second at the 5 ms shift
  const std::uint64_t states_s = static_cast<std::uint64_t>(
      std::llround(frames_s / frames_per_state));

  bool small_ok = false;
  std::cout << "    config mode total_MACs ffnn_MACs cnn_MACs reduction\n";
  for (const std::string preset : {"small", "medium", "large"}) {
    ModelConfig cfg =
        model_preset(preset, input_dim, static_dim, manifest.layout.editable_indices());
    Model model(cfg);
    const std::uint64_t mf = model.macs_frame_mode(frames_s);
    const std::uint64_t ms = model.macs_state_mode(frames_s, states_s);
    const double reduction = 1.0 - static_cast<double>(ms) / static_cast<double>(mf);
    std::cout << "    " << preset << " frame " << mf << " " << model.macs_ffnn(frames_s) << " "
              << model.macs_cnn(frames_s) << " -\n";
    std::cout << "    " << preset << " state " << ms << " " << model.macs_ffnn(states_s) << " "
              << model.macs_cnn(frames_s) << " " << fmt_double(100.0 * reduction) << "%\n";
    check(ms < mf, preset + ": state-mode MACs not lower");
    if (preset == "small") small_ok = reduction >= 0.30;
  }
  check(small_ok, "small config reduction below 30%");
}

// ---------------------------------------------------------------------------
// 6. end-to-end learning on the default corpus

void criterion_end_to_end_learning(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const Manifest& manifest = ctx.default_corpus();
  ModelConfig arch = model_preset("medium", 1, static_cast<int>(manifest.layout.dim()),
                                  manifest.layout.editable_indices());
  arch.kind = ModelKind::Proposed;
  arch.mode = DriveMode::FrameDriven;
  TrainOptions opts;  // 30 epochs, seed 1, segment 2000
  std::vector<std::string> log;
  TrainedModel tm = train_model(ctx.corpus_dir, manifest, arch, opts, &log);
  check(!log.empty(), "no training log");
  const double first = parse_double(split_ws(log.front()).back(), "log");
  const double last = parse_double(split_ws(log.back()).back(), "log");
  check(last < first, "training NLL did not decrease");

  GenerateOptions gopts;
  HoldoutMetrics hm =
      evaluate_holdout(tm, ctx.corpus_dir, manifest, DriveMode::FrameDriven, gopts);
  std::cout << "    holdout rmse " << fmt_double(hm.rmse) << ", msd_pred "
            << fmt_double(hm.msd_pred) << ", msd_reference " << fmt_double(hm.msd_reference)
            << ", train time " << fmt_double(elapsed_s(t0)) << " s\n";
  check(hm.rmse <= 0.05, "held-out RMSE " + fmt_double(hm.rmse) + " exceeds 0.05");
  check(hm.msd_pred <= 1.2 * hm.msd_reference,
        "smoothness " + fmt_double(hm.msd_pred) + " exceeds 1.2x reference " +
            fmt_double(hm.msd_reference));
  check(elapsed_s(t0) < 600.0, "training exceeded 10 minutes");

  save_checkpoint(ctx.workdir / "proposed.ckpt", tm);
}

// ---------------------------------------------------------------------------
// 7. baseline FFNN+MLPG parity harness

void criterion_baseline_parity(Context& ctx) {
  const Manifest& manifest = ctx.default_corpus();
  ModelConfig arch;
  arch.kind = ModelKind::Baseline;
  arch.ffnn_layers = 3;
  arch.ffnn_width = 64;
  TrainOptions opts;
  opts.epochs = 10;
  std::vector<std::string> log;
  TrainedModel tm = train_model(ctx.corpus_dir, manifest, arch, opts, &log);
  check(parse_double(split_ws(log.back()).back(), "log") <
            parse_double(split_ws(log.front()).back(), "log"),
        "baseline MSE did not decrease");

  double msd_raw = 0.0, msd_smoothed = 0.0;
  std::size_t songs = 0;
  for (const ManifestEntry* e : manifest.split(false)) {
    Score score = parse_score_file(ctx.corpus_dir / e->score_path);
    StateAlignment align = parse_alignment_file(ctx.corpus_dir / e->align_path);
    SequenceInputs in = build_sequence_inputs(score, align, tm);
    SequenceTensor pred =
        tm.model->forward_baseline(to_tensor(in.features), false, nullptr, nullptr);
    Matrix means = denormalize(to_matrix(pred), tm.dynamic_stats);
    Matrix raw(means.rows(), manifest.layout.dim());
    for (std::size_t t = 0; t < means.rows(); ++t)
      for (std::size_t d = 0; d < raw.cols(); ++d) raw(t, d) = means(t, d);
    GenerateOptions gopts;
    AcousticSequence smoothed =
        synthesize_features(score, align, tm, DriveMode::FrameDriven, true, gopts);
    msd_raw += mean_squared_delta(raw);
    msd_smoothed += mean_squared_delta(smoothed.frames);
    ++songs;
  }
  check(songs > 0, "no held-out songs");
  std::cout << "    baseline msd: raw " << fmt_double(msd_raw / songs) << ", post-MLPG "
            << fmt_double(msd_smoothed / songs) << "\n";
  check(msd_smoothed < msd_raw, "MLPG did not smooth the baseline outputs");
}

// ---------------------------------------------------------------------------
// 8. segment cross-fade assembly

void criterion_segment_assembly(Context&) {
  Rng rng(8008);
  // blend weights sum to exactly one over random plans
  for (int iter = 0; iter < 50; ++iter) {
    const std::size_t seg = 4 * (2 + rng() % 40);
    const std::size_t ov = 4 * (rng() % (seg / 4));
    const std::size_t T = 1 + rng() % 600;
    auto weights = blend_weights(plan_segments(T, seg, ov));
    for (const auto& frame : weights) {
      double sum = 0.0;
      for (const auto& [si, w] : frame) sum += w;
      check(sum == 1.0, "blend weights sum to " + fmt_double(sum));
    }
  }

  // single-segment vs multi-segment inference agreement inside the field
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.position_dim = 5;
  cfg.static_dim = 3;
  cfg.ffnn_layers = 2;
  cfg.ffnn_width = 6;
  cfg.dropout_p = 0.0;
  cfg.cnn_channels = 6;
  cfg.residual_blocks = 1;
  Model model(cfg);
  Rng init(8009);
  model.init_params(init);

  const std::size_t T = 600;
  SequenceInputs in;
  in.ffnn_dim = 4;
  in.features = testutil::random_matrix(rng, T, 9, 0.0, 1.0);
  Matrix full = infer_segments(model, in, plan_segments(T, 600, 0), DriveMode::FrameDriven, 1);
  SegmentPlan pieces = plan_segments(T, 200, 40);
  Matrix assembled = infer_segments(model, in, pieces, DriveMode::FrameDriven, 1);
  const long hw = (model.receptive_field() - 1) / 2;
  auto weights = blend_weights(pieces);
  std::size_t compared = 0;
  for (std::size_t f = 0; f < T; ++f) {
    bool inside = true;
    for (const auto& [si, w] : weights[f]) {
      const Segment& s = pieces.segments[si];
      if (static_cast<long>(f) - hw < static_cast<long>(s.start) ||
          static_cast<long>(f) + hw >= static_cast<long>(s.covered_end(T)))
        inside = false;
    }
    if (!inside) continue;
    ++compared;
    for (std::size_t d = 0; d < 3; ++d)
      check(std::abs(assembled(f, d) - full(f, d)) <= 1e-10,
            "segment gap " + fmt_double(std::abs(assembled(f, d) - full(f, d))));
  }
  check(compared > 0, "no frames with in-segment receptive fields");
}

// ---------------------------------------------------------------------------
// 9. vocoder sanity

void criterion_vocoder(Context& ctx) {
  using namespace svs::vocoder;
  Rng rng(9009);

  // all-zero cepstra pass the excitation through unchanged
  {
    MlsaConfig cfg;
    Matrix mcep(6, 10);
    std::vector<double> x(6 * 80);
    for (auto& v : x) v = uniform(rng, -1.0, 1.0);
    auto y = mlsa_synthesize(mcep, x, cfg);
    for (std::size_t i = 0; i < x.size(); ++i)
      check(y[i] == x[i], "zero-cepstra pass-through differs");
  }

  // magnitude response vs the frequency-domain oracle, 100 Hz .. 6 kHz
  {
    MlsaConfig cfg;
    const int M = 12;
    std::vector<double> c(M + 1);
    c[0] = 0.3;
    for (int m = 1; m <= M; ++m)
      c[static_cast<std::size_t>(m)] = uniform(rng, -0.25, 0.25) / (1.0 + 0.6 * m);
    const std::size_t frames = 64;
    Matrix mcep(frames, static_cast<std::size_t>(M) + 1);
    for (std::size_t t = 0; t < frames; ++t)
      for (int m = 0; m <= M; ++m)
        mcep(t, static_cast<std::size_t>(m)) = c[static_cast<std::size_t>(m)];
    std::vector<double> impulse(frames * 80, 0.0);
    impulse[0] = 1.0;
    auto h = mlsa_synthesize(mcep, impulse, cfg);
    for (double f_hz = 100.0; f_hz <= 6000.0; f_hz += 295.0) {
      const double omega = 2.0 * std::numbers::pi * f_hz / cfg.sample_rate;
      const double measured = testutil::dft_magnitude(h, omega);
      const double beta =
          omega + 2.0 * std::atan(cfg.alpha * std::sin(omega) / (1.0 - cfg.alpha * std::cos(omega)));
      double log_mag = 0.0;
      for (int m = 0; m <= M; ++m) log_mag += c[static_cast<std::size_t>(m)] * std::cos(m * beta);
      const double db = 20.0 * std::log10(measured / std::exp(log_mag));
      check(std::abs(db) < 0.5,
            "MLSA response off by " + fmt_double(db) + " dB at " + fmt_double(f_hz) + " Hz");
    }
  }

  // WAV round trip within 1 LSB
  {
    std::vector<double> samples(2000);
    for (auto& s : samples) s = uniform(rng, -0.99, 0.99);
    const auto path = ctx.workdir / "acceptance_rt.wav";
    write_wav(path, samples, 16000);
    auto back = testutil::read_wav(path);
    check(back.samples.size() == samples.size(), "wav round trip changed the length");
    for (std::size_t i = 0; i < samples.size(); ++i)
      check(std::abs(back.samples[i] - samples[i]) <= 1.0 / 32767.0,
            "wav round trip beyond 1 LSB");
  }
}

// ---------------------------------------------------------------------------
// 10. byte-identical gen-corpus and train under a fixed seed

void criterion_determinism(Context& ctx) {
  namespace fs = std::filesystem;
  const std::string cli = SVS_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "cli failed: " + args);
  };

  const fs::path a = ctx.workdir / "det_a", b = ctx.workdir / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string gen_flags = " --songs 4 --notes 6 --seed 313 --inventory 6";
  run("--threads 1 gen-corpus --out " + a.string() + gen_flags);
  run("--threads 1 gen-corpus --out " + b.string() + gen_flags);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    check(read_file(entry.path()) == read_file(b / rel),
          "gen-corpus differs at " + rel.string());
  }
  check(files > 0, "gen-corpus wrote nothing");

  const std::string train_flags = " --epochs 2 --seed 11 --segment 400 --preset small";
  run("--threads 1 train --corpus " + a.string() + " --out " + (a / "m.ckpt").string() +
      train_flags);
  run("--threads 1 train --corpus " + a.string() + " --out " + (b / "m.ckpt").string() +
      train_flags);
  check(read_file(a / "m.ckpt") == read_file(b / "m.ckpt"), "train checkpoints differ");
  check(read_file(a / "m.ckpt.log") == read_file(b / "m.ckpt.log"), "train logs differ");
}

struct Criterion {
  int id;
  std::string name;
  void (*fn)(Context&);
};

const Criterion kCriteria[] = {
    {1, "MLPG banded solve matches the dense normal-equation oracle (1e-8)",
     criterion_mlpg_oracle},
    {2, "finite-difference gradient suite over all layers and the trajectory loss (1e-4)",
     criterion_gradients},
    {3, "gradient descent on the trajectory loss reaches the MLPG solution (1e-5)",
     criterion_loss_mlpg_consistency},
    {4, "state-driven forward equals frame-driven forward (1e-10), invocations == states",
     criterion_state_frame_equivalence},
    {5, "state-driven MAC reduction: >= 30% (small config), positive everywhere",
     criterion_complexity_reduction},
    {6, "30-epoch training reaches held-out RMSE <= 0.05 and 1.2x reference smoothness",
     criterion_end_to_end_learning},
    {7, "baseline FFNN+MLPG runs; MLPG output smoother than raw frame output",
     criterion_baseline_parity},
    {8, "cross-fade weights sum to 1; multi-segment equals single-segment (1e-10)",
     criterion_segment_assembly},
    {9, "vocoder: pass-through, 0.5 dB MLSA response, 1-LSB WAV round trip",
     criterion_vocoder},
    {10, "gen-corpus and train are byte-identical under a fixed seed", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::filesystem::path workdir = std::filesystem::temp_directory_path() / "svs_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    if (arg == "--workdir" && i + 1 < argc) workdir = argv[++i];
  }
  std::filesystem::create_directories(workdir);
  Context ctx;
  ctx.workdir = workdir;
  ctx.corpus_dir = workdir / "default_corpus";
  std::filesystem::remove_all(ctx.corpus_dir);

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(ctx);
      std::cout << "[PASS] criterion " << c.id << ": " << c.name << " ("
                << fmt_double(elapsed_s(t0)) << " s)\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] criterion " << c.id << ": " << c.name << " -- " << e.what() << "\n";
    }
    std::cout.flush();
  }
  if (failures > 0) std::cout << failures << " criterion(s) failed\n";
  return failures == 0 ? 0 : 1;
}
