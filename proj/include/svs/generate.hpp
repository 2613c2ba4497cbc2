#pragma once

// Segment planning, cross-faded assembly of segment outputs, and the
// end-to-end score -> acoustic-feature synthesis paths (direct network
// output for the proposed modes, FFNN + MLPG for the baseline).

#include "svs/checkpoint.hpp"
#include "svs/mlpg.hpp"

namespace svs {

struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;  // multiple of the model frame multiple (4)

  std::size_t covered_end(std::size_t total) const { return std::min(start + length, total); }
};

struct SegmentPlan {
  std::size_t total_frames = 0;
  std::size_t seg_len = 0;
  std::size_t overlap = 0;
  std::vector<Segment> segments;
};

inline std::size_t round_up4(std::size_t n) { return (n + 3) / 4 * 4; }

// Consecutive segments share `overlap` frames; the final segment is padded
// up to stride divisibility and the padding is discarded at assembly.
// Segment starts stay on a grid of multiples of 4 so the two stride-2
// stages see the same phase in every segment; this is what makes
// single-segment and multi-segment inference agree away from boundaries,
// and it is why seg_len and overlap must both divide by 4.
inline SegmentPlan plan_segments(std::size_t total_frames, std::size_t seg_len,
                                 std::size_t overlap) {
  require(total_frames >= 1, "plan_segments: empty sequence");
  require(seg_len >= 4 && seg_len % 4 == 0, "plan_segments: segment length must divide by 4");
  require(overlap < seg_len, "plan_segments: overlap must be smaller than the segment");
  require(overlap % 4 == 0, "plan_segments: overlap must divide by 4");
  SegmentPlan plan;
  plan.total_frames = total_frames;
  plan.seg_len = seg_len;
  plan.overlap = overlap;
  if (total_frames <= seg_len) {
    plan.segments.push_back({0, round_up4(total_frames)});
    return plan;
  }
  const std::size_t hop = seg_len - overlap;
  std::vector<std::size_t> starts{0};
  while (starts.back() + seg_len < total_frames) starts.push_back(starts.back() + hop);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t len =
        i + 1 < starts.size() ? seg_len : std::min(seg_len, round_up4(total_frames - starts[i]));
    plan.segments.push_back({starts[i], len});
  }
  return plan;
}

// Per-frame (segment, weight) contributions. Overlaps ramp the incoming
// segment with weights (j + 0.5) / overlap while the accumulated earlier
// segments scale by the complement; the earliest contributor is then set to
// one minus the rest, so the weights sum to exactly 1 at every frame.
inline std::vector<std::vector<std::pair<std::size_t, double>>> blend_weights(
    const SegmentPlan& plan) {
  std::vector<std::vector<std::pair<std::size_t, double>>> w(plan.total_frames);
  std::size_t covered = 0;
  for (std::size_t si = 0; si < plan.segments.size(); ++si) {
    const Segment& seg = plan.segments[si];
    const std::size_t end = seg.covered_end(plan.total_frames);
    require(seg.start <= covered, "blend_weights: plan leaves a gap");
    const std::size_t ov = si == 0 ? 0 : covered - seg.start;
    for (std::size_t f = seg.start; f < end; ++f) {
      if (f >= covered) {
        w[f].push_back({si, 1.0});
        continue;
      }
      const double ramp = (static_cast<double>(f - seg.start) + 0.5) / static_cast<double>(ov);
      for (auto& entry : w[f]) entry.second *= 1.0 - ramp;
      w[f].push_back({si, ramp});
    }
    covered = std::max(covered, end);
  }
  require(covered == plan.total_frames, "blend_weights: plan does not cover the sequence");
  // the newest contributor absorbs the floating-point slack, so summing the
  // weights in list order yields exactly 1.0
  for (auto& frame : w) {
    if (frame.size() < 2) continue;
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < frame.size(); ++i) head += frame[i].second;
    frame.back().second = 1.0 - head;
  }
  return w;
}

// Blends per-segment outputs into the full sequence. Frames with a single
// contributor are copied verbatim.
inline Matrix crossfade_assemble(std::span<const Matrix> outputs, const SegmentPlan& plan) {
  require(outputs.size() == plan.segments.size(), "crossfade: segment count mismatch");
  require(!outputs.empty(), "crossfade: no segments");
  const std::size_t D = outputs[0].cols();
  for (std::size_t i = 0; i < outputs.size(); ++i)
    require(outputs[i].rows() == plan.segments[i].length && outputs[i].cols() == D,
            "crossfade: segment output shape mismatch");
  auto weights = blend_weights(plan);
  Matrix out(plan.total_frames, D);
  for (std::size_t f = 0; f < plan.total_frames; ++f) {
    const auto& contrib = weights[f];
    if (contrib.size() == 1) {
      const Segment& seg = plan.segments[contrib[0].first];
      std::copy(outputs[contrib[0].first].row(f - seg.start),
                outputs[contrib[0].first].row(f - seg.start) + D, out.row(f));
      continue;
    }
    for (const auto& [si, wv] : contrib) {
      const std::size_t local = f - plan.segments[si].start;
      for (std::size_t d = 0; d < D; ++d) out(f, d) += wv * outputs[si](local, d);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segment-sliced inference.

// Normalized frame-level inputs for one whole sequence.
struct SequenceInputs {
  Matrix features;        // T x (ffnn_dim + position_dim), normalized
  Matrix state_features;  // N x ffnn_dim, normalized (state-driven mode)
  std::vector<StateSpan> spans;  // global frame spans tiling [0, T)
  std::size_t ffnn_dim = 0;
};

namespace detail {

// Rows [start, start+len) of `m`, transposed to channels x len; rows past
// the end replicate the final frame (the padding of the last segment).
inline SequenceTensor slice_columns(const Matrix& m, std::size_t col_begin, std::size_t col_end,
                                    std::size_t start, std::size_t len) {
  SequenceTensor out(col_end - col_begin, len);
  for (std::size_t j = 0; j < len; ++j) {
    const std::size_t r = std::min(start + j, m.rows() - 1);
    for (std::size_t c = col_begin; c < col_end; ++c) out.at(c - col_begin, j) = m(r, c);
  }
  return out;
}

struct LocalSpans {
  SequenceTensor states;         // subset of state vectors, channels x n
  std::vector<StateSpan> spans;  // local frame coordinates
};

// Clips the global span list to segment [start, start+len) and packs the
// touched state vectors. Pad frames past the sequence extend the last span.
inline LocalSpans slice_spans(const Matrix& state_features, std::span<const StateSpan> spans,
                              std::size_t start, std::size_t len, std::size_t total_frames) {
  LocalSpans out;
  std::vector<std::size_t> picked;
  const std::size_t end = std::min(start + len, total_frames);
  for (const StateSpan& s : spans) {
    if (s.end <= start || s.begin >= end) continue;
    StateSpan local;
    local.state = picked.size();
    local.begin = std::max(s.begin, start) - start;
    local.end = std::min(s.end, end) - start;
    picked.push_back(s.state);
    out.spans.push_back(local);
  }
  require(!out.spans.empty(), "segment covers no states");
  out.spans.back().end = len;  // absorb tail padding
  out.states = SequenceTensor(state_features.cols(), picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i)
    for (std::size_t c = 0; c < state_features.cols(); ++c)
      out.states.at(c, i) = state_features(picked[i], c);
  return out;
}

}  // namespace detail

// Runs the proposed model over every planned segment (in parallel when
// asked) and cross-fades the outputs. Returns normalized statics, T x D.
inline Matrix infer_segments(const Model& model, const SequenceInputs& in,
                             const SegmentPlan& plan, DriveMode mode, int threads = 1) {
  const std::size_t P = static_cast<std::size_t>(model.config().position_dim);
  require(in.features.cols() == in.ffnn_dim + P, "infer_segments: feature column mismatch");
  std::vector<Matrix> outputs(plan.segments.size());
  parallel_for(plan.segments.size(), threads, [&](std::size_t si) {
    const Segment& seg = plan.segments[si];
    SequenceTensor positions =
        detail::slice_columns(in.features, in.ffnn_dim, in.features.cols(), seg.start, seg.length);
    SequenceTensor y;
    if (mode == DriveMode::FrameDriven) {
      SequenceTensor ffnn_in =
          detail::slice_columns(in.features, 0, in.ffnn_dim, seg.start, seg.length);
      y = model.forward_frame(ffnn_in, positions, false, nullptr, nullptr);
    } else {
      auto local = detail::slice_spans(in.state_features, in.spans, seg.start, seg.length,
                                       plan.total_frames);
      y = model.forward_state(local.states, local.spans, positions, false, nullptr, nullptr);
    }
    outputs[si] = to_matrix(y);
  });
  return crossfade_assemble(outputs, plan);
}

// ---------------------------------------------------------------------------
// Full synthesis paths.

struct GenerateOptions {
  std::size_t seg_len = 2000;
  std::size_t overlap = 100;
  int threads = 1;
};

// Assembles normalized inputs for a scored and aligned song.
inline SequenceInputs build_sequence_inputs(const Score& score, const StateAlignment& align,
                                            const TrainedModel& tm) {
  FrameFeatures ff = build_frame_features(score, align, tm.context);
  require(ff.values.cols() == tm.input_stats.dim(),
          "checkpoint/feature mismatch: input column count");
  SequenceInputs in;
  in.ffnn_dim = ff.ffnn_dim;
  in.features = normalize(ff.values, tm.input_stats);
  NormalizationStats ffnn_stats = slice_stats(tm.input_stats, 0, ff.ffnn_dim);
  in.state_features = normalize(ff.state_values, ffnn_stats);
  in.spans.reserve(align.entries.size());
  for (std::size_t i = 0; i < align.entries.size(); ++i)
    in.spans.push_back({i, align.entries[i].begin, align.entries[i].end});
  return in;
}

inline AcousticSequence synthesize_features(const Score& score, const StateAlignment& align,
                                            const TrainedModel& tm, DriveMode mode,
                                            bool baseline_mlpg, const GenerateOptions& opts) {
  require(tm.model != nullptr, "synthesize_features: checkpoint has no model");
  const bool is_baseline = tm.config.kind == ModelKind::Baseline;
  require(is_baseline == baseline_mlpg,
          "checkpoint/config mismatch: baseline path needs a baseline checkpoint");
  SequenceInputs in = build_sequence_inputs(score, align, tm);
  const std::size_t T = in.features.rows();

  Matrix statics_raw;
  if (baseline_mlpg) {
    // frame-wise FFNN -> denormalized static+dynamic means -> MLPG
    SequenceTensor full = to_tensor(in.features);
    SequenceTensor pred = tm.model->forward_baseline(full, false, nullptr, nullptr);
    Matrix means = denormalize(to_matrix(pred), tm.dynamic_stats);
    mlpg::GaussianSequence seq;
    seq.means = std::move(means);
    seq.variances = Matrix(T, tm.covariance.variance.size());
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < tm.covariance.variance.size(); ++d)
        seq.variances(t, d) = tm.covariance.variance[d];
    statics_raw = mlpg::generate(seq, tm.windows);
  } else {
    SegmentPlan plan = plan_segments(T, opts.seg_len, opts.overlap);
    Matrix statics_norm = infer_segments(*tm.model, in, plan, mode, opts.threads);
    statics_raw = denormalize(statics_norm, tm.static_stats);
  }

  AcousticSequence seq;
  seq.layout = tm.layout;
  seq.frame_shift = tm.frame_shift;
  seq.sample_rate = tm.sample_rate;
  for (std::size_t idx : tm.layout.flag_indices())
    for (std::size_t t = 0; t < T; ++t)
      statics_raw(t, idx) = statics_raw(t, idx) >= 0.5 ? 1.0 : 0.0;
  seq.frames = std::move(statics_raw);
  seq.validate();
  return seq;
}

}  // namespace svs
