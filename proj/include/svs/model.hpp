#pragma once

// The three architectures under study, assembled from the kernel set:
//
//  * baseline: a frame-wise FFNN (1x1 convolutions) predicting
//    static+delta+delta-delta features per frame, later smoothed by MLPG
//  * proposed, frame-driven: frame-wise FFNN part feeding a segment-level
//    fully convolutional part (2x down-sampling stages, residual blocks,
//    2x up-sampling stages, sigmoid heads over the static channels)
//  * proposed, state-driven: the FFNN part runs once per alignment state,
//    its outputs are expanded to frames and concatenated with per-frame
//    position features before the convolutional part
//
// The convolutional part can be split into a small head regenerating the
// editable channels (c0, log-F0, vibrato amplitude/frequency) and a large
// head for everything else; both consume the same FFNN-part output.

#include "svs/nn.hpp"

namespace svs {

enum class ModelKind { Baseline, Proposed };
enum class DriveMode { FrameDriven, StateDriven };

struct SplitSpec {
  bool enabled = false;
  std::vector<std::size_t> head1_dims;  // static indices served by the small head
  int head1_channels = 16;
  int head1_blocks = 9;
};

struct ModelConfig {
  ModelKind kind = ModelKind::Proposed;
  DriveMode mode = DriveMode::FrameDriven;
  int input_dim = 0;     // FFNN-part input columns (context + note log-F0)
  int position_dim = 5;  // appended at the convolutional part's input
  int static_dim = 0;
  int ffnn_layers = 3;
  int ffnn_width = 64;
  double dropout_p = 0.2;
  int cnn_channels = 64;
  int residual_blocks = 9;
  int filter_size = 3;
  int window_count = 3;  // baseline output width = window_count * static_dim
  SplitSpec split;

  int down_up_layers() const { return 2; }
  // two stride-2 stages; segment lengths must divide by this
  int frame_multiple() const { return 4; }

  void validate() const {
    require(input_dim >= 1 && static_dim >= 1, "model config: missing dimensions");
    require(position_dim >= 0, "model config: negative position dim");
    require(ffnn_layers >= 1 && ffnn_width >= 1, "model config: bad FFNN shape");
    require(cnn_channels >= 1 && residual_blocks >= 0, "model config: bad CNN shape");
    require(filter_size >= 1 && filter_size % 2 == 1, "model config: filter size must be odd");
    require(dropout_p >= 0.0 && dropout_p < 1.0, "model config: dropout must lie in [0,1)");
    if (split.enabled) {
      require(!split.head1_dims.empty(), "model config: split head has no channels");
      std::vector<bool> seen(static_cast<std::size_t>(static_dim), false);
      for (std::size_t d : split.head1_dims) {
        require(d < static_cast<std::size_t>(static_dim), "model config: split index out of range");
        require(!seen[d], "model config: duplicate split index");
        seen[d] = true;
      }
      require(split.head1_dims.size() < static_cast<std::size_t>(static_dim),
              "model config: split head must leave channels for the main head");
    }
  }
};

struct StateSpan {
  std::size_t state = 0;  // column in the state-level input
  std::size_t begin = 0;  // local frame range inside the segment
  std::size_t end = 0;
};

// ---------------------------------------------------------------------------

class Model {
 public:
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build();
  }

  Model(Model&& other) noexcept
      : cfg_(std::move(other.cfg_)),
        params_(std::move(other.params_)),
        ffnn_(std::move(other.ffnn_)),
        heads_(std::move(other.heads_)),
        baseline_out_(std::move(other.baseline_out_)),
        ffnn_invocations_(other.ffnn_invocations_.load()) {}

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  std::uint64_t ffnn_invocations() const { return ffnn_invocations_.load(); }
  void reset_ffnn_invocations() { ffnn_invocations_.store(0); }

  // He-uniform for ReLU layers, Xavier-uniform for the sigmoid output heads.
  void init_params(Rng& rng) {
    for (const ConvSlot& c : ffnn_)
      nn::init_he_uniform(params_.slots[c.w_slot], c.op.in_ch * c.op.kernel, rng);
    for (const Head& h : heads_) {
      for (const ConvSlot& c : h.down)
        nn::init_he_uniform(params_.slots[c.w_slot], c.op.in_ch * c.op.kernel, rng);
      const double branch_scale =
          h.blocks.empty() ? 1.0 : 1.0 / std::sqrt(2.0 * static_cast<double>(h.blocks.size()));
      for (const auto& blk : h.blocks) {
        nn::init_he_uniform(params_.slots[blk[0].w_slot], blk[0].op.in_ch * blk[0].op.kernel,
                            rng);
        nn::init_he_uniform(params_.slots[blk[1].w_slot], blk[1].op.in_ch * blk[1].op.kernel,
                            rng, branch_scale);
      }
      for (const ConvSlot& c : h.up)
        nn::init_he_uniform(params_.slots[c.w_slot], c.op.in_ch * c.op.kernel, rng);
      nn::init_xavier_uniform(params_.slots[h.out.w_slot], h.out.op.in_ch * h.out.op.kernel,
                              h.out.op.out_ch, rng);
    }
    if (cfg_.kind == ModelKind::Baseline)
      nn::init_xavier_uniform(params_.slots[baseline_out_.w_slot],
                              baseline_out_.op.in_ch, baseline_out_.op.out_ch, rng);
  }

  struct Trace {
    DriveMode mode = DriveMode::FrameDriven;
    bool training = false;
    // FFNN part
    SequenceTensor ffnn_input;
    std::vector<SequenceTensor> ffnn_pre;
    std::vector<SequenceTensor> ffnn_act;  // post ReLU (+dropout when training)
    std::vector<std::vector<double>> dropout_masks;
    // state expansion
    std::vector<StateSpan> spans;
    std::size_t segment_frames = 0;
    // convolutional part
    SequenceTensor cnn_input;
    struct HeadTrace {
      std::vector<SequenceTensor> down_pre, down_act;
      std::vector<SequenceTensor> block_in;  // R+1 entries; last feeds the up stack
      std::vector<SequenceTensor> block_pre1, block_act1;
      std::vector<SequenceTensor> up_pre, up_act;
      SequenceTensor out;  // post sigmoid
    };
    std::vector<HeadTrace> heads;
    SequenceTensor baseline_pre;
    SequenceTensor output;
  };

  // Proposed model, frame-driven: the FFNN part maps every frame.
  SequenceTensor forward_frame(const SequenceTensor& ffnn_in, const SequenceTensor& positions,
                               bool training, Rng* rng, Trace* trace) const {
    require(cfg_.kind == ModelKind::Proposed, "forward_frame: baseline model");
    require(positions.channels == static_cast<std::size_t>(cfg_.position_dim) &&
                positions.frames == ffnn_in.frames,
            "forward_frame: position shape mismatch");
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.mode = DriveMode::FrameDriven;
    tr.training = training;
    tr.segment_frames = ffnn_in.frames;
    SequenceTensor f = run_ffnn(ffnn_in, training, rng, tr);
    ffnn_invocations_.fetch_add(ffnn_in.frames);
    tr.cnn_input = concat_channels(f, positions);
    return run_heads(tr);
  }

  // Proposed model, state-driven: the FFNN part runs once per state, its
  // output is repeated over each state's frames.
  SequenceTensor forward_state(const SequenceTensor& state_in, std::span<const StateSpan> spans,
                               const SequenceTensor& positions, bool training, Rng* rng,
                               Trace* trace) const {
    require(cfg_.kind == ModelKind::Proposed, "forward_state: baseline model");
    require(positions.channels == static_cast<std::size_t>(cfg_.position_dim),
            "forward_state: position channel mismatch");
    const std::size_t T = positions.frames;
    validate_spans(spans, state_in.frames, T);
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.mode = DriveMode::StateDriven;
    tr.training = training;
    tr.segment_frames = T;
    tr.spans.assign(spans.begin(), spans.end());
    SequenceTensor f = run_ffnn(state_in, training, rng, tr);
    ffnn_invocations_.fetch_add(state_in.frames);
    SequenceTensor expanded(f.channels, T);
    for (const StateSpan& s : spans)
      for (std::size_t c = 0; c < f.channels; ++c) {
        double* row = expanded.channel(c);
        const double v = f.at(c, s.state);
        std::fill(row + s.begin, row + s.end, v);
      }
    tr.cnn_input = concat_channels(expanded, positions);
    return run_heads(tr);
  }

  // Baseline FFNN: frame-wise prediction of static+dynamic features.
  SequenceTensor forward_baseline(const SequenceTensor& full_in, bool training, Rng* rng,
                                  Trace* trace) const {
    require(cfg_.kind == ModelKind::Baseline, "forward_baseline: not a baseline model");
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.mode = DriveMode::FrameDriven;
    tr.training = training;
    tr.segment_frames = full_in.frames;
    SequenceTensor f = run_ffnn(full_in, training, rng, tr);
    ffnn_invocations_.fetch_add(full_in.frames);
    tr.baseline_pre = conv_forward(baseline_out_, f);
    tr.output = nn::sigmoid(tr.baseline_pre);
    return tr.output;
  }

  // dL/d(output) -> parameter gradients. The trace must come from the
  // matching forward call; position-feature gradients are discarded.
  void backward(const Trace& tr, const SequenceTensor& d_output, nn::Gradients& grads) const {
    if (cfg_.kind == ModelKind::Baseline) {
      require(d_output.same_shape(tr.output), "backward: gradient shape mismatch");
      SequenceTensor d_pre = nn::sigmoid_backward(tr.output, d_output);
      SequenceTensor d_f =
          conv_backward(baseline_out_, ffnn_top_input(tr), d_pre, grads);
      backward_ffnn(tr, d_f, grads);
      return;
    }
    require(d_output.channels == static_cast<std::size_t>(cfg_.static_dim) &&
                d_output.frames == tr.segment_frames,
            "backward: gradient shape mismatch");
    SequenceTensor d_cnn_in(tr.cnn_input.channels, tr.cnn_input.frames);
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      // slice this head's rows from the full output gradient
      const Head& head = heads_[h];
      SequenceTensor d_head(head.dims.size(), tr.segment_frames);
      for (std::size_t i = 0; i < head.dims.size(); ++i)
        std::copy(d_output.channel(head.dims[i]),
                  d_output.channel(head.dims[i]) + tr.segment_frames, d_head.channel(i));
      backward_head(head, tr.heads[h], tr.cnn_input, d_head, grads, d_cnn_in);
    }
    // drop the position channels, keep the FFNN-part slice
    const std::size_t width = static_cast<std::size_t>(cfg_.ffnn_width);
    SequenceTensor d_f(width, tr.cnn_input.frames);
    std::copy(d_cnn_in.v.begin(), d_cnn_in.v.begin() + width * tr.cnn_input.frames,
              d_f.v.begin());
    if (tr.mode == DriveMode::StateDriven) {
      SequenceTensor d_states(width, tr.ffnn_act.back().frames);
      for (const StateSpan& s : tr.spans)
        for (std::size_t c = 0; c < width; ++c) {
          const double* row = d_f.channel(c);
          double sum = 0.0;
          for (std::size_t t = s.begin; t < s.end; ++t) sum += row[t];
          d_states.at(c, s.state) += sum;
        }
      backward_ffnn(tr, d_states, grads);
    } else {
      backward_ffnn(tr, d_f, grads);
    }
  }

  // ---------------------------------------------------------------------
  // Cost accounting.

  std::vector<nn::LayerSpec> ffnn_layer_specs() const {
    std::vector<nn::LayerSpec> specs;
    for (const ConvSlot& c : ffnn_) {
      specs.push_back({nn::LayerKind::Conv1x1, c.op.in_ch, c.op.out_ch, 1, 1, 0.0});
      specs.push_back({nn::LayerKind::Relu, 0, 0, 1, 1, 0.0});
      if (cfg_.dropout_p > 0.0)
        specs.push_back({nn::LayerKind::Dropout, 0, 0, 1, 1, cfg_.dropout_p});
    }
    if (cfg_.kind == ModelKind::Baseline) {
      specs.push_back({nn::LayerKind::Conv1x1, baseline_out_.op.in_ch,
                       baseline_out_.op.out_ch, 1, 1, 0.0});
      specs.push_back({nn::LayerKind::Sigmoid, 0, 0, 1, 1, 0.0});
    }
    return specs;
  }

  std::vector<nn::LayerSpec> cnn_layer_specs() const {
    std::vector<nn::LayerSpec> specs;
    for (const Head& h : heads_) {
      for (const ConvSlot& c : h.down) {
        specs.push_back({nn::LayerKind::Down2, c.op.in_ch, c.op.out_ch, c.op.kernel, 2, 0.0});
        specs.push_back({nn::LayerKind::Relu, 0, 0, 1, 1, 0.0});
      }
      for (const auto& blk : h.blocks)
        specs.push_back(
            {nn::LayerKind::ResidualBlock, blk[0].op.in_ch, blk[0].op.out_ch, blk[0].op.kernel,
             1, 0.0});
      for (const ConvSlot& c : h.up) {
        specs.push_back({nn::LayerKind::Up2, c.op.in_ch, c.op.out_ch, c.op.kernel, 2, 0.0});
        specs.push_back({nn::LayerKind::Relu, 0, 0, 1, 1, 0.0});
      }
      specs.push_back({nn::LayerKind::Conv1x1, h.out.op.in_ch, h.out.op.out_ch, 1, 1, 0.0});
      specs.push_back({nn::LayerKind::Sigmoid, 0, 0, 1, 1, 0.0});
      // each head ends back at the full frame rate, so heads concatenate
    }
    return specs;
  }

  // MACs for one pass over a segment of `frames` frames (frame-driven) or
  // `states` FFNN evaluations plus the segment CNN (state-driven).
  std::uint64_t macs_ffnn(std::uint64_t positions) const {
    auto specs = ffnn_layer_specs();
    return nn::mac_count(specs, positions);
  }
  std::uint64_t macs_cnn(std::uint64_t frames) const {
    std::uint64_t total = 0;
    for (const Head& h : heads_) total += head_macs(h, frames);
    return total;
  }
  std::uint64_t macs_frame_mode(std::uint64_t frames) const {
    return macs_ffnn(frames) + macs_cnn(frames);
  }
  std::uint64_t macs_state_mode(std::uint64_t frames, std::uint64_t states) const {
    return macs_ffnn(states) + macs_cnn(frames);
  }
  std::uint64_t macs_head1(std::uint64_t frames) const {
    require(heads_.size() == 2, "macs_head1: model has no split head");
    return head_macs(heads_[0], frames);
  }

  // Receptive field of the convolutional part, in frames: the largest input
  // span that can influence one output frame. Computed by exact backward
  // interval propagation, maximized over the stride phases (the transposed
  // up-samplers reach fewer inputs on even phases, so the naive
  // jump-weighted sum over-counts).
  int receptive_field() const {
    if (cfg_.kind == ModelKind::Baseline) return 1;
    long rf = 1;
    const long base = 1L << 20;
    for (const Head& h : heads_) {
      for (long phase = 0; phase < 4; ++phase) {
        long a = base + phase, b = base + phase;
        // walk backward: output 1x1 head, up stack, blocks, down stack
        for (std::size_t ui = h.up.size(); ui-- > 0;) {
          const int k = h.up[ui].op.kernel;
          const int p = k / 2;
          // out i collects in t' with 2 t' + j - p = i, j in [0, k)
          a = (a + p - k + 1 + 1) / 2;  // ceil((a + p - k + 1) / 2), operands positive
          b = (b + p) / 2;
        }
        for (const auto& blk : h.blocks) {
          const int p = blk[0].op.kernel / 2;
          a -= 2 * p;
          b += 2 * p;
        }
        for (std::size_t di = h.down.size(); di-- > 0;) {
          const int k = h.down[di].op.kernel;
          const int p = k / 2;
          a = 2 * a - p;
          b = 2 * b + (k - 1) - p;
        }
        rf = std::max(rf, b - a + 1);
      }
    }
    return static_cast<int>(rf);
  }

 private:
  struct ConvSlot {
    nn::Conv1d op;
    std::size_t w_slot = 0, b_slot = 0;
  };
  struct Head {
    std::vector<ConvSlot> down;
    std::vector<std::array<ConvSlot, 2>> blocks;
    std::vector<ConvSlot> up;
    ConvSlot out;
    std::vector<std::size_t> dims;
  };

  ConvSlot make_conv(int in_ch, int out_ch, int kernel, nn::ConvMode mode) {
    ConvSlot c;
    c.op = {in_ch, out_ch, kernel, mode};
    c.w_slot = params_.add_slot(c.op.weight_count());
    c.b_slot = params_.add_slot(c.op.bias_count());
    return c;
  }

  Head make_head(std::vector<std::size_t> dims, int channels, int blocks) {
    Head h;
    const int cnn_in = cfg_.ffnn_width + cfg_.position_dim;
    h.down.push_back(make_conv(cnn_in, channels, cfg_.filter_size, nn::ConvMode::Down2));
    h.down.push_back(make_conv(channels, channels, cfg_.filter_size, nn::ConvMode::Down2));
    for (int r = 0; r < blocks; ++r)
      h.blocks.push_back({make_conv(channels, channels, cfg_.filter_size, nn::ConvMode::Same),
                          make_conv(channels, channels, cfg_.filter_size, nn::ConvMode::Same)});
    h.up.push_back(make_conv(channels, channels, cfg_.filter_size, nn::ConvMode::Up2));
    h.up.push_back(make_conv(channels, channels, cfg_.filter_size, nn::ConvMode::Up2));
    h.out = make_conv(channels, static_cast<int>(dims.size()), 1, nn::ConvMode::Same);
    h.dims = std::move(dims);
    return h;
  }

  void build() {
    const bool baseline = cfg_.kind == ModelKind::Baseline;
    int in = baseline ? cfg_.input_dim + cfg_.position_dim : cfg_.input_dim;
    for (int l = 0; l < cfg_.ffnn_layers; ++l) {
      ffnn_.push_back(make_conv(in, cfg_.ffnn_width, 1, nn::ConvMode::Same));
      in = cfg_.ffnn_width;
    }
    if (baseline) {
      baseline_out_ =
          make_conv(cfg_.ffnn_width, cfg_.window_count * cfg_.static_dim, 1, nn::ConvMode::Same);
      return;
    }
    if (cfg_.split.enabled) {
      std::vector<bool> in_head1(static_cast<std::size_t>(cfg_.static_dim), false);
      for (std::size_t d : cfg_.split.head1_dims) in_head1[d] = true;
      std::vector<std::size_t> rest;
      for (std::size_t d = 0; d < static_cast<std::size_t>(cfg_.static_dim); ++d)
        if (!in_head1[d]) rest.push_back(d);
      heads_.push_back(
          make_head(cfg_.split.head1_dims, cfg_.split.head1_channels, cfg_.split.head1_blocks));
      heads_.push_back(make_head(std::move(rest), cfg_.cnn_channels, cfg_.residual_blocks));
    } else {
      std::vector<std::size_t> all(static_cast<std::size_t>(cfg_.static_dim));
      for (std::size_t d = 0; d < all.size(); ++d) all[d] = d;
      heads_.push_back(make_head(std::move(all), cfg_.cnn_channels, cfg_.residual_blocks));
    }
  }

  SequenceTensor conv_forward(const ConvSlot& c, const SequenceTensor& x) const {
    return c.op.forward(x, params_.slots[c.w_slot], params_.slots[c.b_slot]);
  }
  SequenceTensor conv_backward(const ConvSlot& c, const SequenceTensor& x,
                               const SequenceTensor& dy, nn::Gradients& g) const {
    return c.op.backward(x, params_.slots[c.w_slot], dy, g.slots[c.w_slot], g.slots[c.b_slot]);
  }

  static SequenceTensor concat_channels(const SequenceTensor& a, const SequenceTensor& b) {
    if (b.channels == 0) return a;
    require(a.frames == b.frames, "concat: frame count mismatch");
    SequenceTensor out(a.channels + b.channels, a.frames);
    std::copy(a.v.begin(), a.v.end(), out.v.begin());
    std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<long>(a.v.size()));
    return out;
  }

  const SequenceTensor& ffnn_top_input(const Trace& tr) const {
    return tr.ffnn_act.empty() ? tr.ffnn_input : tr.ffnn_act.back();
  }

  SequenceTensor run_ffnn(const SequenceTensor& input, bool training, Rng* rng,
                          Trace& tr) const {
    require(input.channels == static_cast<std::size_t>(ffnn_.front().op.in_ch),
            "ffnn: input channel mismatch (expected " +
                std::to_string(ffnn_.front().op.in_ch) + ", got " +
                std::to_string(input.channels) + ")");
    require(!training || rng != nullptr || cfg_.dropout_p == 0.0,
            "ffnn: training with dropout needs an rng");
    tr.ffnn_input = input;
    tr.ffnn_pre.clear();
    tr.ffnn_act.clear();
    tr.dropout_masks.clear();
    const SequenceTensor* h = &tr.ffnn_input;
    for (const ConvSlot& c : ffnn_) {
      tr.ffnn_pre.push_back(conv_forward(c, *h));
      SequenceTensor act = nn::relu(tr.ffnn_pre.back());
      if (training && cfg_.dropout_p > 0.0) {
        auto mask = nn::dropout_mask(act.v.size(), cfg_.dropout_p, *rng);
        act = nn::apply_mask(act, mask);
        tr.dropout_masks.push_back(std::move(mask));
      }
      tr.ffnn_act.push_back(std::move(act));
      h = &tr.ffnn_act.back();
    }
    return *h;
  }

  void backward_ffnn(const Trace& tr, const SequenceTensor& d_top, nn::Gradients& g) const {
    SequenceTensor d = d_top;
    for (std::size_t li = ffnn_.size(); li-- > 0;) {
      if (tr.training && cfg_.dropout_p > 0.0) d = nn::apply_mask(d, tr.dropout_masks[li]);
      d = nn::relu_backward(tr.ffnn_pre[li], d);
      const SequenceTensor& in = li == 0 ? tr.ffnn_input : tr.ffnn_act[li - 1];
      d = conv_backward(ffnn_[li], in, d, g);
    }
  }

  SequenceTensor run_heads(Trace& tr) const {
    require(tr.cnn_input.frames % static_cast<std::size_t>(cfg_.frame_multiple()) == 0,
            "segment length must be a multiple of " + std::to_string(cfg_.frame_multiple()));
    tr.heads.clear();
    tr.heads.resize(heads_.size());
    tr.output = SequenceTensor(static_cast<std::size_t>(cfg_.static_dim), tr.cnn_input.frames);
    for (std::size_t hi = 0; hi < heads_.size(); ++hi) {
      const Head& head = heads_[hi];
      Trace::HeadTrace& ht = tr.heads[hi];
      const SequenceTensor* x = &tr.cnn_input;
      for (const ConvSlot& c : head.down) {
        ht.down_pre.push_back(conv_forward(c, *x));
        ht.down_act.push_back(nn::relu(ht.down_pre.back()));
        x = &ht.down_act.back();
      }
      ht.block_in.push_back(*x);
      for (const auto& blk : head.blocks) {
        const SequenceTensor& bin = ht.block_in.back();
        ht.block_pre1.push_back(conv_forward(blk[0], bin));
        ht.block_act1.push_back(nn::relu(ht.block_pre1.back()));
        SequenceTensor h2 = conv_forward(blk[1], ht.block_act1.back());
        for (std::size_t i = 0; i < h2.v.size(); ++i) h2.v[i] += bin.v[i];
        ht.block_in.push_back(std::move(h2));
      }
      x = &ht.block_in.back();
      for (const ConvSlot& c : head.up) {
        ht.up_pre.push_back(conv_forward(c, *x));
        ht.up_act.push_back(nn::relu(ht.up_pre.back()));
        x = &ht.up_act.back();
      }
      ht.out = nn::sigmoid(conv_forward(head.out, *x));
      for (std::size_t i = 0; i < head.dims.size(); ++i)
        std::copy(ht.out.channel(i), ht.out.channel(i) + ht.out.frames,
                  tr.output.channel(head.dims[i]));
    }
    return tr.output;
  }

  void backward_head(const Head& head, const Trace::HeadTrace& ht,
                     const SequenceTensor& cnn_input, const SequenceTensor& d_head,
                     nn::Gradients& g, SequenceTensor& d_cnn_in) const {
    SequenceTensor d = nn::sigmoid_backward(ht.out, d_head);
    d = conv_backward(head.out, ht.up_act.back(), d, g);
    for (std::size_t ui = head.up.size(); ui-- > 0;) {
      d = nn::relu_backward(ht.up_pre[ui], d);
      const SequenceTensor& in = ui == 0 ? ht.block_in.back() : ht.up_act[ui - 1];
      d = conv_backward(head.up[ui], in, d, g);
    }
    for (std::size_t bi = head.blocks.size(); bi-- > 0;) {
      SequenceTensor d_a1 = conv_backward(head.blocks[bi][1], ht.block_act1[bi], d, g);
      SequenceTensor d_pre1 = nn::relu_backward(ht.block_pre1[bi], d_a1);
      SequenceTensor d_in = conv_backward(head.blocks[bi][0], ht.block_in[bi], d_pre1, g);
      for (std::size_t i = 0; i < d.v.size(); ++i) d_in.v[i] += d.v[i];
      d = std::move(d_in);
    }
    for (std::size_t di = head.down.size(); di-- > 0;) {
      d = nn::relu_backward(ht.down_pre[di], d);
      const SequenceTensor& in = di == 0 ? cnn_input : ht.down_act[di - 1];
      d = conv_backward(head.down[di], in, d, g);
    }
    for (std::size_t i = 0; i < d.v.size(); ++i) d_cnn_in.v[i] += d.v[i];
  }

  std::uint64_t head_macs(const Head& h, std::uint64_t frames) const {
    std::vector<nn::LayerSpec> specs;
    for (const ConvSlot& c : h.down)
      specs.push_back({nn::LayerKind::Down2, c.op.in_ch, c.op.out_ch, c.op.kernel, 2, 0.0});
    for (const auto& blk : h.blocks)
      specs.push_back({nn::LayerKind::ResidualBlock, blk[0].op.in_ch, blk[0].op.out_ch,
                       blk[0].op.kernel, 1, 0.0});
    for (const ConvSlot& c : h.up)
      specs.push_back({nn::LayerKind::Up2, c.op.in_ch, c.op.out_ch, c.op.kernel, 2, 0.0});
    specs.push_back({nn::LayerKind::Conv1x1, h.out.op.in_ch, h.out.op.out_ch, 1, 1, 0.0});
    return nn::mac_count(specs, frames);
  }

  static void validate_spans(std::span<const StateSpan> spans, std::size_t states,
                             std::size_t frames) {
    require(!spans.empty(), "state spans are empty");
    std::size_t cursor = 0;
    for (const StateSpan& s : spans) {
      require(s.state < states, "state span references a missing state vector");
      require(s.begin == cursor && s.end > s.begin && s.end <= frames,
              "state spans must tile the segment");
      cursor = s.end;
    }
    require(cursor == frames, "state spans do not cover the segment");
  }

  ModelConfig cfg_;
  nn::ParameterStore params_;
  std::vector<ConvSlot> ffnn_;
  std::vector<Head> heads_;
  ConvSlot baseline_out_;
  mutable std::atomic<std::uint64_t> ffnn_invocations_{0};
};

// ---------------------------------------------------------------------------
// Shipped model presets (small / medium / large).

inline ModelConfig model_preset(const std::string& name, int input_dim, int static_dim,
                                const std::vector<std::size_t>& editable_dims) {
  ModelConfig cfg;
  cfg.input_dim = input_dim;
  cfg.static_dim = static_dim;
  if (name == "small") {
    cfg.ffnn_width = 64;
    cfg.cnn_channels = 32;
    cfg.residual_blocks = 5;
  } else if (name == "medium") {
    cfg.ffnn_width = 64;
    cfg.cnn_channels = 64;
    cfg.residual_blocks = 9;
    cfg.split = {true, editable_dims, 16, 9};
  } else if (name == "large") {
    cfg.ffnn_width = 96;
    cfg.cnn_channels = 96;
    cfg.residual_blocks = 9;
    cfg.split = {true, editable_dims, 24, 9};
  } else {
    fail("unknown model preset '" + name + "' (expected small|medium|large)");
  }
  return cfg;
}

}  // namespace svs
