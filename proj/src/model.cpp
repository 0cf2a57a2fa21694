#include "stt/model.hpp"

#include <cmath>

namespace stt {

void ModelConfig::validate() const {
  if (d_model < 1 || n_layers_encoder < 1 || n_layers_decoder < 1 || n_heads < 1 ||
      ffn_width < 1 || max_relative_distance < 0 || max_segments < 1 || pitch_vocab < 5 ||
      duration_vocab < 5)
    throw DataError("model config: all dimensions must be positive");
  if (d_model % n_heads != 0) throw DataError("model config: d_model must divide by n_heads");
  if (dropout < 0.0f || dropout >= 1.0f) throw DataError("model config: dropout must be in [0, 1)");
}

const TensorPtr& ModelState::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("missing model parameter: " + name);
  return it->second;
}

std::vector<std::pair<std::string, TensorPtr>> ModelState::entries() const {
  return {params.begin(), params.end()};
}

namespace {

TensorPtr zeroParam(std::vector<int> shape) { return makeTensor(std::move(shape), true); }

TensorPtr onesParam(std::vector<int> shape) {
  TensorPtr t = makeTensor(std::move(shape), true);
  for (float& v : t->value) v = 1.0f;
  return t;
}

void addAttention(ModelState& s, const std::string& prefix, const ModelConfig& cfg, bool relative,
                  Rng& rng) {
  int d = cfg.d_model;
  s.params[prefix + ".wq"] = makeParam({d, d}, rng);
  s.params[prefix + ".bq"] = zeroParam({d});
  s.params[prefix + ".wk"] = makeParam({d, d}, rng);
  s.params[prefix + ".bk"] = zeroParam({d});
  s.params[prefix + ".wv"] = makeParam({d, d}, rng);
  s.params[prefix + ".bv"] = zeroParam({d});
  s.params[prefix + ".wo"] = makeParam({d, d}, rng);
  s.params[prefix + ".bo"] = zeroParam({d});
  if (relative)
    s.params[prefix + ".rel"] = makeParam({2 * cfg.max_relative_distance + 1, d}, rng);
}

void addNorm(ModelState& s, const std::string& prefix, int d) {
  s.params[prefix + ".gamma"] = onesParam({d});
  s.params[prefix + ".beta"] = zeroParam({d});
}

void addFfn(ModelState& s, const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
  s.params[prefix + ".w1"] = makeParam({cfg.d_model, cfg.ffn_width}, rng);
  s.params[prefix + ".b1"] = zeroParam({cfg.ffn_width});
  s.params[prefix + ".w2"] = makeParam({cfg.ffn_width, cfg.d_model}, rng);
  s.params[prefix + ".b2"] = zeroParam({cfg.d_model});
}

}  // namespace

ModelState ModelState::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mixSeed(seed, 0x5757u));
  ModelState s;
  int d = cfg.d_model;

  s.params["embed.pitch"] = makeParam({cfg.pitch_vocab, d}, rng);
  s.params["embed.duration"] = makeParam({cfg.duration_vocab, d}, rng);
  // Row 0 is the (unused) PAD segment.
  s.params["embed.segment"] = makeParam({cfg.max_segments + 1, d}, rng);
  s.params["fusion.weight"] = makeParam({3 * d, d}, rng);
  s.params["fusion.bias"] = zeroParam({d});

  for (int l = 0; l < cfg.n_layers_encoder; ++l) {
    std::string p = "enc." + std::to_string(l);
    addAttention(s, p + ".attn", cfg, true, rng);
    addNorm(s, p + ".norm1", d);
    addFfn(s, p + ".ffn", cfg, rng);
    addNorm(s, p + ".norm2", d);
  }
  for (int l = 0; l < cfg.n_layers_decoder; ++l) {
    std::string p = "dec." + std::to_string(l);
    addAttention(s, p + ".self", cfg, true, rng);
    addNorm(s, p + ".norm1", d);
    addAttention(s, p + ".cross", cfg, false, rng);
    addNorm(s, p + ".norm2", d);
    addFfn(s, p + ".ffn", cfg, rng);
    addNorm(s, p + ".norm3", d);
  }
  s.params["head.pitch.weight"] = makeParam({d, cfg.pitch_vocab}, rng);
  s.params["head.pitch.bias"] = zeroParam({cfg.pitch_vocab});
  s.params["head.duration.weight"] = makeParam({d, cfg.duration_vocab}, rng);
  s.params["head.duration.bias"] = zeroParam({cfg.duration_vocab});
  return s;
}

TensorPtr musicFusion(const ModelState& state, const ModelConfig& cfg,
                      const std::vector<int>& pitch_ids, const std::vector<int>& duration_ids,
                      const std::vector<int>& segments) {
  if (pitch_ids.size() != duration_ids.size() || pitch_ids.size() != segments.size())
    throw DataError("music fusion: pitch/duration/segment lengths differ");
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (segments[i] < 0 || segments[i] > cfg.max_segments)
      throw DataError("music fusion: segment id " + std::to_string(segments[i]) +
                      " outside [0, " + std::to_string(cfg.max_segments) + "]");

  TensorPtr p_emb = embedding(state.at("embed.pitch"), pitch_ids);
  TensorPtr d_emb = embedding(state.at("embed.duration"), duration_ids);
  TensorPtr s_emb = embedding(state.at("embed.segment"), segments);
  TensorPtr fused = concatCols({p_emb, d_emb, s_emb});
  return add(matmul(fused, state.at("fusion.weight")), state.at("fusion.bias"));
}

TensorPtr positionalEncoding(int length, const std::vector<int>& segments, int d_model) {
  if (static_cast<int>(segments.size()) != length)
    throw DataError("positional encoding: segment list does not match length");
  std::vector<float> values(static_cast<std::size_t>(length) * d_model);
  auto sinusoid = [d_model](double pos, int dim) {
    double exponent = static_cast<double>(2 * (dim / 2)) / d_model;
    double angle = pos / std::pow(10000.0, exponent);
    return dim % 2 == 0 ? std::sin(angle) : std::cos(angle);
  };
  for (int t = 0; t < length; ++t) {
    int seg_pos = segments[t] >= 1 ? segments[t] - 1 : 0;
    for (int d = 0; d < d_model; ++d)
      values[static_cast<std::size_t>(t) * d_model + d] = static_cast<float>(
          sinusoid(static_cast<double>(t), d) + sinusoid(static_cast<double>(seg_pos), d));
  }
  return makeConst({length, d_model}, std::move(values));
}

TensorPtr buildPhraseMask(const std::vector<int>& full_segments,
                          const std::vector<int>& skeleton_segments) {
  if (full_segments.empty() || skeleton_segments.empty())
    throw DataError("phrase mask: empty segment list");
  for (int fs : full_segments) {
    bool covered = false;
    for (int ss : skeleton_segments) covered = covered || ss == fs;
    if (!covered)
      throw ContractViolation("phrase mask: full-sequence segment " + std::to_string(fs) +
                              " has no skeleton tokens (all-masked row)");
  }
  int n = static_cast<int>(full_segments.size());
  int m = static_cast<int>(skeleton_segments.size());
  std::vector<float> values(static_cast<std::size_t>(n) * m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c)
      values[static_cast<std::size_t>(r) * m + c] =
          full_segments[r] == skeleton_segments[c] ? 0.0f : NEG_INF;
  return makeConst({n, m}, std::move(values));
}

AttentionParams attentionParams(const ModelState& state, const std::string& prefix,
                                bool relative) {
  AttentionParams p;
  p.wq = state.at(prefix + ".wq");
  p.bq = state.at(prefix + ".bq");
  p.wk = state.at(prefix + ".wk");
  p.bk = state.at(prefix + ".bk");
  p.wv = state.at(prefix + ".wv");
  p.bv = state.at(prefix + ".bv");
  p.wo = state.at(prefix + ".wo");
  p.bo = state.at(prefix + ".bo");
  if (relative) p.rel = state.at(prefix + ".rel");
  return p;
}

namespace {

TensorPtr causalMask(int n) {
  std::vector<float> values(static_cast<std::size_t>(n) * n, 0.0f);
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c) values[static_cast<std::size_t>(r) * n + c] = NEG_INF;
  return makeConst({n, n}, std::move(values));
}

TensorPtr maybeDropout(const TensorPtr& t, const ModelConfig& cfg, const ForwardOptions& opts) {
  if (!opts.training || cfg.dropout == 0.0f || opts.dropout_rng == nullptr) return t;
  return dropout(t, cfg.dropout, *opts.dropout_rng);
}

}  // namespace

TensorPtr maskedRelativeSelfAttention(const AttentionParams& p, const TensorPtr& x, bool causal,
                                      const ModelConfig& cfg, const ForwardOptions& opts) {
  int n = x->dim(0);
  int dk = cfg.headDim();
  TensorPtr q = add(matmul(x, p.wq), p.bq);
  TensorPtr k = add(matmul(x, p.wk), p.bk);
  TensorPtr v = add(matmul(x, p.wv), p.bv);
  TensorPtr causal_mask = causal ? causalMask(n) : nullptr;

  std::vector<TensorPtr> heads;
  heads.reserve(cfg.n_heads);
  for (int h = 0; h < cfg.n_heads; ++h) {
    int c0 = h * dk, c1 = (h + 1) * dk;
    TensorPtr qh = sliceCols(q, c0, c1);
    TensorPtr kh = sliceCols(k, c0, c1);
    TensorPtr vh = sliceCols(v, c0, c1);
    TensorPtr content = matmulNT(qh, kh);
    TensorPtr rel = relativeLogits(qh, sliceCols(p.rel, c0, c1), cfg.max_relative_distance);
    // Music Transformer scaling: (QK^T + S_rel) / sqrt(d_k).
    TensorPtr logits = scale(add(content, rel), 1.0f / std::sqrt(static_cast<float>(dk)));
    if (causal_mask) logits = maskedAdd(logits, causal_mask);
    TensorPtr probs = maybeDropout(softmaxRows(logits), cfg, opts);
    heads.push_back(matmul(probs, vh));
  }
  return add(matmul(concatCols(heads), p.wo), p.bo);
}

TensorPtr phraseLevelCrossAttention(const AttentionParams& p, const TensorPtr& decoder_stream,
                                    const TensorPtr& encoder_out, const TensorPtr& mask,
                                    const ModelConfig& cfg, const ForwardOptions& opts) {
  int dk = cfg.headDim();
  TensorPtr q = add(matmul(decoder_stream, p.wq), p.bq);
  TensorPtr k = add(matmul(encoder_out, p.wk), p.bk);
  TensorPtr v = add(matmul(encoder_out, p.wv), p.bv);

  float scale_dim = cfg.scale_by_d_model ? static_cast<float>(cfg.d_model)
                                         : static_cast<float>(dk);
  float inv_scale = 1.0f / std::sqrt(scale_dim);

  std::vector<TensorPtr> heads;
  heads.reserve(cfg.n_heads);
  for (int h = 0; h < cfg.n_heads; ++h) {
    int c0 = h * dk, c1 = (h + 1) * dk;
    TensorPtr qh = sliceCols(q, c0, c1);
    TensorPtr kh = sliceCols(k, c0, c1);
    TensorPtr vh = sliceCols(v, c0, c1);
    TensorPtr logits = scale(matmulNT(qh, kh), inv_scale);
    if (mask) logits = maskedAdd(logits, mask);
    TensorPtr probs = maybeDropout(softmaxRows(logits), cfg, opts);
    heads.push_back(matmul(probs, vh));
  }
  return add(matmul(concatCols(heads), p.wo), p.bo);
}

namespace {

TensorPtr addNormed(const ModelState& state, const std::string& prefix, const TensorPtr& x,
                    const TensorPtr& sub) {
  return layerNorm(add(x, sub), state.at(prefix + ".gamma"), state.at(prefix + ".beta"));
}

TensorPtr feedForward(const ModelState& state, const std::string& prefix, const TensorPtr& x,
                      const ModelConfig& cfg, const ForwardOptions& opts) {
  TensorPtr hidden = relu(add(matmul(x, state.at(prefix + ".w1")), state.at(prefix + ".b1")));
  hidden = maybeDropout(hidden, cfg, opts);
  return add(matmul(hidden, state.at(prefix + ".w2")), state.at(prefix + ".b2"));
}

TensorPtr embedSequence(const ModelState& state, const ModelConfig& cfg, const TokenSequence& seq,
                        const ForwardOptions& opts) {
  std::vector<int> segments = seq.segments();
  TensorPtr mf = musicFusion(state, cfg, seq.pitchIds(), seq.durationIds(), segments);
  TensorPtr pe = positionalEncoding(static_cast<int>(seq.size()), segments, cfg.d_model);
  return maybeDropout(add(mf, pe), cfg, opts);
}

}  // namespace

ForwardResult forward(const ModelState& state, const ModelConfig& cfg,
                      const TokenSequence& skeleton, const TokenSequence& full,
                      const ForwardOptions& opts) {
  if (skeleton.triplets.empty() || full.triplets.empty())
    throw DataError("forward: empty token sequence");

  TensorPtr mask;
  if (opts.use_phrase_mask) mask = buildPhraseMask(full.segments(), skeleton.segments());

  // Encoder over the skeleton sequence.
  TensorPtr g = embedSequence(state, cfg, skeleton, opts);
  for (int l = 0; l < cfg.n_layers_encoder; ++l) {
    std::string p = "enc." + std::to_string(l);
    TensorPtr attn = maskedRelativeSelfAttention(attentionParams(state, p + ".attn", true), g,
                                                 /*causal=*/false, cfg, opts);
    g = addNormed(state, p + ".norm1", g, attn);
    g = addNormed(state, p + ".norm2", g, feedForward(state, p + ".ffn", g, cfg, opts));
  }

  // Decoder over the full sequence.
  TensorPtr h = embedSequence(state, cfg, full, opts);
  for (int l = 0; l < cfg.n_layers_decoder; ++l) {
    std::string p = "dec." + std::to_string(l);
    TensorPtr self_attn = maskedRelativeSelfAttention(attentionParams(state, p + ".self", true), h,
                                                      /*causal=*/true, cfg, opts);
    h = addNormed(state, p + ".norm1", h, self_attn);
    TensorPtr cross = phraseLevelCrossAttention(attentionParams(state, p + ".cross", false), h, g,
                                                mask, cfg, opts);
    h = addNormed(state, p + ".norm2", h, cross);
    h = addNormed(state, p + ".norm3", h, feedForward(state, p + ".ffn", h, cfg, opts));
  }

  ForwardResult out;
  out.pitch_logits = add(matmul(h, state.at("head.pitch.weight")), state.at("head.pitch.bias"));
  out.duration_logits =
      add(matmul(h, state.at("head.duration.weight")), state.at("head.duration.bias"));
  return out;
}

}  // namespace stt
