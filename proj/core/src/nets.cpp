// SPDX-License-Identifier: Apache-2.0
#include "scvae/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scvae::nets {
namespace {

Node constant_like_rows(std::size_t rows, std::size_t cols, double v) { return Node::constant(Tensor({rows, cols}, v)); }

// Row mask (B x width): 1 where the example still has a token at `step`.
Tensor step_mask(const std::vector<std::vector<int>>& tokens, std::size_t step, std::size_t width) {
  Tensor mask({tokens.size(), width});
  for (std::size_t b = 0; b < tokens.size(); ++b)
    if (step < tokens[b].size())
      std::fill_n(mask.data().begin() + static_cast<std::ptrdiff_t>(b * width), width, 1.0);
  return mask;
}

// keep where mask is 1, hold `prev` elsewhere
Node masked_update(const Node& prev, const Node& next, const Node& mask) {
  return ad::add(prev, ad::mul(mask, ad::sub(next, prev)));
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) { return kind == ModelKind::kScvae ? "scvae" : "sclstm"; }

ModelKind model_kind_from_name(std::string_view name) {
  if (name == "scvae") return ModelKind::kScvae;
  if (name == "sclstm") return ModelKind::kSclstm;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "' (expected scvae or sclstm)");
}

Node affine(const Node& x, const Node& w, const Node& b) { return ad::add_rowwise(ad::matmul(x, w), b); }

LstmCell::LstmCell(ad::ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
                   std::mt19937_64& rng)
    : hidden_(hidden) {
  w_ = store.add_uniform(prefix + ".w", {input + hidden, 4 * hidden}, kInitRange, rng);
  Tensor bias({1, 4 * hidden});
  std::fill_n(bias.data().begin() + static_cast<std::ptrdiff_t>(hidden), hidden, 1.0);
  b_ = store.add(prefix + ".b", std::move(bias));
}

LstmCell::Gates LstmCell::gates(const Node& x, const Node& h) const {
  const Node pre = affine(ad::concat({x, h}, 1), w_, b_);
  const std::size_t H = hidden_;
  return {ad::sigmoid(ad::slice(pre, 1, 0, H)), ad::sigmoid(ad::slice(pre, 1, H, 2 * H)),
          ad::sigmoid(ad::slice(pre, 1, 2 * H, 3 * H)), ad::tanh(ad::slice(pre, 1, 3 * H, 4 * H))};
}

std::pair<Node, Node> LstmCell::step(const Node& x, const Node& h, const Node& c) const {
  const Gates g = gates(x, h);
  Node c_next = ad::add(ad::mul(g.forget, c), ad::mul(g.input, g.candidate));
  Node h_next = ad::mul(g.output, ad::tanh(c_next));
  return {std::move(h_next), std::move(c_next)};
}

SclstmCell::SclstmCell(ad::ParameterStore& store, const std::string& prefix, std::size_t input,
                       std::size_t hidden, std::size_t da, double alpha, std::mt19937_64& rng)
    : lstm_(store, prefix, input, hidden, rng), alpha_(alpha) {
  w_wr_ = store.add_uniform(prefix + ".w_wr", {input, da}, kInitRange, rng);
  w_hr_ = store.add_uniform(prefix + ".w_hr", {hidden, da}, kInitRange, rng);
  w_dc_ = store.add_uniform(prefix + ".w_dc", {da, hidden}, kInitRange, rng);
}

Node SclstmCell::reading_gate(const Node& x, const Node& h) const {
  return ad::sigmoid(ad::add(ad::matmul(x, w_wr_), ad::scale(ad::matmul(h, w_hr_), alpha_)));
}

SclstmCell::State SclstmCell::step(const Node& x, const State& prev) const {
  const auto g = lstm_.gates(x, prev.h);
  State next;
  next.d = ad::mul(reading_gate(x, prev.h), prev.d);
  next.c = ad::add(ad::add(ad::mul(g.forget, prev.c), ad::mul(g.input, g.candidate)),
                   ad::tanh(ad::matmul(next.d, w_dc_)));
  next.h = ad::mul(g.output, ad::tanh(next.c));
  return next;
}

Node reparameterized_sample(const GaussianParams& g, const Tensor& noise) {
  if (noise.shape() != g.mean.shape())
    throw ad::DimensionError("reparameterized_sample: noise " + ad::shape_string(noise.shape()) + " vs mean " +
                             ad::shape_string(g.mean.shape()));
  const Node sigma = ad::exp(ad::scale(g.log_variance, 0.5));
  return ad::add(g.mean, ad::mul(sigma, Node::constant(noise)));
}

GaussianParams split_gaussian(const Node& stacked, std::size_t latent) {
  return {ad::slice(stacked, 1, 0, latent),
          ad::clamp(ad::slice(stacked, 1, latent, 2 * latent), -kLogVarianceBound, kLogVarianceBound)};
}

BiLstmEncoder::BiLstmEncoder(ad::ParameterStore& store, std::size_t input, std::size_t hidden,
                             std::mt19937_64& rng)
    : forward_(store, "enc.fwd", input, hidden, rng), backward_(store, "enc.bwd", input, hidden, rng) {}

Node BiLstmEncoder::run(const LstmCell& cell, const Node& table, const std::vector<std::vector<int>>& tokens) const {
  const std::size_t B = tokens.size();
  const std::size_t H = cell.hidden();
  std::size_t longest = 0;
  for (const auto& t : tokens) {
    if (t.empty()) throw ad::ContractError("bilstm_encode: empty sequence");
    longest = std::max(longest, t.size());
  }
  Node h = constant_like_rows(B, H, 0.0);
  Node c = constant_like_rows(B, H, 0.0);
  std::vector<int> ids(B);
  for (std::size_t t = 0; t < longest; ++t) {
    bool all_active = true;
    for (std::size_t b = 0; b < B; ++b) {
      const bool active = t < tokens[b].size();
      all_active &= active;
      ids[b] = active ? tokens[b][t] : corpus::Vocabulary::kPad;
    }
    const Node x = ad::gather_rows(table, ids);
    auto [h_new, c_new] = cell.step(x, h, c);
    if (all_active) {
      h = std::move(h_new);
      c = std::move(c_new);
    } else {
      const Node mask = Node::constant(step_mask(tokens, t, H));
      h = masked_update(h, h_new, mask);
      c = masked_update(c, c_new, mask);
    }
  }
  return h;
}

Node BiLstmEncoder::encode(const Node& table, const std::vector<std::vector<int>>& tokens) const {
  std::vector<std::vector<int>> reversed = tokens;
  for (auto& r : reversed) std::reverse(r.begin(), r.end());
  return ad::concat({run(forward_, table, tokens), run(backward_, table, reversed)}, 1);
}

Batch make_batch(std::span<const corpus::Example* const> examples, const corpus::Vocabulary& vocab,
                 const corpus::Inventories& inventories) {
  if (examples.empty()) throw ad::ContractError("make_batch: no examples");
  Batch batch;
  const std::size_t B = examples.size();
  std::vector<corpus::ConditionVector> conds;
  for (const auto* ex : examples) conds.push_back(corpus::encode_condition(ex->sr, inventories));
  const std::size_t C = conds[0].size();
  const std::size_t D = conds[0].da_features().size();
  const std::size_t S = conds[0].slot_binary.size();
  batch.condition = Tensor({B, C});
  batch.da = Tensor({B, D});
  batch.slot_labels = Tensor({B, S});
  for (std::size_t b = 0; b < B; ++b) {
    batch.tokens.push_back(vocab.encode(examples[b]->delex.tokens));
    const auto flat = conds[b].flatten();
    const auto da = conds[b].da_features();
    std::copy(flat.begin(), flat.end(), batch.condition.data().begin() + static_cast<std::ptrdiff_t>(b * C));
    std::copy(da.begin(), da.end(), batch.da.data().begin() + static_cast<std::ptrdiff_t>(b * D));
    std::copy(conds[b].slot_binary.begin(), conds[b].slot_binary.end(),
              batch.slot_labels.data().begin() + static_cast<std::ptrdiff_t>(b * S));
    batch.domain_labels.push_back(static_cast<int>(conds[b].domain_index()));
    batch.act_labels.push_back(static_cast<int>(conds[b].act_index()));
  }
  return batch;
}

Batch make_batch(const corpus::Example& example, const corpus::Vocabulary& vocab,
                 const corpus::Inventories& inventories) {
  const corpus::Example* one[1] = {&example};
  return make_batch(std::span<const corpus::Example* const>(one, 1), vocab, inventories);
}

Batch make_condition_batch(const corpus::ConditionVector& condition, std::size_t copies) {
  Batch batch;
  const auto flat = condition.flatten();
  const auto da = condition.da_features();
  batch.condition = Tensor({copies, flat.size()});
  batch.da = Tensor({copies, da.size()});
  batch.slot_labels = Tensor({copies, condition.slot_binary.size()});
  for (std::size_t b = 0; b < copies; ++b) {
    std::copy(flat.begin(), flat.end(), batch.condition.data().begin() + static_cast<std::ptrdiff_t>(b * flat.size()));
    std::copy(da.begin(), da.end(), batch.da.data().begin() + static_cast<std::ptrdiff_t>(b * da.size()));
    std::copy(condition.slot_binary.begin(), condition.slot_binary.end(),
              batch.slot_labels.data().begin() + static_cast<std::ptrdiff_t>(b * condition.slot_binary.size()));
    batch.domain_labels.push_back(static_cast<int>(condition.domain_index()));
    batch.act_labels.push_back(static_cast<int>(condition.act_index()));
  }
  batch.tokens.assign(copies, {});
  return batch;
}

Model::Model(ModelKind kind, ModelDims dims, std::uint64_t seed) : kind_(kind), dims_(dims) {
  if (dims_.vocab <= static_cast<std::size_t>(corpus::Vocabulary::kReserved) || dims_.domains == 0 ||
      dims_.acts == 0 || dims_.slots == 0)
    throw std::invalid_argument("model dimensions are incomplete");
  std::mt19937_64 rng(seed);
  const std::size_t E = dims_.embedding;
  const std::size_t Z = dims_.latent;
  embedding_ = params_.add_uniform("embedding", {dims_.vocab, E}, kInitRange, rng);
  if (kind_ == ModelKind::kScvae) {
    encoder_ = BiLstmEncoder(params_, E, dims_.encoder_hidden, rng);
    rec_w_ = params_.add_uniform("recognition.w", {2 * dims_.encoder_hidden + dims_.condition(), 2 * Z}, kInitRange, rng);
    rec_b_ = params_.add("recognition.b", Tensor({1, 2 * Z}));
    prior_w1_ = params_.add_uniform("prior.w1", {dims_.condition(), dims_.prior_hidden}, kInitRange, rng);
    prior_b1_ = params_.add("prior.b1", Tensor({1, dims_.prior_hidden}));
    prior_w2_ = params_.add_uniform("prior.w2", {dims_.prior_hidden, 2 * Z}, kInitRange, rng);
    prior_b2_ = params_.add("prior.b2", Tensor({1, 2 * Z}));
    recover_domain_w_ = params_.add_uniform("recover.domain.w", {Z, dims_.domains}, kInitRange, rng);
    recover_domain_b_ = params_.add("recover.domain.b", Tensor({1, dims_.domains}));
    recover_act_w_ = params_.add_uniform("recover.act.w", {Z, dims_.acts}, kInitRange, rng);
    recover_act_b_ = params_.add("recover.act.b", Tensor({1, dims_.acts}));
    recover_slots_w_ = params_.add_uniform("recover.slots.w", {Z, dims_.slots}, kInitRange, rng);
    recover_slots_b_ = params_.add("recover.slots.b", Tensor({1, dims_.slots}));
  }
  decoder_ = SclstmCell(params_, "decoder", E, Z, dims_.da(), dims_.alpha, rng);
  out_w_ = params_.add_uniform("output.w", {Z, dims_.vocab}, kInitRange, rng);
  out_b_ = params_.add("output.b", Tensor({1, dims_.vocab}));
}

Model Model::clone() const {
  Model copy(kind_, dims_, 0);
  copy.params_.assign_from(params_);
  return copy;
}

Node Model::encode(const Batch& batch) const {
  if (kind_ != ModelKind::kScvae) throw ad::ContractError("the SCLSTM baseline has no encoder");
  return encoder_.encode(embedding_, batch.tokens);
}

GaussianParams Model::recognition(const Node& encoding, const Node& condition) const {
  return split_gaussian(affine(ad::concat({encoding, condition}, 1), rec_w_, rec_b_), dims_.latent);
}

GaussianParams Model::prior(const Node& condition) const {
  if (kind_ != ModelKind::kScvae) throw ad::ContractError("the SCLSTM baseline has no prior network");
  const Node hidden = ad::tanh(affine(condition, prior_w1_, prior_b1_));
  return split_gaussian(affine(hidden, prior_w2_, prior_b2_), dims_.latent);
}

RecoveryLogits Model::recover(const Node& z) const {
  return {affine(z, recover_domain_w_, recover_domain_b_), affine(z, recover_act_w_, recover_act_b_),
          affine(z, recover_slots_w_, recover_slots_b_)};
}

SclstmCell::State Model::initial_state(const Node* z, const Tensor& da) const {
  SclstmCell::State s;
  const std::size_t B = da.rows();
  if (z) {
    if (z->shape() != ad::Shape{B, dims_.latent})
      throw ad::DimensionError("initial_state: z " + ad::shape_string(z->shape()));
    s.h = *z;
    s.c = *z;
  } else {
    s.h = constant_like_rows(B, dims_.latent, 0.0);
    s.c = constant_like_rows(B, dims_.latent, 0.0);
  }
  s.d = Node::constant(da);
  return s;
}

Node Model::decode_step(SclstmCell::State& state, std::span<const int> input_ids) const {
  const Node x = ad::gather_rows(embedding_, input_ids);
  state = decoder_.step(x, state);
  return affine(state.h, out_w_, out_b_);
}

TeacherForced Model::decode_teacher_forced(const Node* z, const Batch& batch) const {
  const std::size_t B = batch.size();
  std::size_t steps = 0;
  for (const auto& t : batch.tokens) steps = std::max(steps, t.size() + 1);
  SclstmCell::State state = initial_state(z, batch.da);
  TeacherForced out;
  std::vector<Node> hs;
  hs.reserve(steps);
  out.targets.reserve(steps * B);
  std::vector<int> inputs(B);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& seq = batch.tokens[b];
      inputs[b] = t == 0 ? corpus::Vocabulary::kSos : (t - 1 < seq.size() ? seq[t - 1] : corpus::Vocabulary::kPad);
      int target = -1;
      if (t < seq.size()) target = seq[t];
      else if (t == seq.size()) target = corpus::Vocabulary::kEos;
      if (target >= 0) ++out.tokens;
      out.targets.push_back(target);
    }
    const Node x = ad::gather_rows(embedding_, inputs);
    state = decoder_.step(x, state);
    hs.push_back(state.h);
  }
  out.logits = affine(ad::concat(hs, 0), out_w_, out_b_);
  return out;
}

}  // namespace scvae::nets
