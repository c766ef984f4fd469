// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scvae/autodiff.hpp"
#include "scvae/condition.hpp"
#include "scvae/dataset.hpp"
#include "scvae/parameters.hpp"
#include "scvae/vocabulary.hpp"

namespace scvae::nets {

using ad::Node;
using ad::Tensor;

enum class ModelKind { kSclstm, kScvae };
std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);

inline constexpr double kLogVarianceBound = 10.0;
inline constexpr double kInitRange = 0.08;

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embedding = 64;
  std::size_t encoder_hidden = 64;
  std::size_t latent = 128;  // also the decoder hidden size
  std::size_t prior_hidden = 128;
  std::size_t domains = 0;
  std::size_t acts = 0;
  std::size_t slots = 0;
  double alpha = 1.0 / 3.0;

  std::size_t condition() const { return domains + acts + slots; }
  std::size_t da() const { return acts + slots; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Gate columns are laid out [input | forget | output | candidate].
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ad::ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
           std::mt19937_64& rng);

  struct Gates {
    Node input, forget, output, candidate;
  };
  Gates gates(const Node& x, const Node& h) const;
  // Returns (h, c).
  std::pair<Node, Node> step(const Node& x, const Node& h, const Node& c) const;
  std::size_t hidden() const { return hidden_; }

 private:
  Node w_;  // (input + hidden) x 4H
  Node b_;  // 1 x 4H
  std::size_t hidden_ = 0;
};

// LSTM with a dialogue-act vector d that decays through a reading gate and
// feeds the cell: r = sigmoid(x W_wr + alpha h W_hr), d' = r * d,
// c' = f * c + i * g + tanh(d' W_dc).
class SclstmCell {
 public:
  SclstmCell() = default;
  SclstmCell(ad::ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden,
             std::size_t da, double alpha, std::mt19937_64& rng);

  struct State {
    Node h, c, d;
  };
  State step(const Node& x, const State& prev) const;
  Node reading_gate(const Node& x, const Node& h) const;

 private:
  LstmCell lstm_;
  Node w_wr_;  // input x da
  Node w_hr_;  // hidden x da
  Node w_dc_;  // da x hidden
  double alpha_ = 1.0 / 3.0;
};

struct GaussianParams {
  Node mean;          // B x Z
  Node log_variance;  // B x Z, clamped to [-10, 10]
};

struct RecoveryLogits {
  Node domain;  // B x |domains|
  Node act;     // B x |acts|
  Node slots;   // B x |slots|
};

// Padded mini-batch. Token ids exclude sos/eos.
struct Batch {
  std::vector<std::vector<int>> tokens;
  Tensor condition;  // B x C
  Tensor da;         // B x (acts + slots)
  std::vector<int> domain_labels;
  std::vector<int> act_labels;
  Tensor slot_labels;  // B x S
  std::size_t size() const { return tokens.size(); }
};

Batch make_batch(std::span<const corpus::Example* const> examples, const corpus::Vocabulary& vocab,
                 const corpus::Inventories& inventories);
Batch make_batch(const corpus::Example& example, const corpus::Vocabulary& vocab,
                 const corpus::Inventories& inventories);
// Batch for generation: condition only, no tokens.
Batch make_condition_batch(const corpus::ConditionVector& condition, std::size_t copies);

Node affine(const Node& x, const Node& w, const Node& b);

// z = mean + exp(log_variance / 2) * noise
Node reparameterized_sample(const GaussianParams& g, const Tensor& noise);

class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(ad::ParameterStore& store, std::size_t input, std::size_t hidden, std::mt19937_64& rng);

  // Rows of `embedding_table` are looked up per step. Returns
  // [final forward h | final backward h], shape B x 2H.
  Node encode(const Node& embedding_table, const std::vector<std::vector<int>>& tokens) const;

  LstmCell& forward_cell() { return forward_; }
  LstmCell& backward_cell() { return backward_; }

 private:
  Node run(const LstmCell& cell, const Node& embedding_table, const std::vector<std::vector<int>>& tokens) const;
  LstmCell forward_;
  LstmCell backward_;
};

struct TeacherForced {
  Node logits;               // (T * B) x V, step-major
  std::vector<int> targets;  // -1 where padded
  std::size_t tokens = 0;    // count of scored tokens (eos included)
};

// The full network set. The SCLSTM baseline owns only the embedding,
// decoder and output layer.
class Model {
 public:
  Model(ModelKind kind, ModelDims dims, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  // Independent copy with its own parameter nodes.
  Model clone() const;

  ModelKind kind() const { return kind_; }
  const ModelDims& dims() const { return dims_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }

  Node encode(const Batch& batch) const;
  GaussianParams recognition(const Node& encoding, const Node& condition) const;
  GaussianParams prior(const Node& condition) const;
  RecoveryLogits recover(const Node& z) const;

  // h0 = c0 = z; a null z means a zero initial state.
  SclstmCell::State initial_state(const Node* z, const Tensor& da) const;
  // One decoder step: returns output logits (B x V) and advances `state`.
  Node decode_step(SclstmCell::State& state, std::span<const int> input_ids) const;
  TeacherForced decode_teacher_forced(const Node* z, const Batch& batch) const;

  const BiLstmEncoder& encoder() const { return encoder_; }
  BiLstmEncoder& encoder() { return encoder_; }

 private:
  ModelKind kind_;
  ModelDims dims_;
  ad::ParameterStore params_;
  Node embedding_;
  BiLstmEncoder encoder_;
  Node rec_w_, rec_b_;
  Node prior_w1_, prior_b1_, prior_w2_, prior_b2_;
  Node recover_domain_w_, recover_domain_b_;
  Node recover_act_w_, recover_act_b_;
  Node recover_slots_w_, recover_slots_b_;
  SclstmCell decoder_;
  Node out_w_, out_b_;
};

GaussianParams split_gaussian(const Node& stacked, std::size_t latent);

}  // namespace scvae::nets
