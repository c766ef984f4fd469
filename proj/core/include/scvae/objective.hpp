// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scvae/nets.hpp"

namespace scvae::training {

using ad::Node;
using ad::Tensor;

// Per-example averages over a batch, in nats.
struct LossBreakdown {
  double reconstruction_nll = 0.0;
  double kl = 0.0;
  double recovery_domain = 0.0;
  double recovery_act = 0.0;
  double recovery_slots = 0.0;
  double kl_weight = 0.0;
  double total = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct LossResult {
  Node total;  // scalar, per-example mean; differentiate this
  LossBreakdown breakdown;
  std::size_t tokens = 0;
  std::size_t correct_tokens = 0;  // argmax == target under teacher forcing
};

// Closed-form KL(post || prior) for diagonal Gaussians, summed over rows.
Node gaussian_kl(const nets::GaussianParams& post, const nets::GaussianParams& prior);
nets::GaussianParams standard_normal(std::size_t rows, std::size_t latent);

// Unconditional VAE bound: no condition input, N(0, I) prior, zero DA vector.
LossResult vae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight = 1.0);
LossResult cvae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight);
// cvae_loss plus domain, act and slot recovery terms on the same z.
LossResult scvae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight);
// Decoder-only likelihood with a zero initial state.
LossResult sclstm_loss(const nets::Model& model, const nets::Batch& batch);

// Training objective for the model's kind.
LossResult model_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight);

// Teacher-forced NLL with z fixed to the prior mean (SCVAE) or zero (SCLSTM).
struct Likelihood {
  double nll = 0.0;
  std::size_t tokens = 0;
  std::size_t correct = 0;
};
Likelihood prior_mean_likelihood(const nets::Model& model, const nets::Batch& batch);
// Same, with z fixed to the posterior mean.
Likelihood posterior_mean_likelihood(const nets::Model& model, const nets::Batch& batch);

}  // namespace scvae::training
