// SPDX-License-Identifier: Apache-2.0
#include "scvae/objective.hpp"

#include <algorithm>

namespace scvae::training {
namespace {

struct Reconstruction {
  Node nll;
  std::size_t tokens = 0;
  std::size_t correct = 0;
};

std::size_t count_correct(const Tensor& logits, const std::vector<int>& targets) {
  const std::size_t V = logits.cols();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] < 0) continue;
    const double* row = logits.data().data() + r * V;
    const auto best = static_cast<int>(std::max_element(row, row + V) - row);
    correct += best == targets[r];
  }
  return correct;
}

Reconstruction reconstruct(const nets::Model& model, const Node* z, const nets::Batch& batch) {
  const auto tf = model.decode_teacher_forced(z, batch);
  return {ad::softmax_cross_entropy(tf.logits, tf.targets), tf.tokens, count_correct(tf.logits.value(), tf.targets)};
}

struct LatentPass {
  nets::GaussianParams posterior;
  Node z;
  Reconstruction rec;
};

LatentPass latent_pass(const nets::Model& model, const nets::Batch& batch, const Node& condition,
                       const Tensor& noise) {
  LatentPass p;
  p.posterior = model.recognition(model.encode(batch), condition);
  p.z = nets::reparameterized_sample(p.posterior, noise);
  p.rec = reconstruct(model, &p.z, batch);
  return p;
}

LossResult finish(const nets::Batch& batch, const Reconstruction& rec, const Node* kl, double kl_weight,
                  const nets::RecoveryLogits* recovered) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossResult r;
  r.tokens = rec.tokens;
  r.correct_tokens = rec.correct;
  Node total = rec.nll;
  r.breakdown.reconstruction_nll = rec.nll.value().item() * inv_b;
  r.breakdown.kl_weight = kl_weight;
  if (kl) {
    total = ad::add(total, ad::scale(*kl, kl_weight));
    r.breakdown.kl = kl->value().item() * inv_b;
  }
  if (recovered) {
    const Node d = ad::softmax_cross_entropy(recovered->domain, batch.domain_labels);
    const Node a = ad::softmax_cross_entropy(recovered->act, batch.act_labels);
    const Node s = ad::sigmoid_cross_entropy(recovered->slots, batch.slot_labels);
    total = ad::add(ad::add(ad::add(total, d), a), s);
    r.breakdown.recovery_domain = d.value().item() * inv_b;
    r.breakdown.recovery_act = a.value().item() * inv_b;
    r.breakdown.recovery_slots = s.value().item() * inv_b;
  }
  r.total = ad::scale(total, inv_b);
  r.breakdown.total = r.total.value().item();
  return r;
}

}  // namespace

Node gaussian_kl(const nets::GaussianParams& post, const nets::GaussianParams& prior) {
  if (post.mean.shape() != prior.mean.shape() || post.log_variance.shape() != prior.log_variance.shape() ||
      post.mean.shape() != post.log_variance.shape())
    throw ad::ContractError("gaussian_kl: parameter shapes differ (" + ad::shape_string(post.mean.shape()) +
                            " vs " + ad::shape_string(prior.mean.shape()) + ")");
  const Node diff = ad::sub(post.mean, prior.mean);
  const Node ratio = ad::mul(ad::add(ad::exp(post.log_variance), ad::mul(diff, diff)),
                             ad::exp(ad::neg(prior.log_variance)));
  const Node per_dim = ad::sub(ad::add(ratio, ad::sub(prior.log_variance, post.log_variance)),
                               Node::constant(Tensor::scalar(1.0)));
  return ad::scale(ad::sum(per_dim), 0.5);
}

nets::GaussianParams standard_normal(std::size_t rows, std::size_t latent) {
  return {Node::constant(Tensor({rows, latent})), Node::constant(Tensor({rows, latent}))};
}

LossResult vae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight) {
  nets::Batch unconditioned = batch;
  unconditioned.da.fill(0.0);
  const Node no_condition = Node::constant(Tensor(batch.condition.shape()));
  const auto p = latent_pass(model, unconditioned, no_condition, noise);
  const Node kl = gaussian_kl(p.posterior, standard_normal(batch.size(), model.dims().latent));
  return finish(batch, p.rec, &kl, kl_weight, nullptr);
}

LossResult cvae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight) {
  const Node condition = Node::constant(batch.condition);
  const auto p = latent_pass(model, batch, condition, noise);
  const Node kl = gaussian_kl(p.posterior, model.prior(condition));
  return finish(batch, p.rec, &kl, kl_weight, nullptr);
}

LossResult scvae_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight) {
  const Node condition = Node::constant(batch.condition);
  const auto p = latent_pass(model, batch, condition, noise);
  const Node kl = gaussian_kl(p.posterior, model.prior(condition));
  const auto recovered = model.recover(p.z);
  return finish(batch, p.rec, &kl, kl_weight, &recovered);
}

LossResult sclstm_loss(const nets::Model& model, const nets::Batch& batch) {
  return finish(batch, reconstruct(model, nullptr, batch), nullptr, 0.0, nullptr);
}

LossResult model_loss(const nets::Model& model, const nets::Batch& batch, const Tensor& noise, double kl_weight) {
  return model.kind() == nets::ModelKind::kScvae ? scvae_loss(model, batch, noise, kl_weight)
                                                 : sclstm_loss(model, batch);
}

Likelihood prior_mean_likelihood(const nets::Model& model, const nets::Batch& batch) {
  ad::NoGradGuard no_grad;
  Reconstruction rec;
  if (model.kind() == nets::ModelKind::kScvae) {
    const Node z = model.prior(Node::constant(batch.condition)).mean;
    rec = reconstruct(model, &z, batch);
  } else {
    rec = reconstruct(model, nullptr, batch);
  }
  return {rec.nll.value().item(), rec.tokens, rec.correct};
}

Likelihood posterior_mean_likelihood(const nets::Model& model, const nets::Batch& batch) {
  ad::NoGradGuard no_grad;
  if (model.kind() != nets::ModelKind::kScvae) return prior_mean_likelihood(model, batch);
  const Node z = model.recognition(model.encode(batch), Node::constant(batch.condition)).mean;
  const auto rec = reconstruct(model, &z, batch);
  return {rec.nll.value().item(), rec.tokens, rec.correct};
}

}  // namespace scvae::training
