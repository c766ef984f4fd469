// SPDX-License-Identifier: Apache-2.0
#include "scvae/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace scvae::training {
namespace {

constexpr std::uint64_t kNoiseStream = 0x5eed0001ULL;
constexpr std::uint64_t kValidStream = 0x5eed0002ULL;
constexpr std::size_t kEvalBatch = 64;

Tensor gaussian_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t({rows, cols});
  for (double& v : t.data()) v = normal(rng);
  return t;
}

std::vector<const corpus::Example*> pointers(const std::vector<corpus::Example>& examples) {
  std::vector<const corpus::Example*> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(&e);
  return out;
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b, double weight) {
  acc.reconstruction_nll += weight * b.reconstruction_nll;
  acc.kl += weight * b.kl;
  acc.recovery_domain += weight * b.recovery_domain;
  acc.recovery_act += weight * b.recovery_act;
  acc.recovery_slots += weight * b.recovery_slots;
  acc.total += weight * b.total;
}

LossBreakdown scaled(LossBreakdown b, double factor) {
  b.reconstruction_nll *= factor;
  b.kl *= factor;
  b.recovery_domain *= factor;
  b.recovery_act *= factor;
  b.recovery_slots *= factor;
  b.total *= factor;
  return b;
}

std::string batch_dump(std::span<const corpus::Example* const> batch) {
  std::ostringstream os;
  for (const auto* ex : batch)
    os << "\n  " << corpus::domain_name(*ex->sr.domain) << " " << corpus::format_sr(ex->sr) << " | "
       << corpus::join_tokens(ex->delex.tokens);
  return os.str();
}

}  // namespace

double AnnealSchedule::weight(std::size_t step) const {
  if (ramp_steps == 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / static_cast<double>(ramp_steps));
}

Adam::Adam(ad::ParameterStore& params, AdamConfig config) : params_(params), config_(config) {
  for (const auto& p : params_.all()) {
    m_.emplace_back(p.node.size(), 0.0);
    v_.emplace_back(p.node.size(), 0.0);
  }
}

double Adam::step() {
  double sq = 0.0;
  for (const auto& p : params_.all())
    for (double g : p.node.grad().data()) sq += g * g;
  const double norm = std::sqrt(sq);
  const double clip = (config_.clip_norm > 0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto& all = params_.all();
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto value = all[k].node.mutable_value().data();
    const auto grad = all[k].node.grad().data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      value[i] -= config_.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.epsilon);
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw std::invalid_argument("data fraction must lie in (0, 1]");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (latent == 0 || embedding == 0 || encoder_hidden == 0 || prior_hidden == 0)
    throw std::invalid_argument("layer sizes must be positive");
}

Checkpoint Checkpoint::clone() const {
  return Checkpoint{model.clone(), vocabulary, inventories, config, global_step};
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "step,epoch,split,nll,kl,kl_weight,recovery_d,recovery_a,recovery_s,total\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& l = r.loss;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.step, r.epoch,
                  r.split.c_str(), l.reconstruction_nll, l.kl, l.kl_weight, l.recovery_domain, l.recovery_act,
                  l.recovery_slots, l.total);
    out << buf;
  }
}

std::vector<corpus::Example> select_training_examples(const std::vector<corpus::Example>& train,
                                                      const TrainConfig& config) {
  config.validate();
  std::map<corpus::Domain, std::vector<std::size_t>> by_domain;
  for (std::size_t i = 0; i < train.size(); ++i) by_domain[*train[i].sr.domain].push_back(i);
  std::mt19937_64 rng(config.seed ^ 0xda7aULL);
  std::vector<std::size_t> keep;
  for (auto& [domain, idx] : by_domain) {
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n = static_cast<std::size_t>(std::llround(config.data_fraction * static_cast<double>(idx.size())));
    n = std::clamp<std::size_t>(n, 1, idx.size());
    if (config.kshot_target && *config.kshot_target == domain) n = std::min(n, config.kshot_cap);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<corpus::Example> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(train[i]);
  return out;
}

corpus::Vocabulary build_vocabulary(const std::vector<corpus::Example>& train) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(train.size());
  for (const auto& e : train) sentences.push_back(e.delex.tokens);
  return corpus::Vocabulary::build(sentences);
}

nets::ModelDims model_dims(const TrainConfig& config, const corpus::Vocabulary& vocab,
                           const corpus::Inventories& inventories) {
  nets::ModelDims dims;
  dims.vocab = vocab.size();
  dims.embedding = config.embedding;
  dims.encoder_hidden = config.encoder_hidden;
  dims.latent = config.latent;
  dims.prior_hidden = config.prior_hidden;
  dims.domains = inventories.domain_count();
  dims.acts = inventories.acts().size();
  dims.slots = inventories.slots().size();
  return dims;
}

LossBreakdown evaluate_loss(const Checkpoint& checkpoint, const std::vector<corpus::Example>& examples,
                            std::uint64_t seed) {
  ad::NoGradGuard no_grad;
  LossBreakdown acc;
  acc.kl_weight = 1.0;
  if (examples.empty()) return acc;
  std::mt19937_64 rng(seed ^ kValidStream);
  const auto ptrs = pointers(examples);
  for (std::size_t start = 0; start < ptrs.size(); start += kEvalBatch) {
    const std::size_t end = std::min(ptrs.size(), start + kEvalBatch);
    const auto span = std::span<const corpus::Example* const>(ptrs).subspan(start, end - start);
    const auto batch = nets::make_batch(span, checkpoint.vocabulary, checkpoint.inventories);
    const Tensor noise = gaussian_noise(batch.size(), checkpoint.model.dims().latent, rng);
    const auto result = model_loss(checkpoint.model, batch, noise, 1.0);
    accumulate(acc, result.breakdown, static_cast<double>(batch.size()));
  }
  auto mean = scaled(acc, 1.0 / static_cast<double>(examples.size()));
  mean.kl_weight = 1.0;
  return mean;
}

TokenAccuracy teacher_forced_accuracy(const Checkpoint& checkpoint, const std::vector<corpus::Example>& examples) {
  TokenAccuracy acc;
  const auto ptrs = pointers(examples);
  for (std::size_t start = 0; start < ptrs.size(); start += kEvalBatch) {
    const std::size_t end = std::min(ptrs.size(), start + kEvalBatch);
    const auto batch = nets::make_batch(std::span<const corpus::Example* const>(ptrs).subspan(start, end - start),
                                        checkpoint.vocabulary, checkpoint.inventories);
    const auto l = posterior_mean_likelihood(checkpoint.model, batch);
    acc.tokens += l.tokens;
    acc.correct += l.correct;
  }
  return acc;
}

TrainResult train(const TrainConfig& config, const corpus::DatasetSplit& data) {
  config.validate();
  if (data.train.empty()) throw std::invalid_argument("training split is empty");
  const auto& inventories = corpus::Inventories::standard();
  corpus::Vocabulary vocab = build_vocabulary(data.train);
  const auto examples = select_training_examples(data.train, config);

  nets::Model model(config.kind, model_dims(config, vocab, inventories), config.seed);
  TrainResult result{Checkpoint{std::move(model), vocab, inventories, config, 0}, {}, 0, 0};
  Checkpoint& ckpt = result.checkpoint;
  Adam adam(ckpt.model.params(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.clip_norm});
  const AnnealSchedule schedule{config.anneal_steps};

  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 noise_rng(config.seed ^ kNoiseStream);
  auto order = pointers(examples);

  double best = std::numeric_limits<double>::infinity();
  ad::ParameterStore best_params = ckpt.model.params().clone();
  std::size_t best_step = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossBreakdown epoch_loss;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto span = std::span<const corpus::Example* const>(order).subspan(start, end - start);
      const auto batch = nets::make_batch(span, vocab, inventories);
      const Tensor noise = gaussian_noise(batch.size(), config.latent, noise_rng);
      const double w = schedule.weight(step);
      ckpt.model.params().zero_gradients();
      const auto loss = model_loss(ckpt.model, batch, noise, w);
      if (!std::isfinite(loss.breakdown.total))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                            " (nll=" + std::to_string(loss.breakdown.reconstruction_nll) +
                            ", kl=" + std::to_string(loss.breakdown.kl) + "); batch:" + batch_dump(span));
      ad::backward(loss.total);
      adam.step();
      ++step;
      accumulate(epoch_loss, loss.breakdown, static_cast<double>(batch.size()));
      epoch_loss.kl_weight = w;
    }
    const double w_epoch = epoch_loss.kl_weight;
    epoch_loss = scaled(epoch_loss, 1.0 / static_cast<double>(order.size()));
    epoch_loss.kl_weight = w_epoch;
    result.log.push_back({step, epoch, "train", epoch_loss});
    result.epochs_run = epoch;
    ckpt.global_step = step;

    if (data.valid.empty()) {
      best_params.assign_from(ckpt.model.params());
      best_step = step;
      result.best_epoch = epoch;
      continue;
    }
    const auto valid = evaluate_loss(ckpt, data.valid, config.seed);
    result.log.push_back({step, epoch, "valid", valid});
    if (valid.total < best) {
      best = valid.total;
      best_params.assign_from(ckpt.model.params());
      best_step = step;
      result.best_epoch = epoch;
    } else if (epoch - result.best_epoch >= config.patience) {
      break;
    }
  }
  ckpt.model.params().assign_from(best_params);
  ckpt.global_step = best_step;
  return result;
}

}  // namespace scvae::training
