// SPDX-License-Identifier: Apache-2.0
#include "scvae/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scvae::generation {
namespace {

using corpus::Vocabulary;

bool never_emitted(int id) { return id == Vocabulary::kSos || id == Vocabulary::kPad; }

// Log-softmax of one logits row at temperature t, with sos and pad masked.
std::vector<double> log_probs(std::span<const double> row, double t) {
  std::vector<double> out(row.size());
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < row.size(); ++v)
    if (!never_emitted(static_cast<int>(v))) max = std::max(max, row[v] / t);
  double sum = 0.0;
  for (std::size_t v = 0; v < row.size(); ++v)
    if (!never_emitted(static_cast<int>(v))) sum += std::exp(row[v] / t - max);
  const double log_z = max + std::log(sum);
  for (std::size_t v = 0; v < row.size(); ++v)
    out[v] = never_emitted(static_cast<int>(v)) ? -std::numeric_limits<double>::infinity() : row[v] / t - log_z;
  return out;
}

std::vector<Candidate> decode(const training::Checkpoint& ckpt, const GenerationRequest& req, const ad::Node* z,
                              const ad::Tensor& da, std::vector<std::mt19937_64>& rngs) {
  const std::size_t n = req.num_candidates;
  const auto& model = ckpt.model;
  auto state = model.initial_state(z, da);
  std::vector<Candidate> out(n);
  std::vector<int> inputs(n, Vocabulary::kSos);
  std::vector<bool> done(n, false);
  std::size_t remaining = n;
  for (std::size_t b = 0; b < n; ++b) out[b].index = b;

  for (std::size_t t = 0; t < req.max_length && remaining > 0; ++t) {
    const ad::Node logits = model.decode_step(state, inputs);
    const auto& lv = logits.value();
    for (std::size_t b = 0; b < n; ++b) {
      if (done[b]) continue;
      std::span<const double> row(lv.data().data() + b * lv.cols(), lv.cols());
      // Sampling is always at the request temperature; the reported
      // likelihood is under the model itself (T = 1).
      const auto lp = log_probs(row, 1.0);
      int next = 0;
      if (req.mode == DecodeMode::kGreedy) {
        next = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      } else {
        const auto tp = req.temperature == 1.0 ? lp : log_probs(row, req.temperature);
        std::vector<double> weights(tp.size());
        std::transform(tp.begin(), tp.end(), weights.begin(), [](double x) { return std::exp(x); });
        std::discrete_distribution<int> pick(weights.begin(), weights.end());
        next = pick(rngs[b]);
      }
      out[b].log_likelihood += lp[static_cast<std::size_t>(next)];
      if (next == Vocabulary::kEos) {
        done[b] = true;
        --remaining;
      } else {
        out[b].tokens.push_back(ckpt.vocabulary.word(next));
      }
      inputs[b] = next;
    }
  }
  for (std::size_t b = 0; b < n; ++b) {
    out[b].truncated = !done[b];
    out[b].slot_error = metrics::slot_error_rate(out[b].tokens, req.sr);
  }
  return out;
}

void check_request(const GenerationRequest& req) {
  if (req.num_candidates == 0) throw std::invalid_argument("num_candidates must be positive");
  if (req.max_length == 0) throw std::invalid_argument("max_length must be positive");
  if (!(req.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

}  // namespace

double Candidate::normalized_log_likelihood() const {
  return log_likelihood / static_cast<double>(tokens.size() + (truncated ? 0 : 1));
}

std::mt19937_64 candidate_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x67656eU};
  return std::mt19937_64(seq);
}

std::vector<Candidate> generate_scvae(const training::Checkpoint& ckpt, const GenerationRequest& req) {
  check_request(req);
  if (ckpt.model.kind() != nets::ModelKind::kScvae) throw std::invalid_argument("checkpoint is not an SCVAE model");
  ad::NoGradGuard no_grad;
  const auto cond = corpus::encode_condition(req.sr, ckpt.inventories);
  const auto batch = nets::make_condition_batch(cond, req.num_candidates);
  const auto prior = ckpt.model.prior(ad::Node::constant(batch.condition));

  const std::size_t Z = ckpt.model.dims().latent;
  std::vector<std::mt19937_64> rngs;
  ad::Tensor noise({req.num_candidates, Z});
  for (std::size_t b = 0; b < req.num_candidates; ++b) {
    rngs.push_back(candidate_rng(req.seed, b));
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < Z; ++k) noise.at(b, k) = normal(rngs.back());
  }
  const ad::Node z = nets::reparameterized_sample(prior, noise);
  auto out = decode(ckpt, req, &z, batch.da, rngs);
  const auto& zv = z.value();
  for (std::size_t b = 0; b < out.size(); ++b)
    out[b].z.assign(zv.data().begin() + static_cast<std::ptrdiff_t>(b * Z),
                    zv.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * Z));
  return out;
}

std::vector<Candidate> generate_sclstm(const training::Checkpoint& ckpt, const GenerationRequest& req) {
  check_request(req);
  if (ckpt.model.kind() != nets::ModelKind::kSclstm) throw std::invalid_argument("checkpoint is not an SCLSTM model");
  ad::NoGradGuard no_grad;
  const auto cond = corpus::encode_condition(req.sr, ckpt.inventories);
  const auto batch = nets::make_condition_batch(cond, req.num_candidates);
  std::vector<std::mt19937_64> rngs;
  for (std::size_t b = 0; b < req.num_candidates; ++b) rngs.push_back(candidate_rng(req.seed, b));
  GenerationRequest sampled = req;
  sampled.mode = DecodeMode::kSample;
  return decode(ckpt, sampled, nullptr, batch.da, rngs);
}

std::vector<Candidate> generate(const training::Checkpoint& ckpt, const GenerationRequest& req) {
  auto out = ckpt.model.kind() == nets::ModelKind::kScvae ? generate_scvae(ckpt, req) : generate_sclstm(ckpt, req);
  rank_candidates(out);
  return out;
}

void rank_candidates(std::vector<Candidate>& candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.slot_error.err != b.slot_error.err) return a.slot_error.err < b.slot_error.err;
    const double la = a.normalized_log_likelihood();
    const double lb = b.normalized_log_likelihood();
    if (la != lb) return la > lb;
    return a.index < b.index;
  });
}

Surface relexicalise(const std::vector<std::string>& tokens, const corpus::SemanticRepresentation& sr) {
  Surface out;
  for (const auto& tok : tokens) {
    if (!corpus::is_slot_token(tok)) {
      out.tokens.push_back(tok);
      continue;
    }
    const std::string slot = corpus::slot_of_token(tok).value_or(tok);
    const auto* sv = sr.find(slot);
    if (sv && sv->value) {
      for (auto& piece : corpus::tokenize(*sv->value)) out.tokens.push_back(std::move(piece));
    } else {
      out.tokens.push_back(tok);
      out.unresolved.push_back(slot);
    }
  }
  return out;
}

}  // namespace scvae::generation
