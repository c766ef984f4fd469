// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scvae/metrics.hpp"
#include "scvae/training.hpp"

namespace scvae::generation {

enum class DecodeMode { kGreedy, kSample };

struct GenerationRequest {
  corpus::SemanticRepresentation sr;
  std::size_t num_candidates = 10;
  std::size_t max_length = 60;
  DecodeMode mode = DecodeMode::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 1;
};

struct Candidate {
  std::size_t index = 0;             // position in the over-generated pool
  std::vector<std::string> tokens;   // delexicalised, eos stripped
  bool truncated = false;            // hit max_length before eos
  double log_likelihood = 0.0;       // sum of token log-probs, eos included
  metrics::SlotError slot_error;
  std::vector<double> z;             // latent used to initialise the decoder; empty for SCLSTM

  double normalized_log_likelihood() const;
};

// One RNG per candidate, so a candidate depends only on (seed, index).
std::mt19937_64 candidate_rng(std::uint64_t seed, std::size_t index);

// SCVAE: z ~ p(z | c) per candidate, then decode with the request's mode.
std::vector<Candidate> generate_scvae(const training::Checkpoint& checkpoint, const GenerationRequest& request);
// SCLSTM: zero initial state, token sampling at the request temperature.
std::vector<Candidate> generate_sclstm(const training::Checkpoint& checkpoint, const GenerationRequest& request);

// Over-generates and returns candidates ranked best first. SCLSTM always
// samples; SCVAE honours the request's mode.
std::vector<Candidate> generate(const training::Checkpoint& checkpoint, const GenerationRequest& request);

// Stable order: ERR ascending, then length-normalised log-likelihood
// descending, then pool index.
void rank_candidates(std::vector<Candidate>& candidates);

struct Surface {
  std::vector<std::string> tokens;
  std::vector<std::string> unresolved;  // placeholders with no value in the SR
};
// Substitutes SR values for placeholders. Placeholders the SR cannot fill
// are left as-is and reported.
Surface relexicalise(const std::vector<std::string>& tokens, const corpus::SemanticRepresentation& sr);

}  // namespace scvae::generation
