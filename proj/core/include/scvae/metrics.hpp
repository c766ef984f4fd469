// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "scvae/sr.hpp"
#include "scvae/text.hpp"

namespace scvae::metrics {

struct SlotError {
  double err = 0.0;
  int missing = 0;    // p
  int redundant = 0;  // q
  int required = 0;   // N

  friend bool operator==(const SlotError&, const SlotError&) = default;
};

// ERR = (p + q) / N over placeholder tokens. Only slots with non-binary
// values are required. Extra copies of a required slot count as redundant.
// When N = 0 the denominator is taken as 1, so a clean output scores 0.
SlotError slot_error_rate(const std::vector<std::string>& generated, const corpus::SemanticRepresentation& sr);

using Tokens = std::vector<std::string>;

struct BleuStats {
  std::array<double, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<double, 4> totals{};   // candidate n-gram counts
  double candidate_length = 0.0;
  double reference_length = 0.0;  // closest reference length per candidate
};

inline constexpr double kBleuEpsilon = 1e-9;

// Corpus statistics; each candidate is clipped against the maximum count of
// every n-gram over its reference set.
BleuStats bleu_stats(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);
double modified_precision(const BleuStats& stats, std::size_t n);
double bleu_from_stats(const BleuStats& stats);
// Corpus BLEU-4 with brevity penalty; zero precisions are floored at 1e-9.
double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

}  // namespace scvae::metrics
