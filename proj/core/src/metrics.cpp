// SPDX-License-Identifier: Apache-2.0
#include "scvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace scvae::metrics {
namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

SlotError slot_error_rate(const std::vector<std::string>& generated, const corpus::SemanticRepresentation& sr) {
  SlotError e;
  auto present = corpus::count_slot_tokens(generated);
  for (const auto& slot : sr.slots) {
    if (!corpus::is_delexicalisable(slot)) continue;
    ++e.required;
    auto it = present.find(slot.name);
    if (it == present.end() || it->second == 0) {
      ++e.missing;
    } else {
      e.redundant += it->second - 1;
      present.erase(it);
    }
  }
  for (const auto& [slot, count] : present) e.redundant += count;
  e.err = static_cast<double>(e.missing + e.redundant) / static_cast<double>(std::max(e.required, 1));
  return e;
}

BleuStats bleu_stats(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  if (candidates.empty()) throw std::invalid_argument("bleu4: empty corpus");
  if (candidates.size() != references.size())
    throw std::invalid_argument("bleu4: " + std::to_string(candidates.size()) + " candidates but " +
                                std::to_string(references.size()) + " reference sets");
  BleuStats stats;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw std::invalid_argument("bleu4: candidate " + std::to_string(i) + " has no references");
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto cand_counts = ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& ref : refs)
        for (const auto& [gram, count] : ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], count);
      for (const auto& [gram, count] : cand_counts) {
        auto it = max_ref.find(gram);
        stats.matches[n - 1] += std::min(count, it == max_ref.end() ? 0 : it->second);
        stats.totals[n - 1] += count;
      }
    }
    // Closest reference length, preferring the shorter on ties.
    const auto c = static_cast<long>(cand.size());
    long best = static_cast<long>(refs[0].size());
    for (const auto& ref : refs) {
      const auto r = static_cast<long>(ref.size());
      if (std::labs(r - c) < std::labs(best - c) || (std::labs(r - c) == std::labs(best - c) && r < best)) best = r;
    }
    stats.candidate_length += static_cast<double>(c);
    stats.reference_length += static_cast<double>(best);
  }
  return stats;
}

double modified_precision(const BleuStats& stats, std::size_t n) {
  if (n < 1 || n > 4) throw std::out_of_range("n-gram order must be in 1..4");
  const double total = stats.totals[n - 1];
  return total > 0 ? stats.matches[n - 1] / total : 0.0;
}

double bleu_from_stats(const BleuStats& stats) {
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) log_sum += std::log(std::max(modified_precision(stats, n), kBleuEpsilon));
  const double c = stats.candidate_length;
  const double r = stats.reference_length;
  const double bp = c >= r ? 1.0 : (c > 0 ? std::exp(1.0 - r / c) : 0.0);
  return bp * std::exp(log_sum / 4.0);
}

double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  return bleu_from_stats(bleu_stats(candidates, references));
}

}  // namespace scvae::metrics
