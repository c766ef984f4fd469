// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scvae/dataset.hpp"

namespace scvae::corpus {

struct SynthConfig {
  std::vector<Domain> domains = all_domains();
  std::vector<std::string> acts;   // empty: every act of each domain
  std::vector<std::string> slots;  // empty: every slot of each domain
  std::size_t templates = 3;       // surface templates per (domain, act)
  std::size_t pairs = 2000;
  std::uint64_t seed = 1;
  // Allocate pairs to domains in the proportions of the four-domain corpus
  // (restaurant < hotel < television < laptop); otherwise evenly.
  bool corpus_proportions = true;
};

// Template-expanded (SR, reference) pairs. Every reference realises each
// valued slot of its SR exactly once; deterministic under `seed`.
std::vector<Example> synth_corpus(const SynthConfig& config);

}  // namespace scvae::corpus
