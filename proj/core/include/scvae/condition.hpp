// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "scvae/inventory.hpp"
#include "scvae/sr.hpp"

namespace scvae::corpus {

// Numeric form of an SR: one-hot domain, one-hot act, binary slot presence.
struct ConditionVector {
  std::vector<double> domain_onehot;
  std::vector<double> act_onehot;
  std::vector<double> slot_binary;

  std::size_t domain_index() const;
  std::size_t act_index() const;

  // [domain | act | slots]
  std::vector<double> flatten() const;
  // [act | slots], the decoder's dialogue-act feature.
  std::vector<double> da_features() const;
  std::size_t size() const { return domain_onehot.size() + act_onehot.size() + slot_binary.size(); }

  friend bool operator==(const ConditionVector&, const ConditionVector&) = default;
};

// Slot presence is 1 whether or not the slot carries a value.
ConditionVector encode_condition(const SemanticRepresentation& sr,
                                 const Inventories& inventories = Inventories::standard());

}  // namespace scvae::corpus
