// SPDX-License-Identifier: Apache-2.0
#include "scvae/condition.hpp"

#include <algorithm>

namespace scvae::corpus {

std::size_t ConditionVector::domain_index() const {
  return static_cast<std::size_t>(std::max_element(domain_onehot.begin(), domain_onehot.end()) -
                                  domain_onehot.begin());
}

std::size_t ConditionVector::act_index() const {
  return static_cast<std::size_t>(std::max_element(act_onehot.begin(), act_onehot.end()) - act_onehot.begin());
}

std::vector<double> ConditionVector::flatten() const {
  std::vector<double> out = domain_onehot;
  out.insert(out.end(), act_onehot.begin(), act_onehot.end());
  out.insert(out.end(), slot_binary.begin(), slot_binary.end());
  return out;
}

std::vector<double> ConditionVector::da_features() const {
  std::vector<double> out = act_onehot;
  out.insert(out.end(), slot_binary.begin(), slot_binary.end());
  return out;
}

ConditionVector encode_condition(const SemanticRepresentation& sr, const Inventories& inventories) {
  if (!sr.domain) throw ValidationError("semantic representation has no domain: " + format_sr(sr));
  const auto act = inventories.act_index(sr.act);
  if (!act) throw ValidationError("unknown dialogue act '" + sr.act + "'");
  ConditionVector c;
  c.domain_onehot.assign(inventories.domain_count(), 0.0);
  c.act_onehot.assign(inventories.acts().size(), 0.0);
  c.slot_binary.assign(inventories.slots().size(), 0.0);
  c.domain_onehot[static_cast<std::size_t>(*sr.domain)] = 1.0;
  c.act_onehot[*act] = 1.0;
  for (const auto& slot : sr.slots) {
    const auto idx = inventories.slot_index(slot.name);
    if (!idx) throw ValidationError("unknown slot '" + slot.name + "'");
    c.slot_binary[*idx] = 1.0;
  }
  return c;
}

}  // namespace scvae::corpus
