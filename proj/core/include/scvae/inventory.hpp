// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scvae::corpus {

enum class Domain { kRestaurant, kHotel, kTelevision, kLaptop };

inline constexpr std::size_t kDomainCount = 4;

std::string_view domain_name(Domain d);
std::optional<Domain> domain_from_name(std::string_view name);
const std::vector<Domain>& all_domains();

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Names of the domains, dialogue acts and slots a condition vector ranges over.
// The default registry is the four-domain corpus with its 14 system acts and
// the union of all domain slot sets.
class Inventories {
 public:
  Inventories(std::vector<std::string> acts, std::vector<std::string> slots);
  static const Inventories& standard();

  const std::vector<std::string>& acts() const noexcept { return acts_; }
  const std::vector<std::string>& slots() const noexcept { return slots_; }
  std::size_t domain_count() const noexcept { return kDomainCount; }

  std::optional<std::size_t> act_index(std::string_view act) const;
  std::optional<std::size_t> slot_index(std::string_view slot) const;

  friend bool operator==(const Inventories&, const Inventories&) = default;

 private:
  std::vector<std::string> acts_;
  std::vector<std::string> slots_;
};

// Acts and slots each domain uses.
const std::vector<std::string>& domain_acts(Domain d);
const std::vector<std::string>& domain_slots(Domain d);

// Slots whose values are realised lexically (yes/no style) in the corpus.
bool is_binary_slot(std::string_view slot);

}  // namespace scvae::corpus
