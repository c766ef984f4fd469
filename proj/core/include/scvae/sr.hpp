// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scvae/inventory.hpp"

namespace scvae::corpus {

struct SlotValue {
  std::string name;
  std::optional<std::string> value;

  friend bool operator==(const SlotValue&, const SlotValue&) = default;
};

// Semantic representation: domain, dialogue act and ordered slot-value pairs.
struct SemanticRepresentation {
  std::optional<Domain> domain;
  std::string act;
  std::vector<SlotValue> slots;

  const SlotValue* find(std::string_view slot) const;

  friend bool operator==(const SemanticRepresentation&, const SemanticRepresentation&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Parses `act(slot='value';slot=value;slot)`. The domain is taken from
// `domain` when given, otherwise inferred from a `type` slot naming one.
SemanticRepresentation parse_sr(std::string_view text, std::optional<Domain> domain = std::nullopt,
                                const Inventories& inventories = Inventories::standard());

// Inverse of parse_sr for the act/slot part (domain is not part of the text).
std::string format_sr(const SemanticRepresentation& sr);

// Values realised as words rather than placeholders (yes/no, true/false, ...).
bool is_lexical_value(std::string_view value);

// Slot carries a value that is replaced by a placeholder token in text.
bool is_delexicalisable(const SlotValue& slot);

}  // namespace scvae::corpus
