// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scvae/sr.hpp"

namespace scvae::corpus {

inline constexpr std::string_view kSlotPrefix = "SLOT_";

// Lowercases and splits on whitespace and punctuation; punctuation marks become
// their own tokens. Placeholder tokens (SLOT_*) pass through unchanged.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

std::string slot_token(std::string_view slot_name);
bool is_slot_token(std::string_view token);
std::optional<std::string> slot_of_token(std::string_view token);

using SlotCounts = std::map<std::string, int>;

struct DelexicalisedUtterance {
  std::vector<std::string> tokens;
  SlotCounts slot_tokens_present;

  friend bool operator==(const DelexicalisedUtterance&, const DelexicalisedUtterance&) = default;
};

// Multiset of placeholder tokens in a token sequence, keyed by slot name.
SlotCounts count_slot_tokens(const std::vector<std::string>& tokens);

struct DelexResult {
  DelexicalisedUtterance utterance;
  std::size_t unmatched_values = 0;
};

// Replaces slot values found in `reference` by placeholder tokens, longest value
// first, matching case-insensitively on token boundaries.
DelexResult delexicalise(std::string_view reference, const SemanticRepresentation& sr);

// Wraps already-delexicalised text.
DelexicalisedUtterance from_delexicalised_text(std::string_view text);

}  // namespace scvae::corpus
