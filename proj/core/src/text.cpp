// SPDX-License-Identifier: Apache-2.0
#include "scvae/text.hpp"

#include <algorithm>
#include <cctype>

namespace scvae::corpus {
namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80; }

bool is_slot_char(unsigned char c) { return std::isupper(c) || std::isdigit(c) || c == '_' || c == '-'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (text.substr(i).starts_with(kSlotPrefix)) {
      std::size_t j = i + kSlotPrefix.size();
      while (j < text.size() && is_slot_char(static_cast<unsigned char>(text[j]))) ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      std::string word;
      while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j])))
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(text[j++])));
      tokens.push_back(std::move(word));
      i = j;
    } else {
      tokens.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string slot_token(std::string_view slot_name) {
  std::string token(kSlotPrefix);
  for (char c : slot_name) token += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return token;
}

bool is_slot_token(std::string_view token) {
  return token.size() > kSlotPrefix.size() && token.starts_with(kSlotPrefix);
}

std::optional<std::string> slot_of_token(std::string_view token) {
  if (!is_slot_token(token)) return std::nullopt;
  std::string name(token.substr(kSlotPrefix.size()));
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  return name;
}

SlotCounts count_slot_tokens(const std::vector<std::string>& tokens) {
  SlotCounts counts;
  for (const auto& t : tokens)
    if (auto slot = slot_of_token(t)) ++counts[*slot];
  return counts;
}

DelexResult delexicalise(std::string_view reference, const SemanticRepresentation& sr) {
  struct Pattern {
    std::vector<std::string> tokens;
    std::string placeholder;
    bool matched = false;
  };
  std::vector<Pattern> patterns;
  for (const auto& slot : sr.slots) {
    if (!is_delexicalisable(slot)) continue;
    auto value_tokens = tokenize(*slot.value);
    if (value_tokens.empty()) continue;
    patterns.push_back({std::move(value_tokens), slot_token(slot.name)});
  }
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const Pattern& a, const Pattern& b) { return a.tokens.size() > b.tokens.size(); });

  const auto input = tokenize(reference);
  DelexResult result;
  auto& out = result.utterance.tokens;
  std::size_t i = 0;
  while (i < input.size()) {
    bool replaced = false;
    for (auto& p : patterns) {
      const std::size_t n = p.tokens.size();
      if (i + n <= input.size() && std::equal(p.tokens.begin(), p.tokens.end(), input.begin() + i)) {
        out.push_back(p.placeholder);
        p.matched = true;
        i += n;
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(input[i++]);
  }
  result.unmatched_values = static_cast<std::size_t>(
      std::count_if(patterns.begin(), patterns.end(), [](const Pattern& p) { return !p.matched; }));
  result.utterance.slot_tokens_present = count_slot_tokens(out);
  return result;
}

DelexicalisedUtterance from_delexicalised_text(std::string_view text) {
  DelexicalisedUtterance u;
  u.tokens = tokenize(text);
  u.slot_tokens_present = count_slot_tokens(u.tokens);
  return u;
}

}  // namespace scvae::corpus
