// SPDX-License-Identifier: Apache-2.0
#include "scvae/vocabulary.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace scvae::corpus {

Vocabulary::Vocabulary() : words_{"<sos>", "<eos>", "<unk>", "<pad>"} {
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<int>(i));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> id_to_word) {
  if (id_to_word.size() < kReserved || id_to_word[kSos] != "<sos>" || id_to_word[kEos] != "<eos>" ||
      id_to_word[kUnk] != "<unk>" || id_to_word[kPad] != "<pad>")
    throw std::invalid_argument("vocabulary must start with the reserved tokens <sos> <eos> <unk> <pad>");
  Vocabulary v;
  v.words_ = std::move(id_to_word);
  v.index_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    if (!v.index_.emplace(v.words_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocabulary entry: " + v.words_[i]);
  return v;
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words = {"<sos>", "<eos>", "<unk>", "<pad>"};
  for (auto& [w, c] : entries)
    if (w != "<sos>" && w != "<eos>" && w != "<unk>" && w != "<pad>") words.push_back(w);
  return from_words(std::move(words));
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
    throw std::out_of_range("vocabulary id " + std::to_string(id));
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::uint64_t Vocabulary::hash() const {
  // FNV-1a over the words, each terminated by a NUL byte.
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& w : words_) {
    for (unsigned char c : w) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace scvae::corpus
