// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace scvae::corpus {

// Closed word list. Ids 0..3 are reserved for sos, eos, unk and pad.
class Vocabulary {
 public:
  static constexpr int kSos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kPad = 3;
  static constexpr int kReserved = 4;

  Vocabulary();
  // Words sorted by descending frequency, ties broken lexicographically.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences);
  static Vocabulary from_words(std::vector<std::string> id_to_word);

  int id(const std::string& word) const;
  const std::string& word(int id) const;
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Stable 64-bit fingerprint of the id -> word mapping.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace scvae::corpus
