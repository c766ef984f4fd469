// SPDX-License-Identifier: Apache-2.0
#include "scvae/sr.hpp"

#include <algorithm>
#include <cctype>

namespace scvae::corpus {
namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '?';
}

class SrParser {
 public:
  explicit SrParser(std::string_view text) : text_(text) {}

  SemanticRepresentation parse() {
    SemanticRepresentation sr;
    skip_space();
    sr.act = read_name("dialogue act");
    skip_space();
    expect('(');
    skip_space();
    if (peek() != ')') {
      for (;;) {
        sr.slots.push_back(read_slot());
        skip_space();
        if (peek() == ';') {
          ++pos_;
          skip_space();
          continue;
        }
        break;
      }
    }
    expect(')');
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing characters after ')'", pos_);
    return sr;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string read_name(const char* what) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError(std::string("expected ") + what, start);
    return std::string(text_.substr(start, pos_ - start));
  }

  SlotValue read_slot() {
    SlotValue slot;
    slot.name = read_name("slot name");
    skip_space();
    if (peek() != '=') return slot;
    ++pos_;
    skip_space();
    if (peek() == '\'' || peek() == '"') {
      const char quote = text_[pos_++];
      const std::size_t start = pos_;
      const std::size_t end = text_.find(quote, start);
      if (end == std::string_view::npos) throw ParseError("unterminated quoted value", start - 1);
      slot.value = std::string(text_.substr(start, end - start));
      pos_ = end + 1;
    } else {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != ';' && text_[pos_] != ')') ++pos_;
      std::string_view raw = text_.substr(start, pos_ - start);
      while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
      if (raw.empty()) throw ParseError("empty slot value", start);
      slot.value = std::string(raw);
    }
    return slot;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

const SlotValue* SemanticRepresentation::find(std::string_view slot) const {
  auto it = std::find_if(slots.begin(), slots.end(), [&](const SlotValue& s) { return s.name == slot; });
  return it == slots.end() ? nullptr : &*it;
}

SemanticRepresentation parse_sr(std::string_view text, std::optional<Domain> domain,
                                const Inventories& inventories) {
  SemanticRepresentation sr = SrParser(text).parse();
  if (!inventories.act_index(sr.act)) {
    std::string known;
    for (const auto& a : inventories.acts()) known += (known.empty() ? "" : ", ") + a;
    throw ValidationError("unknown dialogue act '" + sr.act + "'; known acts: " + known);
  }
  for (std::size_t i = 0; i < sr.slots.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (sr.slots[i].name == sr.slots[j].name)
        throw ValidationError("duplicate slot '" + sr.slots[i].name + "' in " + std::string(text));
  sr.domain = domain;
  if (!sr.domain) {
    if (const SlotValue* type = sr.find("type"); type && type->value) sr.domain = domain_from_name(*type->value);
  }
  return sr;
}

std::string format_sr(const SemanticRepresentation& sr) {
  std::string out = sr.act + "(";
  for (std::size_t i = 0; i < sr.slots.size(); ++i) {
    if (i) out += ';';
    out += sr.slots[i].name;
    if (const auto& v = sr.slots[i].value) {
      if (v->find('\'') == std::string::npos) {
        out += "='" + *v + "'";
      } else if (v->find_first_of("\";)") == std::string::npos) {
        out += "=\"" + *v + "\"";
      } else {
        throw ValidationError("slot value cannot be formatted: " + *v);
      }
    }
  }
  return out + ")";
}

bool is_lexical_value(std::string_view value) {
  static const std::vector<std::string_view> lexical = {"yes", "no", "true", "false", "dontcare", "none"};
  std::string lower(value);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::find(lexical.begin(), lexical.end(), lower) != lexical.end();
}

bool is_delexicalisable(const SlotValue& slot) { return slot.value && !is_lexical_value(*slot.value); }

}  // namespace scvae::corpus
