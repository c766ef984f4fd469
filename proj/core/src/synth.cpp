// SPDX-License-Identifier: Apache-2.0
#include "scvae/synth.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace scvae::corpus {
namespace {

struct Frames {
  std::vector<std::string> with_slots;
  std::vector<std::string> without_slots;
};

// {n}: domain noun, {s}: joined slot phrases.
const std::map<std::string, Frames>& frame_table() {
  static const std::map<std::string, Frames> table = {
      {"inform",
       {{"there is a {n} {s} .", "i found a {n} {s} .", "i would suggest this {n} {s} .",
         "here is a nice {n} {s} ."},
        {}}},
      {"inform_only",
       {{"the only {n} is one {s} .", "only one {n} matches , {s} .", "there is just one {n} {s} ."}, {}}},
      {"inform_count",
       {{"there are several {n}s {s} .", "i found a few {n}s {s} .", "we have many {n}s {s} ."}, {}}},
      {"inform_no_match",
       {{"there is no {n} {s} .", "sorry , no {n} matches {s} .", "unfortunately i can not find a {n} {s} ."},
        {}}},
      {"inform_all",
       {{"all the {n}s come {s} .", "every {n} here comes {s} .", "each of those {n}s is one {s} ."}, {}}},
      {"inform_no_info",
       {{"i have no information about the {n} {s} .", "sorry , nothing is known on the {n} {s} .",
         "i do not know about any {n} {s} ."},
        {}}},
      {"recommend",
       {{"i recommend the {n} {s} .", "you might like the {n} {s} .", "my pick is the {n} {s} ."}, {}}},
      {"suggest",
       {{"would you like a {n} {s} ?", "how about a {n} {s} ?", "maybe you want a {n} {s} ?"}, {}}},
      {"compare",
       {{"to compare , one {n} comes {s} .", "comparing the {n}s , there is one {s} .",
         "between the {n}s , one is {s} ."},
        {}}},
      {"confirm",
       {{"do you want a {n} {s} ?", "so you are looking for a {n} {s} ?", "let me confirm , a {n} {s} ?"}, {}}},
      {"select",
       {{"would you prefer a {n} {s} ?", "should i pick a {n} {s} ?", "do you want the {n} {s} or not ?"}, {}}},
      {"request",
       {{"what {s} would you like ?", "which {s} are you looking for ?", "could you tell me the {s} for the {n} ?"},
        {}}},
      {"reqmore",
       {{},
        {"is there anything else ?", "can i help you with anything else ?", "do you need more {n} information ?"}}},
      {"goodbye",
       {{}, {"thank you , goodbye .", "goodbye and have a nice day .", "thanks for using the {n} service , goodbye ."}}},
  };
  return table;
}

const std::vector<std::string> kValueForms = {"with {l} {v}", "whose {l} is {v}", "with {v} as {l}",
                                              "that has {l} {v}"};
const std::vector<std::string> kConnectives = {" and ", " , ", " , also "};

std::string domain_noun(Domain d) {
  switch (d) {
    case Domain::kRestaurant: return "restaurant";
    case Domain::kHotel: return "hotel";
    case Domain::kTelevision: return "television";
    case Domain::kLaptop: return "laptop";
  }
  return "item";
}

std::string slot_label(const std::string& slot) {
  static const std::map<std::string, std::string> labels = {
      {"pricerange", "price range"},   {"goodformeal", "meal"},          {"kidsallowed", "children"},
      {"dogsallowed", "dogs"},         {"hasinternet", "internet"},      {"acceptscards", "card payment"},
      {"hasusbport", "usb port"},      {"isforbusinesscomputing", "business computing"},
      {"screensizerange", "screen size range"}, {"ecorating", "eco rating"}, {"hdmiport", "hdmi port"},
      {"screensize", "screen size"},   {"powerconsumption", "power consumption"},
      {"batteryrating", "battery rating"}, {"weightrange", "weight range"}, {"driverange", "drive range"},
      {"postcode", "post code"},       {"count", "number"}};
  auto it = labels.find(slot);
  return it == labels.end() ? slot : it->second;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t string_key(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

struct Template {
  std::size_t frame = 0;
  std::size_t form_shift = 0;
  std::size_t connective = 0;
  std::uint64_t order_key = 0;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& config) : config_(config), rng_(config.seed) {}

  std::vector<Example> run() {
    if (config_.domains.empty()) throw std::invalid_argument("synth: no domains");
    if (config_.templates == 0) throw std::invalid_argument("synth: template count must be positive");
    const auto counts = allocate();
    std::vector<Example> out;
    out.reserve(config_.pairs);
    for (std::size_t d = 0; d < config_.domains.size(); ++d)
      for (std::size_t i = 0; i < counts[d]; ++i) out.push_back(make_example(config_.domains[d]));
    std::shuffle(out.begin(), out.end(), rng_);
    return out;
  }

 private:
  std::vector<std::size_t> allocate() const {
    static const std::map<Domain, double> sizes = {{Domain::kRestaurant, 5192.0},
                                                   {Domain::kHotel, 5373.0},
                                                   {Domain::kTelevision, 7035.0},
                                                   {Domain::kLaptop, 13242.0}};
    std::vector<double> weights;
    for (Domain d : config_.domains) weights.push_back(config_.corpus_proportions ? sizes.at(d) : 1.0);
    double total = 0;
    for (double w : weights) total += w;
    // Largest-remainder apportionment.
    std::vector<std::size_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double exact = static_cast<double>(config_.pairs) * weights[i] / total;
      counts[i] = static_cast<std::size_t>(exact);
      assigned += counts[i];
      remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < config_.pairs; ++k, ++assigned) ++counts[remainders[k].second];
    return counts;
  }

  std::vector<std::string> acts_for(Domain d) const {
    std::vector<std::string> acts;
    for (const auto& a : domain_acts(d))
      if (config_.acts.empty() || std::find(config_.acts.begin(), config_.acts.end(), a) != config_.acts.end())
        acts.push_back(a);
    if (acts.empty()) throw std::invalid_argument("synth: no acts available for " + std::string(domain_name(d)));
    return acts;
  }

  std::vector<std::string> slots_for(Domain d) const {
    std::vector<std::string> slots;
    for (const auto& s : domain_slots(d))
      if (s != "count" &&
          (config_.slots.empty() || std::find(config_.slots.begin(), config_.slots.end(), s) != config_.slots.end()))
        slots.push_back(s);
    return slots;
  }

  bool count_allowed() const {
    return config_.slots.empty() || std::find(config_.slots.begin(), config_.slots.end(), "count") != config_.slots.end();
  }

  const Template& template_for(Domain d, const std::string& act, std::size_t k) {
    const auto key = std::make_tuple(d, act, k);
    auto it = templates_.find(key);
    if (it != templates_.end()) return it->second;
    const auto& frames = frame_table().at(act);
    const std::size_t n_frames = std::max(frames.with_slots.size(), frames.without_slots.size());
    std::mt19937_64 trng(mix(config_.seed ^ mix(string_key(act) + 31 * static_cast<std::uint64_t>(d)) ^ mix(k)));
    Template t;
    t.frame = (k + trng()) % n_frames;
    t.form_shift = trng() % kValueForms.size();
    t.connective = trng() % kConnectives.size();
    t.order_key = trng();
    return templates_.emplace(key, t).first->second;
  }

  const std::vector<std::string>& values_for(const std::string& slot) {
    auto it = values_.find(slot);
    if (it != values_.end()) return it->second;
    static const std::vector<std::string> syllables = {"ka", "lo",  "mi", "ren", "tas", "vor", "zen", "pi",
                                                       "dru", "sol", "nek", "bar", "fu", "yel", "qua", "tri",
                                                       "mo", "gri", "sta", "pel"};
    std::vector<std::string> values;
    std::mt19937_64 vrng(mix(string_key(slot)) ^ config_.seed);
    while (values.size() < 6) {
      std::string value;
      const std::size_t words = 1 + vrng() % 2;
      for (std::size_t w = 0; w < words; ++w) {
        if (w) value += ' ';
        const std::size_t syl = 2 + vrng() % 2;
        for (std::size_t s = 0; s < syl; ++s) value += syllables[vrng() % syllables.size()];
      }
      if (used_values_.insert(value).second) values.push_back(value);
    }
    return values_.emplace(slot, std::move(values)).first->second;
  }

  Example make_example(Domain d) {
    const auto acts = acts_for(d);
    const std::string act = acts[rng_() % acts.size()];
    auto pool = slots_for(d);
    std::shuffle(pool.begin(), pool.end(), rng_);

    std::size_t n_valued = 0;
    bool valueless = false;
    bool with_count = false;
    if (act == "goodbye" || act == "reqmore") {
    } else if (act == "request") {
      valueless = true;
    } else if (act == "select" || act == "confirm" || act == "inform_no_info") {
      n_valued = 1;
    } else if (act == "inform_count") {
      with_count = count_allowed();
      n_valued = (with_count ? 0 : 1) + rng_() % 3;
    } else if (act == "compare") {
      n_valued = 2 + rng_() % 2;
    } else {
      n_valued = 1 + rng_() % 4;
    }
    if (valueless) {
      pool.erase(std::remove_if(pool.begin(), pool.end(), [](const std::string& s) { return is_binary_slot(s); }),
                 pool.end());
      n_valued = std::min<std::size_t>(1, pool.size());
    }
    n_valued = std::min(n_valued, pool.size());

    std::vector<std::string> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_valued));
    if (with_count) chosen.push_back("count");
    // SR slot order follows the domain's slot list.
    const auto& order = domain_slots(d);
    std::sort(chosen.begin(), chosen.end(), [&](const std::string& a, const std::string& b) {
      return std::find(order.begin(), order.end(), a) < std::find(order.begin(), order.end(), b);
    });

    Example ex;
    ex.sr.domain = d;
    ex.sr.act = act;
    for (const auto& s : chosen) {
      SlotValue sv{s, std::nullopt};
      if (!valueless) {
        if (s == "count") {
          sv.value = std::to_string(2 + rng_() % 8);
        } else if (is_binary_slot(s)) {
          const bool product = d == Domain::kTelevision || d == Domain::kLaptop;
          const bool yes = rng_() % 2 == 0;
          sv.value = product ? (yes ? "true" : "false") : (yes ? "yes" : "no");
        } else {
          const auto& vals = values_for(s);
          sv.value = vals[rng_() % vals.size()];
        }
      }
      ex.sr.slots.push_back(std::move(sv));
    }

    const Template& t = template_for(d, act, rng_() % config_.templates);
    render(ex, t);
    return ex;
  }

  void render(Example& ex, const Template& t) const {
    const Domain d = *ex.sr.domain;
    const auto& frames = frame_table().at(ex.sr.act);
    const bool has_slots = !ex.sr.slots.empty();
    const auto& pool = (has_slots && !frames.with_slots.empty()) ? frames.with_slots : frames.without_slots;
    std::string frame = pool[t.frame % pool.size()];

    std::vector<const SlotValue*> ordered;
    for (const auto& s : ex.sr.slots) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(), [&](const SlotValue* a, const SlotValue* b) {
      return mix(string_key(a->name) ^ t.order_key) < mix(string_key(b->name) ^ t.order_key);
    });

    std::string surface_slots;
    std::string delex_slots;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      const SlotValue& s = *ordered[i];
      std::string surface;
      std::string delex;
      if (!s.value) {
        surface = delex = slot_label(s.name);
      } else if (is_lexical_value(*s.value)) {
        const bool yes = *s.value == "yes" || *s.value == "true";
        surface = delex = (yes ? "with " : "without ") + slot_label(s.name);
      } else {
        std::string form = kValueForms[(t.form_shift + string_key(s.name)) % kValueForms.size()];
        replace_all(form, "{l}", slot_label(s.name));
        surface = delex = form;
        replace_all(surface, "{v}", *s.value);
        replace_all(delex, "{v}", slot_token(s.name));
      }
      const std::string sep = i == 0 ? "" : kConnectives[t.connective];
      surface_slots += sep + surface;
      delex_slots += sep + delex;
    }
    std::string surface = frame;
    std::string delex = frame;
    replace_all(surface, "{n}", domain_noun(d));
    replace_all(delex, "{n}", domain_noun(d));
    replace_all(surface, "{s}", surface_slots);
    replace_all(delex, "{s}", delex_slots);
    ex.reference = surface;
    ex.delex = from_delexicalised_text(delex);
  }

  const SynthConfig& config_;
  std::mt19937_64 rng_;
  std::map<std::tuple<Domain, std::string, std::size_t>, Template> templates_;
  std::map<std::string, std::vector<std::string>> values_;
  std::set<std::string> used_values_;
};

}  // namespace

std::vector<Example> synth_corpus(const SynthConfig& config) { return Generator(config).run(); }

}  // namespace scvae::corpus
