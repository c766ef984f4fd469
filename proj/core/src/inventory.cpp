// SPDX-License-Identifier: Apache-2.0
#include "scvae/inventory.hpp"

#include <algorithm>
#include <array>

namespace scvae::corpus {
namespace {

constexpr std::array<std::string_view, kDomainCount> kDomainNames = {"restaurant", "hotel", "television",
                                                                      "laptop"};

const std::vector<std::string> kBaseActs = {"reqmore", "goodbye",     "select",       "confirm",
                                            "request", "inform",      "inform_only",  "inform_count",
                                            "inform_no_match"};
const std::vector<std::string> kProductActs = {"compare", "recommend", "inform_all", "suggest", "inform_no_info"};

const std::vector<std::string> kVenueShared = {"name",  "type",    "area",     "near",     "price",
                                               "phone", "address", "postcode", "pricerange", "count"};
const std::vector<std::string> kProductShared = {"name", "type", "price", "family", "pricerange", "count"};

std::vector<std::string> join(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::string_view domain_name(Domain d) { return kDomainNames[static_cast<std::size_t>(d)]; }

std::optional<Domain> domain_from_name(std::string_view name) {
  if (name == "tv") return Domain::kTelevision;
  for (std::size_t i = 0; i < kDomainNames.size(); ++i)
    if (kDomainNames[i] == name) return static_cast<Domain>(i);
  return std::nullopt;
}

const std::vector<Domain>& all_domains() {
  static const std::vector<Domain> domains = {Domain::kRestaurant, Domain::kHotel, Domain::kTelevision,
                                              Domain::kLaptop};
  return domains;
}

const std::vector<std::string>& domain_acts(Domain d) {
  static const std::vector<std::string> product = join(kBaseActs, kProductActs);
  return (d == Domain::kRestaurant || d == Domain::kHotel) ? kBaseActs : product;
}

const std::vector<std::string>& domain_slots(Domain d) {
  static const std::vector<std::string> restaurant = join(kVenueShared, {"food", "goodformeal", "kidsallowed"});
  static const std::vector<std::string> hotel = join(kVenueShared, {"hasinternet", "acceptscards", "dogsallowed"});
  static const std::vector<std::string> television =
      join(kProductShared, {"screensizerange", "ecorating", "hdmiport", "hasusbport", "audio", "accessories",
                            "color", "screensize", "resolution", "powerconsumption"});
  static const std::vector<std::string> laptop =
      join(kProductShared, {"isforbusinesscomputing", "warranty", "battery", "design", "batteryrating",
                            "weightrange", "utility", "platform", "driverange", "dimension", "memory",
                            "processor"});
  switch (d) {
    case Domain::kRestaurant: return restaurant;
    case Domain::kHotel: return hotel;
    case Domain::kTelevision: return television;
    case Domain::kLaptop: return laptop;
  }
  return restaurant;
}

bool is_binary_slot(std::string_view slot) {
  static const std::vector<std::string_view> binary = {"kidsallowed", "hasinternet", "acceptscards",
                                                       "dogsallowed", "hasusbport",  "isforbusinesscomputing"};
  return std::find(binary.begin(), binary.end(), slot) != binary.end();
}

Inventories::Inventories(std::vector<std::string> acts, std::vector<std::string> slots)
    : acts_(std::move(acts)), slots_(std::move(slots)) {}

const Inventories& Inventories::standard() {
  static const Inventories inv = [] {
    std::vector<std::string> slots;
    for (Domain d : all_domains())
      for (const auto& s : domain_slots(d))
        if (std::find(slots.begin(), slots.end(), s) == slots.end()) slots.push_back(s);
    return Inventories(domain_acts(Domain::kLaptop), std::move(slots));
  }();
  return inv;
}

std::optional<std::size_t> Inventories::act_index(std::string_view act) const {
  auto it = std::find(acts_.begin(), acts_.end(), act);
  if (it == acts_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - acts_.begin());
}

std::optional<std::size_t> Inventories::slot_index(std::string_view slot) const {
  auto it = std::find(slots_.begin(), slots_.end(), slot);
  if (it == slots_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - slots_.begin());
}

}  // namespace scvae::corpus
