#pragma once

// Independent reference matching used by the tests. Deliberately written
// differently from the library: containment is tested on address ranges
// computed here, and the best match is chosen by length.

#include <map>
#include <optional>
#include <vector>

#include "segmoba/prefix.hpp"

namespace oracle {

using segmoba::u128;

inline bool covers(const segmoba::Prefix& p, u128 ip, int w) {
  if (p.len == 0) return true;
  int shift = w - p.len;
  u128 lo = p.bits;
  u128 hi = shift == 128 ? ~u128{0} : p.bits + ((u128{1} << shift) - 1);
  return ip >= lo && ip <= hi;
}

/// Longest-match next hop, or nullopt.
inline std::optional<std::uint32_t> lpm(const std::vector<segmoba::Rule>& rules, u128 ip, int w) {
  const segmoba::Rule* best = nullptr;
  for (const auto& r : rules) {
    if (covers(r.prefix, ip, w) && (!best || r.prefix.len > best->prefix.len)) best = &r;
  }
  if (!best) return std::nullopt;
  return best->next_hop;
}

inline std::optional<std::uint32_t> hop(const segmoba::Rule* r) {
  if (!r) return std::nullopt;
  return r->next_hop;
}

/// Rule list kept in sync with a sequence of updates.
class Table {
 public:
  void insert(const segmoba::Rule& r) { rules_[{r.prefix.bits, r.prefix.len}] = r; }
  bool erase(const segmoba::Prefix& p) { return rules_.erase({p.bits, p.len}) > 0; }
  std::size_t size() const { return rules_.size(); }
  std::vector<segmoba::Rule> rules() const {
    std::vector<segmoba::Rule> out;
    for (const auto& [k, r] : rules_) out.push_back(r);
    return out;
  }

 private:
  std::map<std::pair<u128, int>, segmoba::Rule> rules_;
};

}  // namespace oracle
