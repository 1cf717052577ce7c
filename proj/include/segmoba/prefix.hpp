#pragma once

// Address/prefix arithmetic, rules and the ruleset text format.
//
// Addresses are unsigned 128-bit integers right-aligned in an engine-wide
// width w (1..128). A prefix of length len keeps its value in the same
// w-bit space with the low (w - len) bits zero, so 00*/2 at w=8 is bits=0
// and 01*/2 is bits=64.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "segmoba/rational.hpp"

namespace segmoba {

using u128 = unsigned __int128;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class AddressWidth {
 public:
  explicit AddressWidth(int bits);
  int bits() const { return bits_; }
  /// Largest address, 2^w - 1.
  u128 max_address() const;
  friend bool operator==(AddressWidth, AddressWidth) = default;

 private:
  int bits_;
};

struct Prefix {
  u128 bits = 0;
  int len = 0;
  friend bool operator==(const Prefix&, const Prefix&) = default;
};

struct AddrRange {
  u128 begin = 0;
  u128 end = 0;
  friend bool operator==(const AddrRange&, const AddrRange&) = default;

  bool contains(u128 addr) const { return begin <= addr && addr <= end; }
  bool contains(const AddrRange& other) const { return begin <= other.begin && other.end <= end; }
  bool intersects(const AddrRange& other) const { return !(other.end < begin || end < other.begin); }
};

enum class PrefixRelation { Disjoint, Equal, FirstContainsSecond, SecondContainsFirst };

struct Rule {
  Prefix prefix;
  std::uint32_t next_hop = 0;
  Rational weight{1};
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
  AddressWidth width{128};
  std::vector<Rule> rules;
};

struct ParsedRuleSet {
  RuleSet ruleset;
  std::size_t duplicate_lines = 0;  // lines overridden by a later line with the same prefix
};

/// Deterministic, platform-independent 64-bit mix of a 128-bit value and a salt.
std::uint64_t hash_u128(u128 value, std::uint64_t salt);

struct U128Hash {
  std::size_t operator()(u128 v) const { return static_cast<std::size_t>(hash_u128(v, 0)); }
};

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const {
    return static_cast<std::size_t>(hash_u128(p.bits, static_cast<std::uint64_t>(p.len)));
  }
};

/// Bit mask of the low (w - len) host bits.
u128 host_mask(int len, AddressWidth w);

/// First `len` bits of addr, as an integer in [0, 2^len). Used as hash key.
inline u128 leading_bits(u128 addr, int len, AddressWidth w) {
  return len == 0 ? 0 : addr >> (w.bits() - len);
}

/// Throws ValidationError unless len <= w, host bits are zero and bits < 2^w.
void validate_prefix(const Prefix& p, AddressWidth w);
bool is_valid_prefix(const Prefix& p, AddressWidth w);

/// Masks off host bits; len must be in [0, w].
Prefix make_prefix(u128 addr, int len, AddressWidth w);

AddrRange prefix_range(const Prefix& p, AddressWidth w);
PrefixRelation prefix_relation(const Prefix& a, const Prefix& b, AddressWidth w);

/// First x bits of p as a prefix of length x. Throws ValidationError if x > p.len.
Prefix reduce_prefix(const Prefix& p, int x, AddressWidth w);

/// Decimal for w <= 64, canonical IPv6 text for w == 128, decimal otherwise.
std::string format_address(u128 addr, AddressWidth w);
/// Inverse of format_address; throws std::invalid_argument on bad text or out-of-width value.
u128 parse_address(std::string_view text, AddressWidth w);

std::string format_prefix(const Prefix& p, AddressWidth w);
Prefix parse_prefix(std::string_view text, AddressWidth w);

std::string u128_to_string(u128 value);
u128 parse_u128(std::string_view text);

/// `<address>/<len> <next_hop> [weight]` per line, `#` comments, blank lines ignored.
ParsedRuleSet parse_ruleset(std::istream& in, AddressWidth w);
ParsedRuleSet parse_ruleset(std::string_view text, AddressWidth w);
void write_ruleset(std::ostream& out, const RuleSet& rs);
std::string serialize_ruleset(const RuleSet& rs);

}  // namespace segmoba
