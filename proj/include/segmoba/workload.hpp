#pragma once

// Seeded generators for rulesets, lookup traces and update streams.
//
// Only raw std::mt19937_64 output is consumed (bounded draws and shuffles
// are done here), so results are identical across standard libraries.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "segmoba/prefix.hpp"

namespace segmoba {

struct LengthShare {
  int len = 0;
  double fraction = 0.0;
};

/// "64:0.5,96:0.25,128:0.25"
std::vector<LengthShare> parse_length_shares(std::string_view text);

struct GenConfig {
  AddressWidth width{128};
  std::size_t rule_count = 1;
  std::vector<LengthShare> histogram;
  std::uint64_t seed = 0;
  /// When set, every generated rule extends one of these prefixes.
  std::optional<RuleSet> base;
};

struct TraceConfig {
  std::size_t packet_count = 0;
  std::size_t repeat_factor = 1;
  double match_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct Update {
  enum class Kind { Insert, Delete };
  Kind kind = Kind::Insert;
  Rule rule;  // only rule.prefix is meaningful for deletes
  friend bool operator==(const Update&, const Update&) = default;
};

/// Per-length quotas follow the histogram by largest remainder, so every
/// length is within one rule of its target share. Throws
/// std::invalid_argument when a length cannot hold its quota of distinct
/// prefixes or the configuration is malformed.
RuleSet gen_ruleset(const GenConfig& cfg);

/// Matched packets are drawn uniformly inside uniformly chosen rules, the
/// rest uniformly over the address space. The base sequence is shuffled and
/// then each address is emitted repeat_factor times in a row.
std::vector<u128> gen_trace(const RuleSet& rs, const TraceConfig& cfg);

/// Alternates delete-of-existing and insert-of-fresh operations, starting
/// with a delete (or an insert when nothing is left to delete).
std::vector<Update> gen_update_stream(const RuleSet& rs, std::size_t n, std::uint64_t seed);

/// The ruleset after applying `updates` in order. Inserts of an existing
/// prefix replace it; deletes of absent prefixes are ignored.
RuleSet apply_updates(const RuleSet& rs, std::span<const Update> updates);

void write_trace(std::ostream& out, std::span<const u128> trace, AddressWidth w);
std::vector<u128> parse_trace(std::istream& in, AddressWidth w);

void write_updates(std::ostream& out, std::span<const Update> updates, AddressWidth w);
std::vector<Update> parse_updates(std::istream& in, AddressWidth w);

/// Uniform integer in [0, bound) from raw generator output.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);
/// Uniform w-bit value.
u128 random_bits(std::mt19937_64& rng, AddressWidth w);

}  // namespace segmoba
