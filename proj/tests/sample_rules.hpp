#pragma once

// The 12-rule, 8-bit example ruleset used throughout the tests.
//   A 00*      0/2    B 01*     64/2   C 100*    128/3   D 1011*  176/4
//   E 11000*   192/5  F 111000* 224/6  G 100011* 140/6   H 101111* 188/6
//   I 001100*  48/6   J 000011* 12/6   K 001111* 60/6    L 0011000* 48/7
// Next hop of rule X is its position in the alphabet (A=1 ... L=12).

#include <map>
#include <string>

#include "segmoba/prefix.hpp"

namespace sample {

inline const segmoba::AddressWidth kWidth{8};

inline segmoba::Rule rule(char name) {
  static const std::map<char, segmoba::Prefix> prefixes = {
      {'A', {0, 2}},   {'B', {64, 2}},  {'C', {128, 3}}, {'D', {176, 4}}, {'E', {192, 5}}, {'F', {224, 6}},
      {'G', {140, 6}}, {'H', {188, 6}}, {'I', {48, 6}},  {'J', {12, 6}},  {'K', {60, 6}},  {'L', {48, 7}},
  };
  return segmoba::Rule{prefixes.at(name), static_cast<std::uint32_t>(name - 'A' + 1), segmoba::Rational{1}};
}

inline segmoba::Prefix prefix(char name) { return rule(name).prefix; }

inline char name_of(const segmoba::Rule* r) { return r ? static_cast<char>('A' + r->next_hop - 1) : '-'; }

inline segmoba::RuleSet ruleset(const std::string& names = "ABCDEFGHIJKL") {
  segmoba::RuleSet rs{kWidth, {}};
  for (char c : names) rs.rules.push_back(rule(c));
  return rs;
}

}  // namespace sample
