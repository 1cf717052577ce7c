#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segmoba/mobatree.hpp"
#include "segmoba/segmentation.hpp"

namespace segmoba {

/// Reference LPM: scans every rule. Each rule inspected counts as one node visit.
const Rule* linear_lookup(std::span<const Rule> rules, AddressWidth w, u128 ip);
const Rule* linear_lookup(std::span<const Rule> rules, AddressWidth w, u128 ip, AccessCounter& counter);
const Rule* linear_lookup(const RuleSet& rs, u128 ip);

struct TreapNode {
  Rule rule;
  AddrRange range;
  std::unique_ptr<TreapNode> left;
  std::unique_ptr<TreapNode> right;

  TreapNode(Rule r, AddrRange rg) : rule(std::move(r)), range(rg) {}
};

/// Single-tree treap: a BST on range begin and a
/// min-heap on prefix length, so shorter (containing) prefixes sit above
/// the prefixes they contain.
///
/// Nodes sharing a begin address are ordered by length. Equal-length ties
/// in the heap are resolved in favour of the most recently inserted node.
class Treap {
 public:
  using NodePtr = std::unique_ptr<TreapNode>;

  explicit Treap(AddressWidth width) : width_(width) {}
  Treap(Treap&&) noexcept = default;
  Treap& operator=(Treap&&) noexcept = default;

  AddressWidth width() const { return width_; }
  std::size_t size() const { return size_; }
  const TreapNode* root() const { return root_.get(); }
  int height() const;

  /// Duplicate prefix replaces next hop and weight; returns the old rule.
  std::optional<Rule> insert(Rule rule);
  std::optional<Rule> erase(const Prefix& prefix);

  const Rule* lookup(u128 ip) const;
  const Rule* lookup(u128 ip, AccessCounter& counter) const;

  std::vector<std::string> validate() const;
  std::vector<Rule> rules() const;

 private:
  AddressWidth width_;
  NodePtr root_;
  std::size_t size_ = 0;
};

struct BruteForceResult {
  Rational cost;
  SegmentPlan plan;
};

constexpr int kBruteForceMaxWidth = 16;

/// Enumerates all 2^w contiguous partitions of [0, w]. Throws
/// std::invalid_argument when w exceeds kBruteForceMaxWidth.
BruteForceResult brute_force_min_cost(const CostMatrix& c);

}  // namespace segmoba
