#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "segmoba/prefix.hpp"

namespace segmoba {

/// Memory-access counters. One node_visit per tree node inspected, one
/// bucket_probe per hash-table probe. layer_descents counts how often a
/// lookup followed a next-layer link.
struct AccessCounter {
  std::uint64_t node_visits = 0;
  std::uint64_t bucket_probes = 0;
  std::uint64_t layer_descents = 0;

  std::uint64_t total() const { return node_visits + bucket_probes; }
  void reset() { *this = AccessCounter{}; }

  AccessCounter& operator+=(const AccessCounter& o) {
    node_visits += o.node_visits;
    bucket_probes += o.bucket_probes;
    layer_descents += o.layer_descents;
    return *this;
  }
};

/// One rule of a MobaTree layer. Nodes of a layer hold pairwise disjoint
/// ranges ordered by begin address; rules strictly contained by this node's
/// rule live in next_layer.
struct MobaNode {
  Rule rule;
  AddrRange range;
  std::unique_ptr<MobaNode> left;
  std::unique_ptr<MobaNode> right;
  std::unique_ptr<MobaNode> next_layer;
  int height = 1;

  MobaNode(Rule r, AddrRange rg) : rule(std::move(r)), range(rg) {}
};

struct LayerShape {
  int depth = 0;        // 0 for the top layer
  std::size_t size = 0;  // nodes in this layer's balanced tree
  int height = 0;
};

/// Multilayer online balanced tree.
///
/// Each layer is an AVL tree over disjoint prefix ranges. Lookup walks a
/// layer like a binary search and, on a hit, continues into the hit node's
/// next layer to look for a longer match.
class MobaTree {
 public:
  using NodePtr = std::unique_ptr<MobaNode>;

  explicit MobaTree(AddressWidth width) : width_(width) {}

  MobaTree(MobaTree&&) noexcept = default;
  MobaTree& operator=(MobaTree&&) noexcept = default;

  /// Builds a tree from pre-linked nodes without checking any invariant.
  /// Intended for tests and fault injection; run validate() afterwards.
  static MobaTree adopt(AddressWidth width, NodePtr root);

  AddressWidth width() const { return width_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const MobaNode* root() const { return root_.get(); }

  const Rule* lookup(u128 ip) const;
  const Rule* lookup(u128 ip, AccessCounter& counter) const;

  /// Inserts or replaces. Returns the previous rule when the prefix was
  /// already present. Throws ValidationError for prefixes invalid under width().
  std::optional<Rule> insert(Rule rule);

  /// Removes the rule with exactly this prefix. nullopt means not found.
  std::optional<Rule> erase(const Prefix& prefix);

  /// Empty result means every structural invariant holds.
  std::vector<std::string> validate() const;

  /// Visits every node; owner is the node whose next layer holds it
  /// (nullptr for the top layer).
  void for_each_node(const std::function<void(const MobaNode& node, const MobaNode* owner, int depth)>& fn) const;

  std::vector<LayerShape> layer_shapes() const;
  std::vector<Rule> rules() const;

 private:
  template <bool Count>
  const Rule* lookup_impl(u128 ip, AccessCounter* counter) const;

  AddressWidth width_;
  NodePtr root_;
  std::size_t size_ = 0;
};

}  // namespace segmoba
