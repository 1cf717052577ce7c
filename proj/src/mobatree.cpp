#include "segmoba/mobatree.hpp"

#include <algorithm>
#include <utility>

namespace segmoba {
namespace {

using NodePtr = MobaTree::NodePtr;

int height_of(const NodePtr& n) { return n ? n->height : 0; }

void update_height(MobaNode& n) { n.height = 1 + std::max(height_of(n.left), height_of(n.right)); }

void rotate_right(NodePtr& y) {
  NodePtr x = std::move(y->left);
  y->left = std::move(x->right);
  update_height(*y);
  x->right = std::move(y);
  update_height(*x);
  y = std::move(x);
}

void rotate_left(NodePtr& x) {
  NodePtr y = std::move(x->right);
  x->right = std::move(y->left);
  update_height(*x);
  y->left = std::move(x);
  update_height(*y);
  x = std::move(y);
}

void rebalance(NodePtr& n) {
  update_height(*n);
  int balance = height_of(n->left) - height_of(n->right);
  if (balance > 1) {
    if (height_of(n->left->left) < height_of(n->left->right)) rotate_left(n->left);
    rotate_right(n);
  } else if (balance < -1) {
    if (height_of(n->right->right) < height_of(n->right->left)) rotate_right(n->right);
    rotate_left(n);
  }
}

// Layer-level AVL insert keyed by range.begin. The caller guarantees the
// node's range is disjoint from every range already in the layer.
void insert_node(NodePtr& root, NodePtr node) {
  if (!root) {
    root = std::move(node);
    return;
  }
  if (node->range.begin < root->range.begin) {
    insert_node(root->left, std::move(node));
  } else {
    insert_node(root->right, std::move(node));
  }
  rebalance(root);
}

NodePtr detach_min(NodePtr& root) {
  if (!root->left) {
    NodePtr out = std::move(root);
    root = std::move(out->right);
    return out;
  }
  NodePtr out = detach_min(root->left);
  rebalance(root);
  return out;
}

// Unlinks the node whose range begins at `begin` from the layer. The
// returned node keeps its next layer; its child links are cleared.
NodePtr detach(NodePtr& root, u128 begin) {
  NodePtr out;
  if (!root) return out;
  if (begin < root->range.begin) {
    out = detach(root->left, begin);
  } else if (begin > root->range.begin) {
    out = detach(root->right, begin);
  } else {
    out = std::move(root);
    if (!out->left) {
      root = std::move(out->right);
    } else if (!out->right) {
      root = std::move(out->left);
    } else {
      NodePtr successor = detach_min(out->right);
      successor->left = std::move(out->left);
      successor->right = std::move(out->right);
      root = std::move(successor);
    }
    out->left.reset();
    out->right.reset();
    out->height = 1;
  }
  if (root) rebalance(root);
  return out;
}

// Any node of the layer whose range intersects `r`. Layers hold disjoint
// prefix ranges, so at most one node can contain `r`.
MobaNode* find_intersecting(MobaNode* n, const AddrRange& r) {
  while (n) {
    if (r.end < n->range.begin) {
      n = n->left.get();
    } else if (r.begin > n->range.end) {
      n = n->right.get();
    } else {
      return n;
    }
  }
  return nullptr;
}

// Moves every node of a layer tree into `out` as a standalone node.
void release_all(NodePtr root, std::vector<NodePtr>& out) {
  if (!root) return;
  release_all(std::move(root->left), out);
  release_all(std::move(root->right), out);
  root->height = 1;
  out.push_back(std::move(root));
}

std::size_t count_nodes(const MobaNode* n) {
  if (!n) return 0;
  return 1 + count_nodes(n->left.get()) + count_nodes(n->right.get()) + count_nodes(n->next_layer.get());
}

void walk(const MobaNode* n, const MobaNode* owner, int depth,
          const std::function<void(const MobaNode&, const MobaNode*, int)>& fn) {
  if (!n) return;
  walk(n->left.get(), owner, depth, fn);
  fn(*n, owner, depth);
  walk(n->next_layer.get(), n, depth + 1, fn);
  walk(n->right.get(), owner, depth, fn);
}

std::size_t layer_size(const MobaNode* n) {
  return n ? 1 + layer_size(n->left.get()) + layer_size(n->right.get()) : 0;
}

int layer_height(const MobaNode* n) {
  return n ? 1 + std::max(layer_height(n->left.get()), layer_height(n->right.get())) : 0;
}

void collect_shapes(const MobaNode* layer_root, int depth, std::vector<LayerShape>& out) {
  if (!layer_root) return;
  out.push_back({depth, layer_size(layer_root), layer_height(layer_root)});
  std::vector<const MobaNode*> stack{layer_root};
  while (!stack.empty()) {
    const MobaNode* n = stack.back();
    stack.pop_back();
    if (n->left) stack.push_back(n->left.get());
    if (n->right) stack.push_back(n->right.get());
    collect_shapes(n->next_layer.get(), depth + 1, out);
  }
}

struct Validator {
  AddressWidth width;
  std::vector<std::string> problems;
  std::size_t nodes = 0;

  std::string name(const MobaNode& n) const { return format_prefix(n.rule.prefix, width); }

  // Checks one layer tree; returns its true height.
  int check_layer(const MobaNode* n, const MobaNode* owner, const MobaNode*& prev) {
    if (!n) return 0;
    int lh = check_layer(n->left.get(), owner, prev);

    ++nodes;
    if (!is_valid_prefix(n->rule.prefix, width)) {
      problems.push_back("invalid prefix at node " + name(*n));
    } else if (prefix_range(n->rule.prefix, width) != n->range) {
      problems.push_back("cached range does not match prefix at " + name(*n));
    }
    if (prev) {
      if (!(prev->range.end < n->range.begin)) {
        problems.push_back("ordering/disjointness violated between " + name(*prev) + " and " + name(*n));
      }
    }
    prev = n;
    if (owner && !(owner->range.contains(n->range) && owner->range != n->range)) {
      problems.push_back(name(*n) + " is not strictly contained by its layer owner " + name(*owner));
    }
    const MobaNode* inner_prev = nullptr;
    check_layer(n->next_layer.get(), n, inner_prev);

    int rh = check_layer(n->right.get(), owner, prev);
    int h = 1 + std::max(lh, rh);
    if (n->height != h) {
      problems.push_back("stored height " + std::to_string(n->height) + " != actual " + std::to_string(h) +
                         " at " + name(*n));
    }
    if (lh - rh > 1 || rh - lh > 1) {
      problems.push_back("balance violated at " + name(*n) + " (left " + std::to_string(lh) + ", right " +
                         std::to_string(rh) + ")");
    }
    return h;
  }
};

}  // namespace

MobaTree MobaTree::adopt(AddressWidth width, NodePtr root) {
  MobaTree tree(width);
  tree.size_ = count_nodes(root.get());
  tree.root_ = std::move(root);
  return tree;
}

template <bool Count>
const Rule* MobaTree::lookup_impl(u128 ip, AccessCounter* counter) const {
  const Rule* rule = nullptr;
  const MobaNode* node = root_.get();
  while (node) {
    if constexpr (Count) ++counter->node_visits;
    if (ip < node->range.begin) {
      node = node->left.get();
    } else if (ip > node->range.end) {
      node = node->right.get();
    } else {
      rule = &node->rule;
      if (!node->next_layer) break;
      if constexpr (Count) ++counter->layer_descents;
      node = node->next_layer.get();
    }
  }
  return rule;
}

const Rule* MobaTree::lookup(u128 ip) const { return lookup_impl<false>(ip, nullptr); }

const Rule* MobaTree::lookup(u128 ip, AccessCounter& counter) const { return lookup_impl<true>(ip, &counter); }

std::optional<Rule> MobaTree::insert(Rule rule) {
  AddrRange range = prefix_range(rule.prefix, width_);
  NodePtr* layer = &root_;
  for (;;) {
    MobaNode* hit = find_intersecting(layer->get(), range);
    if (!hit) break;
    if (hit->range == range) {
      return std::exchange(hit->rule, std::move(rule));
    }
    if (hit->range.contains(range)) {
      layer = &hit->next_layer;
      continue;
    }
    // The new rule contains `hit` and possibly more nodes of this layer:
    // demote all of them, sub-layers intact, into the new node's next layer.
    auto node = std::make_unique<MobaNode>(std::move(rule), range);
    while (MobaNode* inner = find_intersecting(layer->get(), range)) {
      insert_node(node->next_layer, detach(*layer, inner->range.begin));
    }
    insert_node(*layer, std::move(node));
    ++size_;
    return std::nullopt;
  }
  insert_node(*layer, std::make_unique<MobaNode>(std::move(rule), range));
  ++size_;
  return std::nullopt;
}

std::optional<Rule> MobaTree::erase(const Prefix& prefix) {
  if (!is_valid_prefix(prefix, width_)) return std::nullopt;
  AddrRange range = prefix_range(prefix, width_);
  NodePtr* layer = &root_;
  for (;;) {
    MobaNode* hit = find_intersecting(layer->get(), range);
    if (!hit) return std::nullopt;
    if (hit->range == range) break;
    if (!hit->range.contains(range)) return std::nullopt;
    layer = &hit->next_layer;
  }
  NodePtr removed = detach(*layer, range.begin);
  std::vector<NodePtr> orphans;
  release_all(std::move(removed->next_layer), orphans);
  for (NodePtr& orphan : orphans) insert_node(*layer, std::move(orphan));
  --size_;
  return std::move(removed->rule);
}

std::vector<std::string> MobaTree::validate() const {
  Validator v{width_, {}, 0};
  const MobaNode* prev = nullptr;
  v.check_layer(root_.get(), nullptr, prev);
  if (v.nodes != size_) {
    v.problems.push_back("size " + std::to_string(size_) + " != reachable nodes " + std::to_string(v.nodes));
  }
  return v.problems;
}

void MobaTree::for_each_node(const std::function<void(const MobaNode&, const MobaNode*, int)>& fn) const {
  walk(root_.get(), nullptr, 0, fn);
}

std::vector<LayerShape> MobaTree::layer_shapes() const {
  std::vector<LayerShape> out;
  collect_shapes(root_.get(), 0, out);
  return out;
}

std::vector<Rule> MobaTree::rules() const {
  std::vector<Rule> out;
  out.reserve(size_);
  for_each_node([&](const MobaNode& n, const MobaNode*, int) { out.push_back(n.rule); });
  return out;
}

}  // namespace segmoba
