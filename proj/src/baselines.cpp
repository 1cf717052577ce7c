#include "segmoba/baselines.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace segmoba {
namespace {

using NodePtr = Treap::NodePtr;

// BST order: begin address, then prefix length.
bool key_less(const TreapNode& a, const Prefix& b) {
  return std::tie(a.range.begin, a.rule.prefix.len) < std::tie(b.bits, b.len);
}
bool key_less(const Prefix& a, const TreapNode& b) {
  return std::tie(a.bits, a.len) < std::tie(b.range.begin, b.rule.prefix.len);
}

void rotate_right(NodePtr& y) {
  NodePtr x = std::move(y->left);
  y->left = std::move(x->right);
  x->right = std::move(y);
  y = std::move(x);
}

void rotate_left(NodePtr& x) {
  NodePtr y = std::move(x->right);
  x->right = std::move(y->left);
  y->left = std::move(x);
  x = std::move(y);
}

void insert_rec(NodePtr& t, NodePtr& fresh, const TreapNode* raw) {
  if (!t) {
    t = std::move(fresh);
    return;
  }
  if (key_less(raw->rule.prefix, *t)) {
    insert_rec(t->left, fresh, raw);
    if (t->left.get() == raw && raw->rule.prefix.len <= t->rule.prefix.len) rotate_right(t);
  } else {
    insert_rec(t->right, fresh, raw);
    if (t->right.get() == raw && raw->rule.prefix.len <= t->rule.prefix.len) rotate_left(t);
  }
}

// Rotates the root down until it is a leaf, then unlinks it.
NodePtr remove_root(NodePtr& t) {
  if (!t->left && !t->right) return std::move(t);
  if (!t->right || (t->left && t->left->rule.prefix.len <= t->right->rule.prefix.len)) {
    rotate_right(t);
    return remove_root(t->right);
  }
  rotate_left(t);
  return remove_root(t->left);
}

NodePtr erase_rec(NodePtr& t, const Prefix& p) {
  if (!t) return nullptr;
  if (key_less(p, *t)) return erase_rec(t->left, p);
  if (key_less(*t, p)) return erase_rec(t->right, p);
  return remove_root(t);
}

int height_of(const TreapNode* n) {
  return n ? 1 + std::max(height_of(n->left.get()), height_of(n->right.get())) : 0;
}

void collect(const TreapNode* n, std::vector<Rule>& out) {
  if (!n) return;
  collect(n->left.get(), out);
  out.push_back(n->rule);
  collect(n->right.get(), out);
}

struct TreapValidator {
  AddressWidth width;
  std::vector<std::string> problems;
  std::size_t nodes = 0;
  const TreapNode* prev = nullptr;

  std::string name(const TreapNode& n) const { return format_prefix(n.rule.prefix, width); }

  // Returns [min begin, max begin] of the subtree.
  std::pair<u128, u128> check(const TreapNode* n) {
    auto bounds = std::make_pair(n->range.begin, n->range.begin);
    if (n->left) {
      auto [lo, hi] = check(n->left.get());
      if (!(hi < n->range.begin)) problems.push_back("left subtree key not below " + name(*n));
      if (n->left->rule.prefix.len < n->rule.prefix.len) problems.push_back("heap order violated at " + name(*n));
      bounds.first = lo;
    }
    ++nodes;
    if (!is_valid_prefix(n->rule.prefix, width) || prefix_range(n->rule.prefix, width) != n->range) {
      problems.push_back("bad prefix or cached range at " + name(*n));
    }
    if (prev && !key_less(*prev, n->rule.prefix)) problems.push_back("in-order keys not increasing at " + name(*n));
    prev = n;
    if (n->right) {
      auto [lo, hi] = check(n->right.get());
      if (lo < n->range.begin) problems.push_back("right subtree key below " + name(*n));
      if (n->right->rule.prefix.len < n->rule.prefix.len) problems.push_back("heap order violated at " + name(*n));
      bounds.second = hi;
    }
    return bounds;
  }
};

}  // namespace

const Rule* linear_lookup(std::span<const Rule> rules, AddressWidth w, u128 ip) {
  AccessCounter unused;
  return linear_lookup(rules, w, ip, unused);
}

const Rule* linear_lookup(std::span<const Rule> rules, AddressWidth w, u128 ip, AccessCounter& counter) {
  const Rule* best = nullptr;
  for (const Rule& r : rules) {
    ++counter.node_visits;
    if (best && r.prefix.len <= best->prefix.len) continue;
    if ((ip & ~host_mask(r.prefix.len, w)) == r.prefix.bits) best = &r;
  }
  return best;
}

const Rule* linear_lookup(const RuleSet& rs, u128 ip) { return linear_lookup(rs.rules, rs.width, ip); }

std::optional<Rule> Treap::insert(Rule rule) {
  AddrRange range = prefix_range(rule.prefix, width_);
  for (TreapNode* n = root_.get(); n;) {
    if (key_less(rule.prefix, *n)) {
      n = n->left.get();
    } else if (key_less(*n, rule.prefix)) {
      n = n->right.get();
    } else {
      return std::exchange(n->rule, std::move(rule));
    }
  }
  auto fresh = std::make_unique<TreapNode>(std::move(rule), range);
  const TreapNode* raw = fresh.get();
  insert_rec(root_, fresh, raw);
  ++size_;
  return std::nullopt;
}

std::optional<Rule> Treap::erase(const Prefix& prefix) {
  NodePtr removed = erase_rec(root_, prefix);
  if (!removed) return std::nullopt;
  --size_;
  return std::move(removed->rule);
}

// Descends one path. A node whose range holds ip is a match and any longer
// match lies to its right (heap order keeps contained prefixes below, and
// their begin is >= this node's). A non-matching node with ip above its
// range cannot have a match on its left: that rule would contain the node
// while sitting below it in the heap.
const Rule* Treap::lookup(u128 ip, AccessCounter& counter) const {
  const Rule* best = nullptr;
  for (const TreapNode* n = root_.get(); n;) {
    ++counter.node_visits;
    if (ip < n->range.begin) {
      n = n->left.get();
      continue;
    }
    if (ip <= n->range.end) best = &n->rule;
    n = n->right.get();
  }
  return best;
}

const Rule* Treap::lookup(u128 ip) const {
  AccessCounter unused;
  return lookup(ip, unused);
}

int Treap::height() const { return height_of(root_.get()); }

std::vector<std::string> Treap::validate() const {
  TreapValidator v{width_, {}, 0, nullptr};
  if (root_) v.check(root_.get());
  if (v.nodes != size_) v.problems.push_back("size mismatch");
  return v.problems;
}

std::vector<Rule> Treap::rules() const {
  std::vector<Rule> out;
  collect(root_.get(), out);
  return out;
}

BruteForceResult brute_force_min_cost(const CostMatrix& c) {
  const int w = c.width().bits();
  if (w > kBruteForceMaxWidth) {
    throw std::invalid_argument("brute force enumeration refused for width " + std::to_string(w) + " (max " +
                                std::to_string(kBruteForceMaxWidth) + ")");
  }
  std::optional<BruteForceResult> best;
  // Bit k of `cuts` set means a segment ends at length k (k < w).
  for (std::uint32_t cuts = 0; cuts < (1u << w); ++cuts) {
    SegmentPlan plan;
    Rational cost{0};
    int lo = 0;
    for (int k = 0; k <= w; ++k) {
      if (k == w || (cuts >> k) & 1u) {
        plan.push_back({lo, k});
        cost += c.at(lo, k);
        lo = k + 1;
      }
    }
    if (!best || cost < best->cost) best = BruteForceResult{cost, std::move(plan)};
  }
  return *best;
}

}  // namespace segmoba
