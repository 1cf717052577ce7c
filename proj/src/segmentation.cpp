#include "segmoba/segmentation.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <sstream>
#include <unordered_map>

namespace segmoba {
namespace {

struct Group {
  std::uint64_t n = 0;
  Rational weight;
  std::int64_t int_weight = 0;
};

Rational group_cost(const Group& g) {
  if (g.n == 0) return Rational{0};
  return Rational{tree_depth_bound(g.n)} * g.weight;
}

std::size_t triangle_size(AddressWidth w) {
  auto n = static_cast<std::size_t>(w.bits() + 1);
  return n * n;
}

}  // namespace

void validate_plan(const SegmentPlan& plan, AddressWidth w) {
  if (plan.empty()) throw ValidationError("segment plan is empty");
  int expected_lo = 0;
  for (const Segment& s : plan) {
    if (s.lo != expected_lo || s.hi < s.lo || s.hi > w.bits()) {
      throw ValidationError("segment plan '" + format_plan(plan) + "' is not a contiguous cover of [0, " +
                            std::to_string(w.bits()) + "]");
    }
    expected_lo = s.hi + 1;
  }
  if (expected_lo != w.bits() + 1) {
    throw ValidationError("segment plan '" + format_plan(plan) + "' does not end at " + std::to_string(w.bits()));
  }
}

SegmentPlan parse_plan(std::string_view text, AddressWidth w) {
  SegmentPlan plan;
  while (!text.empty()) {
    auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    auto dash = item.find('-');
    if (dash == std::string_view::npos) throw ValidationError("segment '" + std::string(item) + "' is not lo-hi");
    Segment s;
    auto parse_int = [&](std::string_view t, int& out) {
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
      if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ValidationError("segment '" + std::string(item) + "' is not lo-hi");
      }
    };
    parse_int(item.substr(0, dash), s.lo);
    parse_int(item.substr(dash + 1), s.hi);
    plan.push_back(s);
  }
  validate_plan(plan, w);
  return plan;
}

std::string format_plan(const SegmentPlan& plan) {
  std::ostringstream out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) out << ',';
    out << plan[i].lo << '-' << plan[i].hi;
  }
  return out.str();
}

LengthHistogram LengthHistogram::from_rules(const RuleSet& rs) {
  LengthHistogram h;
  h.width = rs.width;
  h.count.assign(static_cast<std::size_t>(rs.width.bits() + 1), 0);
  h.weight_sum.assign(static_cast<std::size_t>(rs.width.bits() + 1), Rational{0});
  for (const Rule& r : rs.rules) {
    auto len = static_cast<std::size_t>(r.prefix.len);
    ++h.count[len];
    h.weight_sum[len] += r.weight;
  }
  return h;
}

int tree_depth_bound(std::uint64_t n) {
  // ceil(log2 n) == bit_width(n - 1) for n >= 1.
  return static_cast<int>(std::bit_width(n - 1)) + 1;
}

Rational hash_cost(const LengthHistogram& hist, Segment seg) {
  Rational total{0};
  for (int l = 0; l <= seg.hi; ++l) total += hist.weight_sum[static_cast<std::size_t>(l)];
  return total;
}

Rational tree_cost(const RuleSet& rs, Segment seg) {
  std::unordered_map<u128, Group, U128Hash> groups;
  for (const Rule& r : rs.rules) {
    if (r.prefix.len < seg.lo || r.prefix.len > seg.hi) continue;
    Group& g = groups[reduce_prefix(r.prefix, seg.lo, rs.width).bits];
    ++g.n;
    g.weight += r.weight;
  }
  Rational total{0};
  for (const auto& [key, g] : groups) total += group_cost(g);
  return total;
}

CostMatrix::CostMatrix(AddressWidth w)
    : width_(w), hash_(triangle_size(w), Rational{0}), tree_(triangle_size(w), Rational{0}) {}

std::size_t CostMatrix::index(int x, int y) const {
  if (x < 0 || y < x || y > width_.bits()) throw ValidationError("cost matrix index out of range");
  return static_cast<std::size_t>(x) * static_cast<std::size_t>(width_.bits() + 1) + static_cast<std::size_t>(y);
}

void CostMatrix::set(int x, int y, Rational hash_part, Rational tree_part) {
  std::size_t i = index(x, y);
  hash_[i] = std::move(hash_part);
  tree_[i] = std::move(tree_part);
}

CostMatrix build_cost_matrix(const RuleSet& rs) {
  const int w = rs.width.bits();
  CostMatrix c(rs.width);

  // Sorted by prefix bits, rules sharing their first x bits are adjacent for
  // every x, so group ids come from a linear scan instead of a hash map.
  std::vector<const Rule*> sorted;
  sorted.reserve(rs.rules.size());
  for (const Rule& r : rs.rules) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const Rule* a, const Rule* b) { return a->prefix.bits < b->prefix.bits; });

  std::vector<std::vector<std::uint32_t>> by_len(static_cast<std::size_t>(w + 1));
  for (std::uint32_t i = 0; i < sorted.size(); ++i) by_len[static_cast<std::size_t>(sorted[i]->prefix.len)].push_back(i);

  // prefix_weight[y] = total weight of rules with length <= y
  std::vector<Rational> prefix_weight(static_cast<std::size_t>(w + 1), Rational{0});
  Rational running{0};
  for (int l = 0; l <= w; ++l) {
    for (std::uint32_t i : by_len[static_cast<std::size_t>(l)]) running += sorted[i]->weight;
    prefix_weight[static_cast<std::size_t>(l)] = running;
  }

  // Integral weights whose total fits comfortably in 62 bits take the fast path.
  bool integral = true;
  std::vector<std::int64_t> int_weight(sorted.size());
  Rational::Int total = 0;
  for (std::size_t i = 0; i < sorted.size() && integral; ++i) {
    const Rational& wt = sorted[i]->weight;
    integral = wt.den() == 1 && wt.num() < (Rational::Int{1} << 40);
    total += wt.num();
    integral = integral && total < (Rational::Int{1} << 54);
    if (integral) int_weight[i] = static_cast<std::int64_t>(wt.num());
  }

  std::vector<std::uint32_t> group_of(sorted.size());
  std::vector<Group> groups;
  for (int x = 0; x <= w; ++x) {
    groups.clear();
    u128 prev_key = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      u128 key = leading_bits(sorted[i]->prefix.bits, x, rs.width);
      if (i == 0 || key != prev_key) groups.emplace_back();
      prev_key = key;
      group_of[i] = static_cast<std::uint32_t>(groups.size() - 1);
    }
    if (integral) {
      // Same recurrence on machine integers; the common unit-weight case.
      std::int64_t tree = 0;
      for (int y = x; y <= w; ++y) {
        for (std::uint32_t i : by_len[static_cast<std::size_t>(y)]) {
          Group& g = groups[group_of[i]];
          std::int64_t before = g.n == 0 ? 0 : tree_depth_bound(g.n) * g.int_weight;
          ++g.n;
          g.int_weight += int_weight[i];
          std::int64_t after = 0;
          if (__builtin_mul_overflow(std::int64_t{tree_depth_bound(g.n)}, g.int_weight, &after) ||
              __builtin_add_overflow(tree, after - before, &tree)) {
            throw std::overflow_error("tree cost overflow");
          }
        }
        c.set(x, y, prefix_weight[static_cast<std::size_t>(y)], Rational{tree});
      }
      continue;
    }
    Rational tree{0};
    for (int y = x; y <= w; ++y) {
      for (std::uint32_t i : by_len[static_cast<std::size_t>(y)]) {
        Group& g = groups[group_of[i]];
        tree -= group_cost(g);
        ++g.n;
        g.weight += sorted[i]->weight;
        tree += group_cost(g);
      }
      c.set(x, y, prefix_weight[static_cast<std::size_t>(y)], tree);
    }
  }
  return c;
}

SplitTable::SplitTable(AddressWidth w) : width_(w), cells_(triangle_size(w)) {}

std::size_t SplitTable::index(int x, int y) const {
  if (x < 0 || y < x || y > width_.bits()) throw ValidationError("split table index out of range");
  return static_cast<std::size_t>(x) * static_cast<std::size_t>(width_.bits() + 1) + static_cast<std::size_t>(y);
}

SegmentPlan SplitTable::backtrack(int x, int y) const {
  SegmentPlan plan;
  std::vector<Segment> stack{{x, y}};
  while (!stack.empty()) {
    Segment s = stack.back();
    stack.pop_back();
    if (auto k = split(s.lo, s.hi)) {
      stack.push_back({*k + 1, s.hi});
      stack.push_back({s.lo, *k});
    } else {
      plan.push_back(s);
    }
  }
  return plan;
}

SplitResult dp_split(const CostMatrix& c) {
  const int w = c.width().bits();
  SplitTable t(c.width());
  for (int width = 0; width <= w; ++width) {
    for (int x = 0; x + width <= w; ++x) {
      const int y = x + width;
      SplitTable::Cell best{c.at(x, y), 1, std::nullopt};
      for (int k = x; k < y; ++k) {
        const auto& left = t.cells_[t.index(x, k)];
        const auto& right = t.cells_[t.index(k + 1, y)];
        Rational cost = left.cost + right.cost;
        int segments = left.segments + right.segments;
        if (cost < best.cost || (cost == best.cost && segments < best.segments)) {
          best = {std::move(cost), segments, k};
        }
      }
      t.cells_[t.index(x, y)] = std::move(best);
    }
  }
  SegmentPlan plan = t.backtrack(0, w);
  Rational cost = t.cost(0, w);
  return SplitResult{std::move(t), std::move(plan), std::move(cost)};
}

Rational plan_cost(const SegmentPlan& plan, const CostMatrix& c) {
  validate_plan(plan, c.width());
  Rational total{0};
  for (const Segment& s : plan) total += c.at(s.lo, s.hi);
  return total;
}

}  // namespace segmoba
