#pragma once

// Lookup-cost model for prefix-length segments and the interval dynamic
// program that partitions [0, w] into segments of minimal total cost.
//
// A segment [lo, hi] is one hash table keyed by the first lo bits of a
// rule. Its modeled cost is
//
//   hash part: weight of all rules with length <= hi (packets are looked up
//              long-to-short, so every packet whose match is at most hi
//              long probes this table once);
//   tree part: for every group of rules sharing a reduced key,
//              (ceil(log2 n) + 1) * (group weight).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segmoba/prefix.hpp"
#include "segmoba/rational.hpp"

namespace segmoba {

struct Segment {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentPlan = std::vector<Segment>;

/// Throws ValidationError unless the plan is contiguous and covers [0, w].
void validate_plan(const SegmentPlan& plan, AddressWidth w);
/// "0-1,2-4,5-8" -> plan; validated against w.
SegmentPlan parse_plan(std::string_view text, AddressWidth w);
std::string format_plan(const SegmentPlan& plan);

struct LengthHistogram {
  AddressWidth width{128};
  std::vector<std::uint64_t> count;   // index: prefix length, 0..w
  std::vector<Rational> weight_sum;   // index: prefix length, 0..w

  static LengthHistogram from_rules(const RuleSet& rs);
};

/// (ceil(log2 n) + 1); the depth bound of an n-rule balanced tree. n >= 1.
int tree_depth_bound(std::uint64_t n);

Rational hash_cost(const LengthHistogram& hist, Segment seg);
Rational tree_cost(const RuleSet& rs, Segment seg);

/// Upper-triangular matrix of segment costs, split into hash and tree parts.
class CostMatrix {
 public:
  explicit CostMatrix(AddressWidth w);

  AddressWidth width() const { return width_; }
  Rational at(int x, int y) const { return hash(x, y) + tree(x, y); }
  const Rational& hash(int x, int y) const { return hash_[index(x, y)]; }
  const Rational& tree(int x, int y) const { return tree_[index(x, y)]; }
  void set(int x, int y, Rational hash_part, Rational tree_part);

 private:
  std::size_t index(int x, int y) const;

  AddressWidth width_;
  std::vector<Rational> hash_;
  std::vector<Rational> tree_;
};

/// C[x][y] for every 0 <= x <= y <= w. For each lower bound x the rule
/// groups are grown incrementally as y increases, so the cost is
/// O(w * R) hash-map updates rather than O(w^2 * R).
CostMatrix build_cost_matrix(const RuleSet& rs);

struct SplitResult;

/// S[x][y] with the argmin split. Among equal-cost alternatives the table
/// keeps the one with fewer segments, then the unsplit segment, then the
/// smallest split point.
class SplitTable {
 public:
  explicit SplitTable(AddressWidth w);

  AddressWidth width() const { return width_; }
  const Rational& cost(int x, int y) const { return cells_[index(x, y)].cost; }
  int segments(int x, int y) const { return cells_[index(x, y)].segments; }
  std::optional<int> split(int x, int y) const { return cells_[index(x, y)].split; }

  /// Recovers the optimal plan for [x, y] by following split points.
  SegmentPlan backtrack(int x, int y) const;

 private:
  friend SplitResult dp_split(const CostMatrix& c);

  struct Cell {
    Rational cost;
    int segments = 1;
    std::optional<int> split;
  };
  std::size_t index(int x, int y) const;

  AddressWidth width_;
  std::vector<Cell> cells_;
};

struct SplitResult {
  SplitTable table;
  SegmentPlan plan;
  Rational cost;  // S[0][w]
};

SplitResult dp_split(const CostMatrix& c);

/// Sum of C over the plan's segments. Throws ValidationError for invalid plans.
Rational plan_cost(const SegmentPlan& plan, const CostMatrix& c);

}  // namespace segmoba
