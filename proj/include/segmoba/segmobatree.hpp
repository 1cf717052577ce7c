#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "segmoba/mobatree.hpp"
#include "segmoba/segmentation.hpp"

namespace segmoba {

/// Unit costs for the memory estimate.
struct ByteModel {
  std::size_t node_bytes = sizeof(MobaNode);
  std::size_t bucket_bytes = sizeof(MobaTree);
};

struct SegmentStats {
  Segment segment;
  std::size_t rules = 0;
  std::size_t distinct_keys = 0;
  std::size_t capacity = 0;
};

struct EngineStats {
  std::size_t node_count = 0;
  std::size_t bucket_count = 0;
  std::vector<SegmentStats> segments;  // same order as the engine's tables
  std::size_t estimated_bytes = 0;
};

/// Hash table for one prefix-length segment. Buckets are indexed by a hash
/// of the rule's first `lo` bits; every bucket holds a MobaTree, so colliding
/// keys share a tree and are still told apart by range.
class SegmentTable {
 public:
  SegmentTable(Segment segment, AddressWidth width, std::size_t expected_keys);

  const Segment& segment() const { return segment_; }
  std::size_t rule_count() const { return rule_count_; }
  std::size_t distinct_keys() const { return key_refs_.size(); }
  std::size_t capacity() const { return buckets_.size(); }
  const std::vector<MobaTree>& buckets() const { return buckets_; }

  std::size_t bucket_index(u128 key) const;
  u128 key_of(u128 addr) const { return leading_bits(addr, segment_.lo, width_); }

  const Rule* lookup(u128 ip) const {
    return buckets_[bucket_index(key_of(ip))].lookup(ip);
  }
  const Rule* lookup(u128 ip, AccessCounter& counter) const {
    ++counter.bucket_probes;
    return buckets_[bucket_index(key_of(ip))].lookup(ip, counter);
  }

  std::optional<Rule> insert(Rule rule);
  std::optional<Rule> erase(const Prefix& prefix);

 private:
  void grow();

  Segment segment_;
  AddressWidth width_;
  std::vector<MobaTree> buckets_;  // empty until the first rule arrives
  std::unordered_map<u128, std::size_t, U128Hash> key_refs_;
  std::size_t rule_count_ = 0;
};

/// Segmented engine: one SegmentTable per plan segment, probed from the
/// longest segment to the shortest. The first segment that yields a match
/// holds the longest matching prefix.
class SegMobaTree {
 public:
  /// Builds with the given plan, or the cost-optimal plan when none is given.
  static SegMobaTree build(const RuleSet& rs, const std::optional<SegmentPlan>& plan = std::nullopt);

  AddressWidth width() const { return width_; }
  const SegmentPlan& plan() const { return plan_; }
  std::size_t size() const { return rule_count_; }
  /// Tables ordered by descending segment.lo.
  const std::vector<SegmentTable>& tables() const { return tables_; }
  std::size_t non_empty_segments() const;

  const Rule* lookup(u128 ip) const {
    for (const SegmentTable& t : tables_) {
      if (t.rule_count() == 0) continue;
      if (const Rule* r = t.lookup(ip)) return r;
    }
    return nullptr;
  }
  const Rule* lookup(u128 ip, AccessCounter& counter) const {
    for (const SegmentTable& t : tables_) {
      if (t.rule_count() == 0) continue;
      if (const Rule* r = t.lookup(ip, counter)) return r;
    }
    return nullptr;
  }

  /// Throws ValidationError for prefixes invalid under width().
  std::optional<Rule> insert(Rule rule);
  /// nullopt means not found.
  std::optional<Rule> erase(const Prefix& prefix);

  RuleSet rules() const;
  EngineStats stats(const ByteModel& model = {}) const;
  std::vector<std::string> validate() const;

 private:
  SegMobaTree(AddressWidth width, SegmentPlan plan);
  SegmentTable& table_for(int len) { return tables_[table_of_len_[static_cast<std::size_t>(len)]]; }

  AddressWidth width_;
  SegmentPlan plan_;
  std::vector<SegmentTable> tables_;
  std::vector<std::size_t> table_of_len_;
  std::size_t rule_count_ = 0;
};

/// Recomputes the plan for `rs` (the engine's current rules) and builds a
/// fresh engine. The old engine is untouched.
SegMobaTree resplit(const SegMobaTree& engine, const RuleSet& rs);

}  // namespace segmoba
