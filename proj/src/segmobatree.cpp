#include "segmoba/segmobatree.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

namespace segmoba {
namespace {

constexpr std::size_t kMinCapacity = 16;

std::size_t capacity_for(std::size_t keys) {
  return std::max(kMinCapacity, std::bit_ceil(std::max<std::size_t>(1, 2 * keys)));
}

std::vector<MobaTree> make_buckets(std::size_t n, AddressWidth w) {
  std::vector<MobaTree> buckets;
  buckets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) buckets.emplace_back(w);
  return buckets;
}

}  // namespace

SegmentTable::SegmentTable(Segment segment, AddressWidth width, std::size_t expected_keys)
    : segment_(segment), width_(width) {
  if (expected_keys > 0) buckets_ = make_buckets(capacity_for(expected_keys), width_);
}

std::size_t SegmentTable::bucket_index(u128 key) const {
  return static_cast<std::size_t>(hash_u128(key, static_cast<std::uint64_t>(segment_.lo))) & (buckets_.size() - 1);
}

std::optional<Rule> SegmentTable::insert(Rule rule) {
  if (buckets_.empty()) buckets_ = make_buckets(kMinCapacity, width_);
  u128 key = key_of(rule.prefix.bits);
  auto replaced = buckets_[bucket_index(key)].insert(std::move(rule));
  if (!replaced) {
    ++rule_count_;
    ++key_refs_[key];
    if (key_refs_.size() > buckets_.size() / 2) grow();
  }
  return replaced;
}

std::optional<Rule> SegmentTable::erase(const Prefix& prefix) {
  if (buckets_.empty()) return std::nullopt;
  u128 key = key_of(prefix.bits);
  auto removed = buckets_[bucket_index(key)].erase(prefix);
  if (removed) {
    --rule_count_;
    auto it = key_refs_.find(key);
    if (--it->second == 0) key_refs_.erase(it);
  }
  return removed;
}

void SegmentTable::grow() {
  std::vector<MobaTree> old = std::exchange(buckets_, make_buckets(buckets_.size() * 2, width_));
  for (const MobaTree& tree : old) {
    for (Rule& r : tree.rules()) {
      u128 key = key_of(r.prefix.bits);
      buckets_[bucket_index(key)].insert(std::move(r));
    }
  }
}

SegMobaTree::SegMobaTree(AddressWidth width, SegmentPlan plan)
    : width_(width), plan_(std::move(plan)), table_of_len_(static_cast<std::size_t>(width.bits() + 1)) {
  validate_plan(plan_, width_);
  std::sort(plan_.begin(), plan_.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
}

SegMobaTree SegMobaTree::build(const RuleSet& rs, const std::optional<SegmentPlan>& plan) {
  SegMobaTree engine(rs.width, plan ? *plan : dp_split(build_cost_matrix(rs)).plan);

  std::vector<std::unordered_set<u128, U128Hash>> keys(engine.plan_.size());
  std::vector<std::size_t> seg_of_len(static_cast<std::size_t>(rs.width.bits() + 1));
  for (std::size_t i = 0; i < engine.plan_.size(); ++i) {
    for (int l = engine.plan_[i].lo; l <= engine.plan_[i].hi; ++l) seg_of_len[static_cast<std::size_t>(l)] = i;
  }
  for (const Rule& r : rs.rules) {
    validate_prefix(r.prefix, rs.width);
    std::size_t i = seg_of_len[static_cast<std::size_t>(r.prefix.len)];
    keys[i].insert(leading_bits(r.prefix.bits, engine.plan_[i].lo, rs.width));
  }

  // Longest segment first: lookup order.
  for (std::size_t i = engine.plan_.size(); i-- > 0;) {
    engine.tables_.emplace_back(engine.plan_[i], rs.width, keys[i].size());
    for (int l = engine.plan_[i].lo; l <= engine.plan_[i].hi; ++l) {
      engine.table_of_len_[static_cast<std::size_t>(l)] = engine.tables_.size() - 1;
    }
  }
  for (const Rule& r : rs.rules) engine.insert(r);
  return engine;
}

std::size_t SegMobaTree::non_empty_segments() const {
  return static_cast<std::size_t>(
      std::count_if(tables_.begin(), tables_.end(), [](const SegmentTable& t) { return t.rule_count() > 0; }));
}

std::optional<Rule> SegMobaTree::insert(Rule rule) {
  validate_prefix(rule.prefix, width_);
  auto replaced = table_for(rule.prefix.len).insert(std::move(rule));
  if (!replaced) ++rule_count_;
  return replaced;
}

std::optional<Rule> SegMobaTree::erase(const Prefix& prefix) {
  if (!is_valid_prefix(prefix, width_)) return std::nullopt;
  auto removed = table_for(prefix.len).erase(prefix);
  if (removed) --rule_count_;
  return removed;
}

RuleSet SegMobaTree::rules() const {
  RuleSet rs;
  rs.width = width_;
  rs.rules.reserve(rule_count_);
  for (const SegmentTable& t : tables_) {
    for (const MobaTree& tree : t.buckets()) {
      auto rules = tree.rules();
      rs.rules.insert(rs.rules.end(), rules.begin(), rules.end());
    }
  }
  return rs;
}

EngineStats SegMobaTree::stats(const ByteModel& model) const {
  EngineStats s;
  for (const SegmentTable& t : tables_) {
    s.segments.push_back({t.segment(), t.rule_count(), t.distinct_keys(), t.capacity()});
    s.bucket_count += t.capacity();
    for (const MobaTree& tree : t.buckets()) s.node_count += tree.size();
  }
  s.estimated_bytes = s.node_count * model.node_bytes + s.bucket_count * model.bucket_bytes;
  return s;
}

std::vector<std::string> SegMobaTree::validate() const {
  std::vector<std::string> problems;
  std::size_t total = 0;
  for (std::size_t ti = 0; ti < tables_.size(); ++ti) {
    const SegmentTable& t = tables_[ti];
    const std::string where = "segment " + std::to_string(t.segment().lo) + "-" + std::to_string(t.segment().hi);
    if (ti > 0 && !(tables_[ti - 1].segment().lo > t.segment().lo)) {
      problems.push_back(where + ": tables not ordered long to short");
    }
    std::size_t in_table = 0;
    std::unordered_set<u128, U128Hash> keys;
    for (std::size_t b = 0; b < t.buckets().size(); ++b) {
      const MobaTree& tree = t.buckets()[b];
      for (auto& p : tree.validate()) problems.push_back(where + " bucket " + std::to_string(b) + ": " + p);
      for (const Rule& r : tree.rules()) {
        ++in_table;
        if (r.prefix.len < t.segment().lo || r.prefix.len > t.segment().hi) {
          problems.push_back(where + ": rule " + format_prefix(r.prefix, width_) + " outside segment");
        }
        u128 key = t.key_of(r.prefix.bits);
        keys.insert(key);
        if (t.bucket_index(key) != b) {
          problems.push_back(where + ": rule " + format_prefix(r.prefix, width_) + " in wrong bucket");
        }
      }
    }
    if (in_table != t.rule_count()) problems.push_back(where + ": rule count mismatch");
    if (keys.size() != t.distinct_keys()) problems.push_back(where + ": distinct key count mismatch");
    if (t.capacity() != 0 && (!std::has_single_bit(t.capacity()) || t.distinct_keys() > t.capacity() / 2)) {
      problems.push_back(where + ": capacity policy violated");
    }
    total += in_table;
  }
  if (total != rule_count_) problems.push_back("engine rule count mismatch");
  return problems;
}

SegMobaTree resplit(const SegMobaTree& engine, const RuleSet& rs) {
  if (!(engine.width() == rs.width)) throw ValidationError("resplit: ruleset width differs from engine width");
  return SegMobaTree::build(rs);
}

}  // namespace segmoba
