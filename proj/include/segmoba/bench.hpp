#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "segmoba/baselines.hpp"
#include "segmoba/mobatree.hpp"
#include "segmoba/segmobatree.hpp"
#include "segmoba/workload.hpp"

namespace segmoba {

enum class EngineKind { SegMoba, Moba, Treap, Linear };

std::string_view engine_name(EngineKind kind);
EngineKind parse_engine_kind(std::string_view name);

/// Linear-scan table that supports updates; the oracle as an engine.
class LinearTable {
 public:
  explicit LinearTable(const RuleSet& rs);
  AddressWidth width() const { return width_; }
  std::size_t size() const { return rules_.size(); }
  const Rule* lookup(u128 ip, AccessCounter& counter) const {
    return linear_lookup(rules_, width_, ip, counter);
  }
  std::optional<Rule> insert(Rule rule);
  std::optional<Rule> erase(const Prefix& prefix);

 private:
  AddressWidth width_;
  std::vector<Rule> rules_;
  std::unordered_map<Prefix, std::size_t, PrefixHash> where_;
};

/// One of the four engines behind a common lookup/update surface.
class Engine {
 public:
  using Impl = std::variant<SegMobaTree, MobaTree, Treap, LinearTable>;

  explicit Engine(Impl impl) : impl_(std::move(impl)) {}

  static Engine build(EngineKind kind, const RuleSet& rs, const std::optional<SegmentPlan>& plan = std::nullopt);

  EngineKind kind() const { return static_cast<EngineKind>(impl_.index()); }
  std::string_view name() const { return engine_name(kind()); }

  const Rule* lookup(u128 ip, AccessCounter& counter) const {
    return std::visit([&](const auto& e) { return e.lookup(ip, counter); }, impl_);
  }
  void apply(const Update& u);
  std::size_t size() const;
  std::size_t estimated_bytes() const;
  const Impl& impl() const { return impl_; }

 private:
  Impl impl_;
};

struct BenchOptions {
  unsigned threads = 1;
};

struct BenchReport {
  std::string engine;
  std::string ruleset_id;
  std::size_t rules = 0;
  std::size_t lookups = 0;
  std::uint64_t total_accesses = 0;
  std::uint64_t total_node_visits = 0;
  std::uint64_t total_bucket_probes = 0;
  std::uint64_t worst_accesses = 0;
  std::size_t updates = 0;
  double build_seconds = 0;
  double lookup_seconds = 0;
  double update_seconds = 0;
  std::size_t estimated_bytes = 0;
  std::optional<SegmentPlan> plan;

  /// total_accesses / lookups, exact.
  Rational avg_accesses() const;
  double lookups_per_second() const;
  double updates_per_second() const;
};

/// Access counts per lookup in trace order; useful for tests.
std::vector<std::uint64_t> per_lookup_accesses(const Engine& engine, std::span<const u128> trace);

/// Runs the lookup phase (counting accesses), then the update phase.
BenchReport run_bench(Engine& engine, std::span<const u128> trace, std::span<const Update> updates,
                      const BenchOptions& options = {});

enum class ReportFormat { Table, KeyValue };
void write_report(std::ostream& out, const BenchReport& report, ReportFormat format);

struct VerifyResult {
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  std::optional<std::string> first_mismatch;
  bool ok() const { return mismatches == 0; }
};

VerifyResult verify_engine(const Engine& engine, const RuleSet& rs, std::span<const u128> trace);

/// Writes the plan, the per-segment hash/tree cost split and S[0][w] as
/// tab-separated lines.
void write_split_report(std::ostream& out, const RuleSet& rs);

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 success, 1 verification failure, 2 usage or parse error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace segmoba
