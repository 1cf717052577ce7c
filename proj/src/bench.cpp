#include "segmoba/bench.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace segmoba {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string describe(const Rule* r, AddressWidth w) {
  return r ? format_prefix(r->prefix, w) + " nh=" + std::to_string(r->next_hop) : std::string("none");
}

struct LookupTotals {
  AccessCounter counter;
  std::uint64_t worst = 0;
};

LookupTotals count_range(const Engine& engine, std::span<const u128> trace) {
  LookupTotals t;
  for (u128 ip : trace) {
    AccessCounter c;
    engine.lookup(ip, c);
    t.counter += c;
    t.worst = std::max(t.worst, c.total());
  }
  return t;
}

}  // namespace

std::string_view engine_name(EngineKind kind) {
  switch (kind) {
    case EngineKind::SegMoba: return "segmoba";
    case EngineKind::Moba: return "moba";
    case EngineKind::Treap: return "treap";
    case EngineKind::Linear: return "linear";
  }
  return "unknown";
}

EngineKind parse_engine_kind(std::string_view name) {
  for (EngineKind k : {EngineKind::SegMoba, EngineKind::Moba, EngineKind::Treap, EngineKind::Linear}) {
    if (engine_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown engine '" + std::string(name) + "'");
}

LinearTable::LinearTable(const RuleSet& rs) : width_(rs.width) {
  for (const Rule& r : rs.rules) insert(r);
}

std::optional<Rule> LinearTable::insert(Rule rule) {
  validate_prefix(rule.prefix, width_);
  auto [it, fresh] = where_.try_emplace(rule.prefix, rules_.size());
  if (!fresh) return std::exchange(rules_[it->second], std::move(rule));
  rules_.push_back(std::move(rule));
  return std::nullopt;
}

std::optional<Rule> LinearTable::erase(const Prefix& prefix) {
  auto it = where_.find(prefix);
  if (it == where_.end()) return std::nullopt;
  std::size_t j = it->second;
  where_.erase(it);
  Rule out = std::move(rules_[j]);
  if (j != rules_.size() - 1) {
    rules_[j] = std::move(rules_.back());
    where_[rules_[j].prefix] = j;
  }
  rules_.pop_back();
  return out;
}

Engine Engine::build(EngineKind kind, const RuleSet& rs, const std::optional<SegmentPlan>& plan) {
  switch (kind) {
    case EngineKind::SegMoba:
      return Engine(SegMobaTree::build(rs, plan));
    case EngineKind::Moba: {
      MobaTree t(rs.width);
      for (const Rule& r : rs.rules) t.insert(r);
      return Engine(std::move(t));
    }
    case EngineKind::Treap: {
      Treap t(rs.width);
      for (const Rule& r : rs.rules) t.insert(r);
      return Engine(std::move(t));
    }
    case EngineKind::Linear:
      return Engine(LinearTable(rs));
  }
  throw std::invalid_argument("unknown engine kind");
}

void Engine::apply(const Update& u) {
  std::visit(
      [&](auto& e) {
        if (u.kind == Update::Kind::Insert) {
          e.insert(u.rule);
        } else {
          e.erase(u.rule.prefix);
        }
      },
      impl_);
}

std::size_t Engine::size() const {
  return std::visit([](const auto& e) { return e.size(); }, impl_);
}

std::size_t Engine::estimated_bytes() const {
  struct Visitor {
    std::size_t operator()(const SegMobaTree& e) const { return e.stats().estimated_bytes; }
    std::size_t operator()(const MobaTree& e) const { return e.size() * sizeof(MobaNode); }
    std::size_t operator()(const Treap& e) const { return e.size() * sizeof(TreapNode); }
    std::size_t operator()(const LinearTable& e) const { return e.size() * sizeof(Rule); }
  };
  return std::visit(Visitor{}, impl_);
}

Rational BenchReport::avg_accesses() const {
  if (lookups == 0) return Rational{0};
  return Rational(static_cast<Rational::Int>(total_accesses), static_cast<Rational::Int>(lookups));
}

double BenchReport::lookups_per_second() const {
  return lookup_seconds > 0 ? static_cast<double>(lookups) / lookup_seconds : 0.0;
}

double BenchReport::updates_per_second() const {
  return update_seconds > 0 ? static_cast<double>(updates) / update_seconds : 0.0;
}

std::vector<std::uint64_t> per_lookup_accesses(const Engine& engine, std::span<const u128> trace) {
  std::vector<std::uint64_t> out;
  out.reserve(trace.size());
  for (u128 ip : trace) {
    AccessCounter c;
    engine.lookup(ip, c);
    out.push_back(c.total());
  }
  return out;
}

BenchReport run_bench(Engine& engine, std::span<const u128> trace, std::span<const Update> updates,
                      const BenchOptions& options) {
  BenchReport r;
  r.engine = std::string(engine.name());
  r.rules = engine.size();
  r.lookups = trace.size();
  if (const auto* seg = std::get_if<SegMobaTree>(&engine.impl())) r.plan = seg->plan();

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(trace.size())));
  auto start = Clock::now();
  LookupTotals totals;
  if (threads <= 1) {
    totals = count_range(engine, trace);
  } else {
    // Readers only: shards run concurrently against the same engine.
    std::vector<LookupTotals> parts(threads);
    {
      std::vector<std::jthread> pool;
      const std::size_t shard = (trace.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        std::size_t lo = std::min(trace.size(), t * shard);
        std::size_t hi = std::min(trace.size(), lo + shard);
        pool.emplace_back([&, t, lo, hi] { parts[t] = count_range(engine, trace.subspan(lo, hi - lo)); });
      }
    }
    for (const LookupTotals& p : parts) {
      totals.counter += p.counter;
      totals.worst = std::max(totals.worst, p.worst);
    }
  }
  r.lookup_seconds = seconds_since(start);
  r.total_accesses = totals.counter.total();
  r.total_node_visits = totals.counter.node_visits;
  r.total_bucket_probes = totals.counter.bucket_probes;
  r.worst_accesses = totals.worst;

  start = Clock::now();
  for (const Update& u : updates) engine.apply(u);
  r.update_seconds = seconds_since(start);
  r.updates = updates.size();
  r.estimated_bytes = engine.estimated_bytes();
  return r;
}

void write_report(std::ostream& out, const BenchReport& r, ReportFormat format) {
  std::ostringstream avg;
  avg << std::fixed << std::setprecision(6) << r.avg_accesses().to_double();
  std::vector<std::pair<std::string, std::string>> rows = {
      {"engine", r.engine},
      {"ruleset", r.ruleset_id},
      {"rules", std::to_string(r.rules)},
      {"lookups", std::to_string(r.lookups)},
      {"avg_memory_accesses", avg.str()},
      {"avg_memory_accesses_exact", r.avg_accesses().to_string()},
      {"worst_memory_accesses", std::to_string(r.worst_accesses)},
      {"total_memory_accesses", std::to_string(r.total_accesses)},
      {"total_node_visits", std::to_string(r.total_node_visits)},
      {"total_bucket_probes", std::to_string(r.total_bucket_probes)},
      {"lookups_per_second", std::to_string(r.lookups_per_second())},
      {"updates", std::to_string(r.updates)},
      {"updates_per_second", std::to_string(r.updates_per_second())},
      {"estimated_bytes", std::to_string(r.estimated_bytes)},
      {"build_seconds", std::to_string(r.build_seconds)},
      {"lookup_seconds", std::to_string(r.lookup_seconds)},
      {"update_seconds", std::to_string(r.update_seconds)},
  };
  if (r.plan) rows.emplace_back("plan", format_plan(*r.plan));
  for (const auto& [key, value] : rows) {
    if (format == ReportFormat::KeyValue) {
      out << key << '=' << value << '\n';
    } else {
      out << std::left << std::setw(28) << key << value << '\n';
    }
  }
}

VerifyResult verify_engine(const Engine& engine, const RuleSet& rs, std::span<const u128> trace) {
  VerifyResult v;
  for (u128 ip : trace) {
    AccessCounter c;
    const Rule* got = engine.lookup(ip, c);
    const Rule* want = linear_lookup(rs, ip);
    ++v.checked;
    bool same = (got == nullptr) == (want == nullptr) &&
                (!got || (got->prefix == want->prefix && got->next_hop == want->next_hop));
    if (!same) {
      if (!v.first_mismatch) {
        v.first_mismatch = "address " + format_address(ip, rs.width) + ": " + std::string(engine.name()) +
                           " returned " + describe(got, rs.width) + ", expected " + describe(want, rs.width);
      }
      ++v.mismatches;
    }
  }
  return v;
}

void write_split_report(std::ostream& out, const RuleSet& rs) {
  const CostMatrix c = build_cost_matrix(rs);
  const SplitResult split = dp_split(c);
  const LengthHistogram hist = LengthHistogram::from_rules(rs);
  out << "plan\t" << format_plan(split.plan) << '\n';
  out << "lo\thi\trules\thash_cost\ttree_cost\tcost\n";
  for (const Segment& s : split.plan) {
    std::uint64_t rules = 0;
    for (int l = s.lo; l <= s.hi; ++l) rules += hist.count[static_cast<std::size_t>(l)];
    out << s.lo << '\t' << s.hi << '\t' << rules << '\t' << c.hash(s.lo, s.hi).to_string() << '\t'
        << c.tree(s.lo, s.hi).to_string() << '\t' << c.at(s.lo, s.hi).to_string() << '\n';
  }
  out << "min_cost\t" << split.cost.to_string() << '\n';
}

namespace {

struct CommonArgs {
  int width = 128;
  std::string ruleset;
  std::string trace;
  std::string updates;
  std::string engine = "segmoba";
  std::string plan;
  std::string report = "table";
  std::string out;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return in;
}

RuleSet load_ruleset(const std::string& path, AddressWidth w, std::ostream& err) {
  auto in = open_input(path);
  ParsedRuleSet parsed = parse_ruleset(in, w);
  if (parsed.duplicate_lines > 0) {
    err << "warning: " << parsed.duplicate_lines << " duplicate prefix line(s) in " << path << ", last one kept\n";
  }
  return std::move(parsed.ruleset);
}

std::vector<u128> load_trace(const std::string& path, AddressWidth w) {
  auto in = open_input(path);
  return parse_trace(in, w);
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::invalid_argument("cannot write '" + path + "'");
  fn(file);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segmented multilayer balanced-tree LPM engine: split, verify, bench, gen"};
  app.require_subcommand(1);
  CommonArgs a;

  auto add_width = [&](CLI::App* sub) {
    sub->add_option("--width", a.width, "Address width in bits")->check(CLI::Range(1, 128));
  };

  auto* split = app.add_subcommand("split", "Compute the cost-optimal segment plan");
  add_width(split);
  split->add_option("--ruleset", a.ruleset, "Ruleset file")->required();

  auto* verify = app.add_subcommand("verify", "Compare an engine against the linear-scan oracle");
  add_width(verify);
  verify->add_option("--ruleset", a.ruleset)->required();
  verify->add_option("--trace", a.trace)->required();
  verify->add_option("--engine", a.engine)->check(CLI::IsMember({"segmoba", "moba", "treap", "linear"}));
  verify->add_option("--plan", a.plan, "Segment plan override, e.g. 0-15,16-128");

  auto* bench = app.add_subcommand("bench", "Count memory accesses and time lookups/updates");
  add_width(bench);
  bench->add_option("--ruleset", a.ruleset)->required();
  bench->add_option("--trace", a.trace)->required();
  bench->add_option("--updates", a.updates);
  bench->add_option("--engine", a.engine)->check(CLI::IsMember({"segmoba", "moba", "treap", "linear"}));
  bench->add_option("--plan", a.plan);
  bench->add_option("--report", a.report)->check(CLI::IsMember({"table", "kv"}));
  bench->add_option("--threads", a.threads, "Lookup threads (read-only shards)")->check(CLI::Range(1u, 256u));

  auto* gen = app.add_subcommand("gen", "Generate rulesets, traces and update streams");
  gen->require_subcommand(1);

  std::size_t count = 0;
  std::string hist = "64:1.0";
  std::string base;
  auto* gen_rules = gen->add_subcommand("ruleset", "Generate a ruleset");
  add_width(gen_rules);
  gen_rules->add_option("--count", count)->required();
  gen_rules->add_option("--hist", hist, "len:fraction,... e.g. 64:0.5,96:0.3,128:0.2");
  gen_rules->add_option("--base", base, "Ruleset whose prefixes are extended");
  gen_rules->add_option("--seed", a.seed);
  gen_rules->add_option("--out", a.out);

  std::size_t repeat = 1;
  double match = 1.0;
  auto* gen_trace_cmd = gen->add_subcommand("trace", "Generate a lookup trace");
  add_width(gen_trace_cmd);
  gen_trace_cmd->add_option("--ruleset", a.ruleset)->required();
  gen_trace_cmd->add_option("--count", count)->required();
  gen_trace_cmd->add_option("--repeat", repeat)->check(CLI::PositiveNumber);
  gen_trace_cmd->add_option("--match", match)->check(CLI::Range(0.0, 1.0));
  gen_trace_cmd->add_option("--seed", a.seed);
  gen_trace_cmd->add_option("--out", a.out);

  auto* gen_updates = gen->add_subcommand("updates", "Generate an update stream");
  add_width(gen_updates);
  gen_updates->add_option("--ruleset", a.ruleset)->required();
  gen_updates->add_option("--count", count)->required();
  gen_updates->add_option("--seed", a.seed);
  gen_updates->add_option("--out", a.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const AddressWidth w(a.width);
    auto plan = [&]() -> std::optional<SegmentPlan> {
      if (a.plan.empty()) return std::nullopt;
      return parse_plan(a.plan, w);
    };

    if (*split) {
      write_split_report(out, load_ruleset(a.ruleset, w, err));
      return 0;
    }
    if (*verify) {
      RuleSet rs = load_ruleset(a.ruleset, w, err);
      std::vector<u128> trace = load_trace(a.trace, w);
      Engine engine = Engine::build(parse_engine_kind(a.engine), rs, plan());
      VerifyResult v = verify_engine(engine, rs, trace);
      out << "engine=" << engine.name() << " checked=" << v.checked << " mismatches=" << v.mismatches << '\n';
      if (v.first_mismatch) out << "first_mismatch: " << *v.first_mismatch << '\n';
      return v.ok() ? 0 : 1;
    }
    if (*bench) {
      RuleSet rs = load_ruleset(a.ruleset, w, err);
      std::vector<u128> trace = load_trace(a.trace, w);
      std::vector<Update> updates;
      if (!a.updates.empty()) {
        auto in = open_input(a.updates);
        updates = parse_updates(in, w);
      }
      auto start = Clock::now();
      Engine engine = Engine::build(parse_engine_kind(a.engine), rs, plan());
      double build_seconds = seconds_since(start);
      BenchReport report = run_bench(engine, trace, updates, BenchOptions{a.threads});
      report.build_seconds = build_seconds;
      report.ruleset_id = std::filesystem::path(a.ruleset).filename().string();
      write_report(out, report, a.report == "kv" ? ReportFormat::KeyValue : ReportFormat::Table);
      return 0;
    }
    if (*gen_rules) {
      GenConfig cfg{w, count, parse_length_shares(hist), a.seed, std::nullopt};
      if (!base.empty()) cfg.base = load_ruleset(base, w, err);
      RuleSet rs = gen_ruleset(cfg);
      with_output(a.out, out, [&](std::ostream& o) { write_ruleset(o, rs); });
      return 0;
    }
    if (*gen_trace_cmd) {
      RuleSet rs = load_ruleset(a.ruleset, w, err);
      auto trace = gen_trace(rs, TraceConfig{count, repeat, match, a.seed});
      with_output(a.out, out, [&](std::ostream& o) { write_trace(o, trace, w); });
      return 0;
    }
    if (*gen_updates) {
      RuleSet rs = load_ruleset(a.ruleset, w, err);
      auto stream = gen_update_stream(rs, count, a.seed);
      with_output(a.out, out, [&](std::ostream& o) { write_updates(o, stream, w); });
      return 0;
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace segmoba
