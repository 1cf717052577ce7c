#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "segmoba/workload.hpp"
#include "sample_rules.hpp"

using namespace segmoba;

TEST_CASE("length shares") {
  auto h = parse_length_shares("64:0.5,96:0.25,128:0.25");
  REQUIRE(h.size() == 3);
  CHECK(h[1].len == 96);
  CHECK(h[1].fraction == doctest::Approx(0.25));
  CHECK_THROWS(parse_length_shares("64"));
  CHECK_THROWS(parse_length_shares("64:x"));
  CHECK(parse_length_shares("").empty());
  CHECK_THROWS_AS(gen_ruleset({AddressWidth{8}, 1, {}, 1, std::nullopt}), std::invalid_argument);
  CHECK_THROWS_AS(gen_ruleset({AddressWidth{8}, 4, parse_length_shares("4:0.5"), 1, std::nullopt}), std::invalid_argument);
}

TEST_CASE("gen_ruleset is deterministic") {
  GenConfig cfg{AddressWidth{128}, 2000, parse_length_shares("48:0.3,64:0.5,128:0.2"), 7, std::nullopt};
  CHECK(serialize_ruleset(gen_ruleset(cfg)) == serialize_ruleset(gen_ruleset(cfg)));
  cfg.seed = 8;
  GenConfig other = cfg;
  other.seed = 7;
  CHECK(serialize_ruleset(gen_ruleset(cfg)) != serialize_ruleset(gen_ruleset(other)));
}

TEST_CASE("gen_ruleset follows the histogram with distinct prefixes") {
  GenConfig cfg{AddressWidth{128}, 100000, parse_length_shares("64:1.0"), 7, std::nullopt};
  RuleSet rs = gen_ruleset(cfg);
  REQUIRE(rs.rules.size() == 100000);
  std::set<u128> bits;
  for (const Rule& r : rs.rules) {
    REQUIRE(r.prefix.len == 64);
    bits.insert(r.prefix.bits);
  }
  CHECK(bits.size() == 100000);

  GenConfig mix{AddressWidth{32}, 1001, parse_length_shares("8:0.2,16:0.3,24:0.5"), 3, std::nullopt};
  std::map<int, int> counts;
  for (const Rule& r : gen_ruleset(mix).rules) counts[r.prefix.len]++;
  CHECK(counts[8] == 200);
  CHECK(counts[16] == 300);
  CHECK(counts[24] == 501);
}

TEST_CASE("gen_ruleset refuses impossible quotas") {
  CHECK_THROWS_AS(gen_ruleset({AddressWidth{8}, 10, parse_length_shares("3:1.0"), 1, std::nullopt}), std::invalid_argument);
  CHECK_THROWS_AS(gen_ruleset({AddressWidth{8}, 10, parse_length_shares("9:1.0"), 1, std::nullopt}), std::invalid_argument);
  // Exactly full is fine.
  auto full = gen_ruleset({AddressWidth{8}, 8, parse_length_shares("3:1.0"), 1, std::nullopt});
  CHECK(full.rules.size() == 8);
}

TEST_CASE("gen_ruleset extends a base ruleset") {
  GenConfig base_cfg{AddressWidth{128}, 500, parse_length_shares("32:0.4,48:0.6"), 1, std::nullopt};
  RuleSet base = gen_ruleset(base_cfg);
  GenConfig cfg{AddressWidth{128}, 5000, parse_length_shares("64:0.5,96:0.3,128:0.2"), 2, base};
  RuleSet rs = gen_ruleset(cfg);
  CHECK(rs.rules.size() == 5000);
  for (const Rule& r : rs.rules) {
    bool ok = false;
    for (const Rule& b : base.rules) {
      auto rel = prefix_relation(b.prefix, r.prefix, rs.width);
      if (rel == PrefixRelation::Equal || rel == PrefixRelation::FirstContainsSecond) {
        ok = true;
        break;
      }
    }
    REQUIRE(ok);
  }
}

TEST_CASE("gen_trace") {
  RuleSet rs = sample::ruleset();
  TraceConfig cfg{50, 100, 1.0, 7};
  auto trace = gen_trace(rs, cfg);
  REQUIRE(trace.size() == 5000);
  for (std::size_t i = 0; i < trace.size(); i += 100) {
    for (std::size_t j = 1; j < 100; ++j) REQUIRE(trace[i + j] == trace[i]);
  }
  for (u128 ip : trace) REQUIRE(oracle::lpm(rs.rules, ip, 8).has_value());
  CHECK(gen_trace(rs, cfg) == trace);

  RuleSet sparse{AddressWidth{32}, {{make_prefix(0, 24, AddressWidth{32}), 1, Rational{1}}}};
  auto mixed = gen_trace(sparse, {2000, 1, 0.5, 1});
  std::size_t hit = 0;
  for (u128 ip : mixed) hit += oracle::lpm(sparse.rules, ip, 32).has_value();
  CHECK(hit >= 900);
  CHECK(hit <= 1100);
}

TEST_CASE("gen_update_stream") {
  RuleSet rs = sample::ruleset();
  auto two = gen_update_stream(rs, 2, 7);
  REQUIRE(two.size() == 2);
  CHECK(two[0].kind == Update::Kind::Delete);
  bool existed = false;
  for (const Rule& r : rs.rules) existed = existed || r.prefix == two[0].rule.prefix;
  CHECK(existed);
  CHECK(two[1].kind == Update::Kind::Insert);
  bool fresh = true;
  for (const Rule& r : rs.rules) fresh = fresh && !(r.prefix == two[1].rule.prefix);
  CHECK(fresh);
  CHECK(gen_update_stream(rs, 500, 3) == gen_update_stream(rs, 500, 3));

  auto from_empty = gen_update_stream(RuleSet{AddressWidth{8}, {}}, 1, 1);
  // Nothing to delete, so the first op inserts.
  CHECK((from_empty.empty() || from_empty[0].kind == Update::Kind::Insert));

  auto stream = gen_update_stream(rs, 400, 9);
  RuleSet final_rs = apply_updates(rs, stream);
  oracle::Table ref;
  for (const Rule& r : rs.rules) ref.insert(r);
  for (const Update& u : stream) {
    if (u.kind == Update::Kind::Insert) {
      ref.insert(u.rule);
    } else {
      ref.erase(u.rule.prefix);
    }
  }
  CHECK(final_rs.rules.size() == ref.size());
  for (u128 ip = 0; ip < 256; ++ip) REQUIRE(oracle::lpm(final_rs.rules, ip, 8) == oracle::lpm(ref.rules(), ip, 8));
}

TEST_CASE("trace and update text round trips") {
  const AddressWidth w{128};
  RuleSet rs = gen_ruleset({w, 200, parse_length_shares("48:0.5,64:0.5"), 4, std::nullopt});
  auto trace = gen_trace(rs, {300, 2, 0.7, 4});
  std::stringstream ts;
  write_trace(ts, trace, w);
  CHECK(parse_trace(ts, w) == trace);

  auto ups = gen_update_stream(rs, 300, 4);
  std::stringstream us;
  write_updates(us, ups, w);
  auto back = parse_updates(us, w);
  REQUIRE(back.size() == ups.size());
  for (std::size_t i = 0; i < ups.size(); ++i) {
    REQUIRE(back[i].kind == ups[i].kind);
    REQUIRE(back[i].rule.prefix == ups[i].rule.prefix);
    if (ups[i].kind == Update::Kind::Insert) REQUIRE(back[i].rule.next_hop == ups[i].rule.next_hop);
  }

  std::stringstream bad("X 1/8\n");
  CHECK_THROWS_AS(parse_updates(bad, AddressWidth{8}), ParseError);
  std::stringstream bad_trace("1\n999\n");
  CHECK_THROWS_AS(parse_trace(bad_trace, AddressWidth{8}), ParseError);
}

TEST_CASE("uniform_below and random_bits") {
  std::mt19937_64 rng(1);
  std::vector<int> hist(6);
  for (int i = 0; i < 60000; ++i) hist[uniform_below(rng, 6)]++;
  for (int h : hist) CHECK(std::abs(h - 10000) < 600);
  for (int i = 0; i < 1000; ++i) REQUIRE(random_bits(rng, AddressWidth{5}) < 32);
  std::mt19937_64 a(5), b(5);
  CHECK(uniform_below(a, 1000003) == uniform_below(b, 1000003));
}
