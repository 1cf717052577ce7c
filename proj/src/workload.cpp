#include "segmoba/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace segmoba {
namespace {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<std::size_t> largest_remainder(const std::vector<LengthShare>& shares, std::size_t total) {
  std::vector<std::size_t> quota(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    double exact = shares[i].fraction * static_cast<double>(total);
    quota[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
    ++quota[remainders[k].second];
  }
  return quota;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
  for (;;) {
    std::uint64_t x = rng();
    if (x <= limit) return x % bound;
  }
}

u128 random_bits(std::mt19937_64& rng, AddressWidth w) {
  u128 hi = rng();
  u128 lo = rng();
  return ((hi << 64) | lo) & w.max_address();
}

std::vector<LengthShare> parse_length_shares(std::string_view text) {
  std::vector<LengthShare> out;
  while (!text.empty()) {
    auto comma = text.find(',');
    std::string item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("histogram entry '" + item + "' is not len:fraction");
    LengthShare s;
    auto [p, ec] = std::from_chars(item.data(), item.data() + colon, s.len);
    if (ec != std::errc{} || p != item.data() + colon) {
      throw std::invalid_argument("histogram entry '" + item + "' has a bad length");
    }
    try {
      std::size_t used = 0;
      s.fraction = std::stod(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw std::invalid_argument("histogram entry '" + item + "' has a bad fraction");
    }
    out.push_back(s);
  }
  return out;
}

RuleSet gen_ruleset(const GenConfig& cfg) {
  const AddressWidth w = cfg.width;
  if (cfg.rule_count < 1) throw std::invalid_argument("rule_count must be at least 1");
  if (cfg.histogram.empty()) throw std::invalid_argument("length histogram is empty");
  double sum = 0;
  std::unordered_set<int> seen_len;
  for (const LengthShare& s : cfg.histogram) {
    if (s.len < 0 || s.len > w.bits()) throw std::invalid_argument("histogram length outside [0, w]");
    if (s.fraction < 0) throw std::invalid_argument("negative histogram fraction");
    if (!seen_len.insert(s.len).second) throw std::invalid_argument("histogram repeats a length");
    sum += s.fraction;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("histogram fractions must sum to 1");
  if (cfg.base && !(cfg.base->width == w)) throw std::invalid_argument("base ruleset width differs");
  if (cfg.base && cfg.base->rules.empty()) throw std::invalid_argument("base ruleset is empty");

  std::mt19937_64 rng(cfg.seed);
  const std::vector<std::size_t> quota = largest_remainder(cfg.histogram, cfg.rule_count);
  std::unordered_set<Prefix, PrefixHash> used;
  RuleSet out;
  out.width = w;
  out.rules.reserve(cfg.rule_count);
  auto emit = [&](const Prefix& p) {
    out.rules.push_back(Rule{p, static_cast<std::uint32_t>(uniform_below(rng, 1u << 16)), Rational{1}});
  };

  for (std::size_t i = 0; i < cfg.histogram.size(); ++i) {
    const int len = cfg.histogram[i].len;
    const std::size_t q = quota[i];
    if (q == 0) continue;

    if (!cfg.base) {
      if (len < 64 && q > (std::uint64_t{1} << len)) {
        throw std::invalid_argument("length " + std::to_string(len) + " cannot hold " + std::to_string(q) +
                                    " distinct prefixes");
      }
      if (len < 64 && (std::uint64_t{1} << len) <= 4 * q) {
        // Dense: sample without replacement from every value.
        std::vector<std::uint64_t> all(std::uint64_t{1} << len);
        for (std::uint64_t v = 0; v < all.size(); ++v) all[v] = v;
        for (std::size_t k = 0; k < q; ++k) {
          std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, all.size() - k));
          std::swap(all[k], all[j]);
          Prefix p{len == 0 ? 0 : u128{all[k]} << (w.bits() - len), len};
          used.insert(p);
          emit(p);
        }
        continue;
      }
      for (std::size_t k = 0; k < q;) {
        Prefix p = make_prefix(random_bits(rng, w), len, w);
        if (used.insert(p).second) {
          emit(p);
          ++k;
        }
      }
      continue;
    }

    std::vector<const Rule*> parents;
    for (const Rule& r : cfg.base->rules) {
      if (r.prefix.len <= len) parents.push_back(&r);
    }
    std::size_t attempts = 0;
    const std::size_t max_attempts = 100 * q + 1000;
    for (std::size_t k = 0; k < q;) {
      if (++attempts > max_attempts) {
        throw std::invalid_argument("cannot generate " + std::to_string(q) + " distinct prefixes of length " +
                                    std::to_string(len) + " from the base ruleset");
      }
      Prefix p;
      if (parents.empty()) {
        p = cfg.base->rules[uniform_below(rng, cfg.base->rules.size())].prefix;
      } else {
        const Prefix& parent = parents[uniform_below(rng, parents.size())]->prefix;
        u128 extension = random_bits(rng, w) & host_mask(parent.len, w);
        p = make_prefix(parent.bits | extension, len, w);
      }
      if (used.insert(p).second) {
        emit(p);
        ++k;
      }
    }
  }
  shuffle(out.rules, rng);
  return out;
}

std::vector<u128> gen_trace(const RuleSet& rs, const TraceConfig& cfg) {
  if (cfg.repeat_factor < 1) throw std::invalid_argument("repeat_factor must be at least 1");
  if (cfg.match_fraction < 0 || cfg.match_fraction > 1) throw std::invalid_argument("match_fraction outside [0, 1]");
  const auto matched = static_cast<std::size_t>(std::llround(cfg.match_fraction * static_cast<double>(cfg.packet_count)));
  if (matched > 0 && rs.rules.empty()) throw std::invalid_argument("cannot draw matching packets from an empty ruleset");

  std::mt19937_64 rng(cfg.seed);
  std::vector<u128> base;
  base.reserve(cfg.packet_count);
  for (std::size_t i = 0; i < cfg.packet_count; ++i) {
    u128 bits = random_bits(rng, rs.width);
    if (i < matched) {
      const Prefix& p = rs.rules[uniform_below(rng, rs.rules.size())].prefix;
      bits = p.bits | (bits & host_mask(p.len, rs.width));
    }
    base.push_back(bits);
  }
  shuffle(base, rng);

  std::vector<u128> trace;
  trace.reserve(base.size() * cfg.repeat_factor);
  for (u128 a : base) trace.insert(trace.end(), cfg.repeat_factor, a);
  return trace;
}

std::vector<Update> gen_update_stream(const RuleSet& rs, std::size_t n, std::uint64_t seed) {
  const AddressWidth w = rs.width;
  std::mt19937_64 rng(seed);
  std::vector<Prefix> live;
  std::unordered_map<Prefix, std::size_t, PrefixHash> where;
  for (const Rule& r : rs.rules) {
    where.emplace(r.prefix, live.size());
    live.push_back(r.prefix);
  }

  std::vector<Update> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0 && !live.empty()) {
      std::size_t j = static_cast<std::size_t>(uniform_below(rng, live.size()));
      Prefix victim = live[j];
      where[live.back()] = j;
      std::swap(live[j], live.back());
      live.pop_back();
      where.erase(victim);
      out.push_back(Update{Update::Kind::Delete, Rule{victim, 0, Rational{1}}});
      continue;
    }
    // Fresh prefix: reuse the leading bits of a live rule and the length of
    // another, so new rules land among existing ones.
    std::optional<Prefix> fresh;
    for (int attempt = 0; attempt < 1000 && !fresh; ++attempt) {
      Prefix p;
      if (live.empty() || attempt >= 900) {
        int len = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(w.bits())));
        p = make_prefix(random_bits(rng, w), len, w);
      } else {
        const Prefix& tmpl = live[uniform_below(rng, live.size())];
        int len = live[uniform_below(rng, live.size())].len;
        int keep = std::min(len, tmpl.len);
        u128 bits = (tmpl.bits & ~host_mask(keep, w)) | (random_bits(rng, w) & host_mask(keep, w));
        p = make_prefix(bits, len, w);
      }
      if (!where.contains(p)) fresh = p;
    }
    if (!fresh) throw std::invalid_argument("cannot find a fresh prefix for the update stream");
    where.emplace(*fresh, live.size());
    live.push_back(*fresh);
    out.push_back(Update{Update::Kind::Insert,
                         Rule{*fresh, static_cast<std::uint32_t>(uniform_below(rng, 1u << 16)), Rational{1}}});
  }
  return out;
}

RuleSet apply_updates(const RuleSet& rs, std::span<const Update> updates) {
  RuleSet out = rs;
  std::unordered_map<Prefix, std::size_t, PrefixHash> where;
  for (std::size_t i = 0; i < out.rules.size(); ++i) where.emplace(out.rules[i].prefix, i);
  for (const Update& u : updates) {
    auto it = where.find(u.rule.prefix);
    if (u.kind == Update::Kind::Insert) {
      if (it != where.end()) {
        out.rules[it->second] = u.rule;
      } else {
        where.emplace(u.rule.prefix, out.rules.size());
        out.rules.push_back(u.rule);
      }
    } else if (it != where.end()) {
      std::size_t j = it->second;
      where.erase(it);
      if (j != out.rules.size() - 1) {
        out.rules[j] = std::move(out.rules.back());
        where[out.rules[j].prefix] = j;
      }
      out.rules.pop_back();
    }
  }
  return out;
}

void write_trace(std::ostream& out, std::span<const u128> trace, AddressWidth w) {
  for (u128 a : trace) out << format_address(a, w) << '\n';
}

std::vector<u128> parse_trace(std::istream& in, AddressWidth w) {
  std::vector<u128> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      out.push_back(parse_address(t, w));
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

void write_updates(std::ostream& out, std::span<const Update> updates, AddressWidth w) {
  for (const Update& u : updates) {
    if (u.kind == Update::Kind::Insert) {
      out << "I " << format_prefix(u.rule.prefix, w) << ' ' << u.rule.next_hop << '\n';
    } else {
      out << "D " << format_prefix(u.rule.prefix, w) << '\n';
    }
  }
}

std::vector<Update> parse_updates(std::istream& in, AddressWidth w) {
  std::vector<Update> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      std::vector<std::string> fields;
      std::size_t i = 0;
      while (i < t.size()) {
        auto j = t.find_first_of(" \t", i);
        if (j == std::string::npos) j = t.size();
        if (j > i) fields.push_back(t.substr(i, j - i));
        i = j + 1;
      }
      Update u;
      if (fields[0] == "I" && fields.size() == 3) {
        u.kind = Update::Kind::Insert;
        u.rule.prefix = parse_prefix(fields[1], w);
        std::uint32_t nh = 0;
        auto [p, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), nh);
        if (ec != std::errc{} || p != fields[2].data() + fields[2].size()) {
          throw std::invalid_argument("malformed next hop '" + fields[2] + "'");
        }
        u.rule.next_hop = nh;
      } else if (fields[0] == "D" && fields.size() == 2) {
        u.kind = Update::Kind::Delete;
        u.rule.prefix = parse_prefix(fields[1], w);
      } else {
        throw std::invalid_argument("expected 'I <prefix> <next_hop>' or 'D <prefix>'");
      }
      out.push_back(std::move(u));
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

}  // namespace segmoba
