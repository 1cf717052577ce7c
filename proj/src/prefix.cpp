#include "segmoba/prefix.hpp"

#include <arpa/inet.h>

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace segmoba {

AddressWidth::AddressWidth(int bits) : bits_(bits) {
  if (bits < 1 || bits > 128) {
    throw ValidationError("address width must be in [1, 128], got " + std::to_string(bits));
  }
}

u128 AddressWidth::max_address() const {
  return bits_ == 128 ? ~u128{0} : (u128{1} << bits_) - 1;
}

u128 host_mask(int len, AddressWidth w) {
  int host = w.bits() - len;
  if (host <= 0) return 0;
  if (host >= 128) return ~u128{0};
  return (u128{1} << host) - 1;
}

bool is_valid_prefix(const Prefix& p, AddressWidth w) {
  if (p.len < 0 || p.len > w.bits()) return false;
  if (p.bits > w.max_address()) return false;
  return (p.bits & host_mask(p.len, w)) == 0;
}

void validate_prefix(const Prefix& p, AddressWidth w) {
  if (p.len < 0 || p.len > w.bits()) {
    throw ValidationError("prefix length " + std::to_string(p.len) + " outside [0, " +
                          std::to_string(w.bits()) + "]");
  }
  if (p.bits > w.max_address()) {
    throw ValidationError("prefix value exceeds " + std::to_string(w.bits()) + "-bit width");
  }
  if ((p.bits & host_mask(p.len, w)) != 0) {
    throw ValidationError("prefix " + format_prefix(p, w) + " has host bits set");
  }
}

Prefix make_prefix(u128 addr, int len, AddressWidth w) {
  if (len < 0 || len > w.bits()) throw ValidationError("prefix length out of range");
  return Prefix{addr & w.max_address() & ~host_mask(len, w), len};
}

AddrRange prefix_range(const Prefix& p, AddressWidth w) {
  validate_prefix(p, w);
  return AddrRange{p.bits, p.bits | host_mask(p.len, w)};
}

PrefixRelation prefix_relation(const Prefix& a, const Prefix& b, AddressWidth w) {
  AddrRange ra = prefix_range(a, w);
  AddrRange rb = prefix_range(b, w);
  if (ra == rb) return PrefixRelation::Equal;
  if (!ra.intersects(rb)) return PrefixRelation::Disjoint;
  return ra.contains(rb) ? PrefixRelation::FirstContainsSecond : PrefixRelation::SecondContainsFirst;
}

Prefix reduce_prefix(const Prefix& p, int x, AddressWidth w) {
  if (x < 0 || x > p.len) {
    throw ValidationError("cannot reduce prefix of length " + std::to_string(p.len) + " to " +
                          std::to_string(x));
  }
  return Prefix{p.bits & ~host_mask(x, w), x};
}

std::uint64_t hash_u128(u128 value, std::uint64_t salt) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(static_cast<std::uint64_t>(value) + 0x9e3779b97f4a7c15ULL * (salt + 1));
  return mix(h ^ static_cast<std::uint64_t>(value >> 64));
}

std::string u128_to_string(u128 value) {
  if (value == 0) return "0";
  std::string out;
  while (value != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return {out.rbegin(), out.rend()};
}

u128 parse_u128(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  const u128 limit = ~u128{0};
  u128 v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    unsigned digit = static_cast<unsigned>(c - '0');
    if (v > (limit - digit) / 10) throw std::invalid_argument("number out of range '" + std::string(text) + "'");
    v = v * 10 + digit;
  }
  return v;
}

std::string format_address(u128 addr, AddressWidth w) {
  if (w.bits() != 128) return u128_to_string(addr);
  std::array<unsigned char, 16> bytes{};
  for (int i = 15; i >= 0; --i) {
    bytes[static_cast<std::size_t>(i)] = static_cast<unsigned char>(addr & 0xff);
    addr >>= 8;
  }
  char buf[INET6_ADDRSTRLEN];
  if (inet_ntop(AF_INET6, bytes.data(), buf, sizeof buf) == nullptr) {
    throw std::runtime_error("inet_ntop failed");
  }
  return buf;
}

u128 parse_address(std::string_view text, AddressWidth w) {
  if (w.bits() == 128) {
    std::string s(text);
    std::array<unsigned char, 16> bytes{};
    if (inet_pton(AF_INET6, s.c_str(), bytes.data()) != 1) {
      throw std::invalid_argument("malformed IPv6 address '" + s + "'");
    }
    u128 v = 0;
    for (unsigned char b : bytes) v = (v << 8) | b;
    return v;
  }
  u128 v = parse_u128(text);
  if (v > w.max_address()) {
    throw std::invalid_argument("address " + std::string(text) + " exceeds " +
                                std::to_string(w.bits()) + "-bit width");
  }
  return v;
}

std::string format_prefix(const Prefix& p, AddressWidth w) {
  return format_address(p.bits, w) + "/" + std::to_string(p.len);
}

Prefix parse_prefix(std::string_view text, AddressWidth w) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) throw std::invalid_argument("missing '/<len>' in prefix");
  std::string_view len_text = text.substr(slash + 1);
  int len = -1;
  auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (ec != std::errc{} || ptr != len_text.data() + len_text.size()) {
    throw std::invalid_argument("malformed prefix length '" + std::string(len_text) + "'");
  }
  Prefix p{parse_address(text.substr(0, slash), w), len};
  validate_prefix(p, w);
  return p;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

ParsedRuleSet parse_ruleset(std::istream& in, AddressWidth w) {
  ParsedRuleSet out;
  out.ruleset.width = w;
  std::unordered_map<Prefix, std::size_t, PrefixHash> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(lineno, "expected '<address>/<len> <next_hop> [weight]'");
    }
    Rule rule;
    try {
      rule.prefix = parse_prefix(fields[0], w);
      std::uint32_t nh = 0;
      auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), nh);
      if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size()) {
        throw std::invalid_argument("malformed next hop '" + std::string(fields[1]) + "'");
      }
      rule.next_hop = nh;
      if (fields.size() == 3) {
        rule.weight = Rational::parse(fields[2]);
        if (rule.weight <= Rational{0}) throw std::invalid_argument("weight must be positive");
      }
    } catch (const std::exception& e) {
      throw ParseError(lineno, e.what());
    }
    auto [it, fresh] = index.try_emplace(rule.prefix, out.ruleset.rules.size());
    if (fresh) {
      out.ruleset.rules.push_back(std::move(rule));
    } else {
      out.ruleset.rules[it->second] = std::move(rule);
      ++out.duplicate_lines;
    }
  }
  return out;
}

ParsedRuleSet parse_ruleset(std::string_view text, AddressWidth w) {
  std::istringstream in{std::string(text)};
  return parse_ruleset(in, w);
}

void write_ruleset(std::ostream& out, const RuleSet& rs) {
  for (const Rule& r : rs.rules) {
    out << format_prefix(r.prefix, rs.width) << ' ' << r.next_hop;
    if (r.weight != Rational{1}) out << ' ' << r.weight.to_string();
    out << '\n';
  }
}

std::string serialize_ruleset(const RuleSet& rs) {
  std::ostringstream out;
  write_ruleset(out, rs);
  return out.str();
}

}  // namespace segmoba
