#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nestsub/signature.hpp"
#include "nestsub/subtype.hpp"
#include "nestsub/type.hpp"

namespace nestsub {

// Brute-force bounded type simulation for closed, quantifier-free types.
// Ground truth for the algorithm's Subtype verdicts: a depth-k approximation
// of the simulation clauses, unfolding both sides at every level.

enum class SimKind { HoldsUpTo, RefutedAt, ResourceExceeded };

struct SimResult {
  SimKind kind = SimKind::HoldsUpTo;
  int depth = 0;                   // HoldsUpTo: the bound; RefutedAt: level of clash
  std::vector<std::string> path;   // RefutedAt: unfolding steps to the clash
  std::string reason;
  long nodes = 0;

  bool holds() const { return kind == SimKind::HoldsUpTo; }
  bool refuted() const { return kind == SimKind::RefutedAt; }
};

struct UnsupportedQuantifier : std::runtime_error {
  UnsupportedQuantifier()
      : std::runtime_error(
            "bounded simulation does not support quantified types") {}
};

namespace detail {

struct SimExceeded {};

struct PairKey {
  TypeRef a, b;
};

struct SimMemo {
  // proven depth per pair, and known refutations (levels below the pair)
  struct Refutation {
    int levels;
    std::vector<std::string> path;
    std::string reason;
  };
  std::unordered_map<size_t, std::vector<std::pair<PairKey, int>>> holds;
  std::unordered_map<size_t, std::vector<std::pair<PairKey, Refutation>>> refs;

  static size_t key(const TypeRef& a, const TypeRef& b) {
    return a->hash * 0x9e3779b97f4a7c15ULL ^ b->hash;
  }

  int* find_holds(const TypeRef& a, const TypeRef& b) {
    auto it = holds.find(key(a, b));
    if (it == holds.end()) return nullptr;
    for (auto& [k, d] : it->second)
      if (type_equal(k.a, a) && type_equal(k.b, b)) return &d;
    return nullptr;
  }
  Refutation* find_ref(const TypeRef& a, const TypeRef& b) {
    auto it = refs.find(key(a, b));
    if (it == refs.end()) return nullptr;
    for (auto& [k, r] : it->second)
      if (type_equal(k.a, a) && type_equal(k.b, b)) return &r;
    return nullptr;
  }
  void put_holds(const TypeRef& a, const TypeRef& b, int depth) {
    if (int* d = find_holds(a, b)) {
      if (depth > *d) *d = depth;
      return;
    }
    holds[key(a, b)].push_back({{a, b}, depth});
  }
  void put_ref(const TypeRef& a, const TypeRef& b, Refutation r) {
    if (!find_ref(a, b)) refs[key(a, b)].push_back({{a, b}, std::move(r)});
  }
};

class SimChecker {
 public:
  SimChecker(const Signature& sig, long node_cap)
      : sig_(sig), node_cap_(node_cap) {}

  long nodes() const { return nodes_; }

  // Returns nullopt when the pair holds up to `remaining` levels.
  std::optional<SimMemo::Refutation> run(const TypeRef& a, const TypeRef& b,
                                         int remaining) {
    if (++nodes_ > node_cap_) throw SimExceeded{};
    if (remaining <= 0) return std::nullopt;
    TypeRef l = head_normalize(sig_, a);
    TypeRef r = head_normalize(sig_, b);
    require_supported(l);
    require_supported(r);
    if (int* d = memo_.find_holds(l, r); d && *d >= remaining)
      return std::nullopt;
    if (auto* ref = memo_.find_ref(l, r); ref && ref->levels <= remaining)
      return *ref;

    auto result = clauses(l, r, remaining);
    if (result)
      memo_.put_ref(l, r, *result);
    else
      memo_.put_holds(l, r, remaining);
    return result;
  }

 private:
  const Signature& sig_;
  long node_cap_;
  long nodes_ = 0;
  SimMemo memo_;

  static void require_supported(const TypeRef& t) {
    if (t->tag == TypeTag::Exists || t->tag == TypeTag::Forall)
      throw UnsupportedQuantifier{};
    if (t->tag == TypeTag::QuantVar || t->tag == TypeTag::Param)
      throw std::invalid_argument("bounded simulation requires closed types");
  }

  static SimMemo::Refutation clash(std::string reason) {
    return {1, {}, std::move(reason)};
  }

  // Tracks the shallowest refutation over the subgoals of one pair. All
  // subgoals are explored: reporting the minimum clash depth keeps
  // RefutedAt(d) independent of the bound, for any bound >= d.
  struct MinRef {
    std::optional<SimMemo::Refutation> best;

    void offer(std::optional<SimMemo::Refutation> sub, const std::string& step) {
      if (!sub) return;
      sub->levels += 1;
      sub->path.insert(sub->path.begin(), step);
      if (!best || sub->levels < best->levels) best = std::move(sub);
    }
  };

  std::optional<SimMemo::Refutation> clauses(const TypeRef& l, const TypeRef& r,
                                             int remaining) {
    if (l->tag != r->tag)
      return clash("constructor mismatch after unfolding");
    MinRef min;
    switch (l->tag) {
      case TypeTag::One:
        return std::nullopt;
      case TypeTag::InternalChoice: {
        for (const auto& [label, sub] : l->branches) {
          const TypeRef* sup = find(r, label);
          if (!sup) return clash("label '" + label + "' not in supertype (+)");
          min.offer(run(sub, *sup, remaining - 1), "+ " + label);
        }
        return min.best;
      }
      case TypeTag::ExternalChoice: {
        for (const auto& [label, sup] : r->branches) {
          const TypeRef* sub = find(l, label);
          if (!sub) return clash("label '" + label + "' not in subtype (&)");
          min.offer(run(*sub, sup, remaining - 1), "& " + label);
        }
        return min.best;
      }
      case TypeTag::Tensor:
        min.offer(run(l->left, r->left, remaining - 1), "* left");
        min.offer(run(l->right, r->right, remaining - 1), "* right");
        return min.best;
      case TypeTag::Lolli:
        min.offer(run(r->left, l->left, remaining - 1), "-o left (swapped)");
        min.offer(run(l->right, r->right, remaining - 1), "-o right");
        return min.best;
      default:
        return clash("unsupported node");
    }
  }

  static const TypeRef* find(const TypeRef& choice, const std::string& label) {
    for (const auto& [l, t] : choice->branches)
      if (l == label) return &t;
    return nullptr;
  }
};

}  // namespace detail

// True when a quantifier or quantified variable is syntactically reachable
// from t through the signature; such types are outside the oracle's domain.
inline bool contains_quantifier(const Signature& sig, const TypeRef& t) {
  std::set<std::string> visited;
  auto walk = [&](const TypeRef& u, auto&& self) -> bool {
    switch (u->tag) {
      case TypeTag::Exists:
      case TypeTag::Forall:
      case TypeTag::QuantVar:
        return true;
      case TypeTag::One:
      case TypeTag::Param:
        return false;
      case TypeTag::InternalChoice:
      case TypeTag::ExternalChoice:
        for (const auto& [_, c] : u->branches)
          if (self(c, self)) return true;
        return false;
      case TypeTag::Tensor:
      case TypeTag::Lolli:
        return self(u->left, self) || self(u->right, self);
      case TypeTag::Named: {
        for (const auto& a : u->args)
          if (self(a, self)) return true;
        if (!visited.insert(u->name).second) return false;
        const TypeDefinition* def = sig.find(u->name);
        return def && self(def->body, self);
      }
    }
    return false;
  };
  return walk(t, walk);
}

inline SimResult bounded_sim(const Signature& sig, const TypeRef& a,
                             const TypeRef& b, int k, long node_cap = 100000) {
  detail::SimChecker checker(sig, node_cap);
  try {
    auto ref = checker.run(a, b, k);
    SimResult out;
    out.nodes = checker.nodes();
    if (!ref) {
      out.kind = SimKind::HoldsUpTo;
      out.depth = k;
    } else {
      out.kind = SimKind::RefutedAt;
      out.depth = ref->levels;
      out.path = std::move(ref->path);
      out.reason = std::move(ref->reason);
    }
    return out;
  } catch (const detail::SimExceeded&) {
    SimResult out;
    out.kind = SimKind::ResourceExceeded;
    out.nodes = checker.nodes();
    return out;
  }
}

// --- Cross-checking the algorithm against the oracle ---------------------

struct CrossGoal {
  std::string name;
  TypeRef lhs, rhs;
};

struct CrossEntry {
  std::string name;
  VerdictKind algorithm;
  SimKind oracle;
  bool violation = false;     // algorithm says Subtype, oracle refutes
  bool inconclusive = false;  // oracle ran out of nodes
  std::vector<std::string> oracle_path;
};

struct CrossReport {
  std::vector<CrossEntry> entries;
  int violations = 0;
  int inconclusive = 0;
};

inline CrossReport cross_check(const Signature& sig,
                               const std::vector<Closure>& seeds,
                               const std::vector<CrossGoal>& goals, int k = 12,
                               long node_cap = 100000,
                               const CheckOptions& opts = {}) {
  CrossReport report;
  for (const auto& g : goals) {
    CrossEntry e;
    e.name = g.name;
    auto outcome = check_subtype(sig, seeds, {}, g.lhs, g.rhs, Variance::Plus,
                                 opts);
    e.algorithm = outcome.verdict.kind;
    SimResult sim = bounded_sim(sig, g.lhs, g.rhs, k, node_cap);
    e.oracle = sim.kind;
    e.oracle_path = sim.path;
    if (sim.kind == SimKind::ResourceExceeded) {
      e.inconclusive = true;
      report.inconclusive++;
    } else if (e.algorithm == VerdictKind::Subtype && sim.refuted()) {
      e.violation = true;
      report.violations++;
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace nestsub
