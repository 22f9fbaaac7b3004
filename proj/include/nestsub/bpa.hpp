#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nestsub/parser.hpp"
#include "nestsub/signature.hpp"
#include "nestsub/subst.hpp"
#include "nestsub/type.hpp"

namespace nestsub {

// Basic Process Algebra: actions, variables, choice, sequencing. Epsilon is
// the empty process; it appears only in evolved states, never in equation
// bodies.

struct BpaNode;
using BpaRef = std::shared_ptr<const BpaNode>;

enum class BpaTag : uint8_t { Action, Var, Choice, Seq, Epsilon };

struct BpaNode {
  BpaTag tag;
  std::string name;  // action label or variable name
  BpaRef left, right;
  size_t hash = 0;
};

namespace detail {
inline BpaRef bpa_finish(BpaNode n) {
  size_t h = static_cast<size_t>(n.tag) * 0x100000001b3ULL;
  h = hash_mix(h, hash_str(n.name));
  if (n.left) h = hash_mix(h, n.left->hash);
  if (n.right) h = hash_mix(h, n.right->hash);
  n.hash = h;
  return std::make_shared<const BpaNode>(std::move(n));
}
}  // namespace detail

inline BpaRef b_action(std::string label) {
  return detail::bpa_finish({BpaTag::Action, std::move(label), nullptr, nullptr});
}
inline BpaRef b_var(std::string name) {
  return detail::bpa_finish({BpaTag::Var, std::move(name), nullptr, nullptr});
}
inline BpaRef b_choice(BpaRef l, BpaRef r) {
  return detail::bpa_finish({BpaTag::Choice, "", std::move(l), std::move(r)});
}
inline BpaRef b_seq(BpaRef l, BpaRef r) {
  return detail::bpa_finish({BpaTag::Seq, "", std::move(l), std::move(r)});
}
inline BpaRef b_epsilon() {
  return detail::bpa_finish({BpaTag::Epsilon, "", nullptr, nullptr});
}

inline bool bpa_equal(const BpaRef& a, const BpaRef& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash || a->tag != b->tag || a->name != b->name)
    return false;
  switch (a->tag) {
    case BpaTag::Action:
    case BpaTag::Var:
    case BpaTag::Epsilon:
      return true;
    case BpaTag::Choice:
    case BpaTag::Seq:
      return bpa_equal(a->left, b->left) && bpa_equal(a->right, b->right);
  }
  return false;
}

inline bool is_epsilon(const BpaRef& e) { return e->tag == BpaTag::Epsilon; }

inline std::string format_bpa(const BpaRef& e, int level = 0) {
  switch (e->tag) {
    case BpaTag::Action:
    case BpaTag::Var:
      return e->name;
    case BpaTag::Epsilon:
      return "<eps>";
    case BpaTag::Seq: {
      std::string s = format_bpa(e->left, 2) + " . " + format_bpa(e->right, 1);
      return level > 1 ? "(" + s + ")" : s;
    }
    case BpaTag::Choice: {
      std::string s = format_bpa(e->left, 1) + " + " + format_bpa(e->right, 0);
      return level > 0 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

struct BpaError : std::runtime_error {
  std::string kind;      // "parse", "unbound-variable", "not-guarded",
                         // "not-deterministic", "not-normed"
  std::string equation;  // offending equation, when applicable

  BpaError(std::string kind_, const std::string& msg, std::string eq = "")
      : std::runtime_error(msg), kind(std::move(kind_)), equation(std::move(eq)) {}
};

class BpaSystem {
 public:
  void add_equation(const std::string& var, BpaRef body) {
    if (index_.count(var))
      throw BpaError("parse", "process '" + var + "' defined twice", var);
    index_.emplace(var, equations_.size());
    equations_.emplace_back(var, std::move(body));
  }

  bool defines(const std::string& var) const { return index_.count(var); }

  const BpaRef& body(const std::string& var) const {
    auto it = index_.find(var);
    if (it == index_.end())
      throw BpaError("unbound-variable", "unbound process variable '" + var + "'",
                     var);
    return equations_[it->second].second;
  }

  const std::vector<std::pair<std::string, BpaRef>>& equations() const {
    return equations_;
  }

  std::string root;

 private:
  std::vector<std::pair<std::string, BpaRef>> equations_;
  std::unordered_map<std::string, size_t> index_;
};

// --- Labelled transition system ------------------------------------------

using BpaSteps = std::vector<std::pair<std::string, BpaRef>>;

namespace detail {
inline void bpa_step_into(const BpaSystem& sys, const BpaRef& e, BpaSteps& out,
                          int unfolds) {
  switch (e->tag) {
    case BpaTag::Epsilon:
      return;
    case BpaTag::Action:
      out.emplace_back(e->name, b_epsilon());
      return;
    case BpaTag::Var: {
      if (unfolds > 256)
        throw BpaError("not-guarded", "unguarded recursion through '" + e->name + "'",
                       e->name);
      bpa_step_into(sys, sys.body(e->name), out, unfolds + 1);
      return;
    }
    case BpaTag::Choice:
      bpa_step_into(sys, e->left, out, unfolds);
      bpa_step_into(sys, e->right, out, unfolds);
      return;
    case BpaTag::Seq: {
      BpaSteps inner;
      bpa_step_into(sys, e->left, inner, unfolds);
      for (auto& [a, p] : inner) {
        if (is_epsilon(p))
          out.emplace_back(a, e->right);
        else
          out.emplace_back(a, b_seq(p, e->right));
      }
      return;
    }
  }
}
}  // namespace detail

// All transitions of e, in derivation order.
inline BpaSteps bpa_step(const BpaSystem& sys, const BpaRef& e) {
  BpaSteps out;
  detail::bpa_step_into(sys, e, out, 0);
  return out;
}

// --- System invariants ----------------------------------------------------

namespace detail {
inline void front_vars(const BpaRef& e, std::set<std::string>& out) {
  switch (e->tag) {
    case BpaTag::Action:
    case BpaTag::Epsilon:
      return;
    case BpaTag::Var:
      out.insert(e->name);
      return;
    case BpaTag::Choice:
      front_vars(e->left, out);
      front_vars(e->right, out);
      return;
    case BpaTag::Seq:
      front_vars(e->left, out);
      return;
  }
}
}  // namespace detail

// Guarded: no variable reachable before the first action.
inline bool is_guarded(const BpaSystem& sys) {
  for (const auto& [_, body] : sys.equations()) {
    std::set<std::string> front;
    detail::front_vars(body, front);
    if (!front.empty()) return false;
  }
  return true;
}

inline void require_guarded(const BpaSystem& sys) {
  for (const auto& [name, body] : sys.equations()) {
    std::set<std::string> front;
    detail::front_vars(body, front);
    if (!front.empty())
      throw BpaError("not-guarded",
                     "equation '" + name + "' has variable '" + *front.begin() +
                         "' outside the scope of an action",
                     name);
  }
}

constexpr long bpa_infinite_norm = -1;

// Norm of every variable: length of the shortest trace to epsilon, by least
// fixpoint starting from infinity.
inline std::map<std::string, long> variable_norms(const BpaSystem& sys) {
  std::map<std::string, long> norms;
  for (const auto& [name, _] : sys.equations()) norms[name] = bpa_infinite_norm;
  auto expr_norm = [&](const BpaRef& e, auto&& self) -> long {
    switch (e->tag) {
      case BpaTag::Epsilon:
        return 0;
      case BpaTag::Action:
        return 1;
      case BpaTag::Var: {
        auto it = norms.find(e->name);
        return it == norms.end() ? bpa_infinite_norm : it->second;
      }
      case BpaTag::Choice: {
        long l = self(e->left, self), r = self(e->right, self);
        if (l == bpa_infinite_norm) return r;
        if (r == bpa_infinite_norm) return l;
        return std::min(l, r);
      }
      case BpaTag::Seq: {
        long l = self(e->left, self), r = self(e->right, self);
        if (l == bpa_infinite_norm || r == bpa_infinite_norm)
          return bpa_infinite_norm;
        return l + r;
      }
    }
    return bpa_infinite_norm;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [name, body] : sys.equations()) {
      long n = expr_norm(body, expr_norm);
      if (n != norms[name] &&
          (norms[name] == bpa_infinite_norm || n < norms[name])) {
        norms[name] = n;
        changed = true;
      }
    }
  }
  return norms;
}

inline long expr_norm(const BpaSystem& sys, const BpaRef& e,
                      const std::map<std::string, long>& norms) {
  switch (e->tag) {
    case BpaTag::Epsilon:
      return 0;
    case BpaTag::Action:
      return 1;
    case BpaTag::Var: {
      auto it = norms.find(e->name);
      return it == norms.end() ? bpa_infinite_norm : it->second;
    }
    case BpaTag::Choice: {
      long l = expr_norm(sys, e->left, norms), r = expr_norm(sys, e->right, norms);
      if (l == bpa_infinite_norm) return r;
      if (r == bpa_infinite_norm) return l;
      return std::min(l, r);
    }
    case BpaTag::Seq: {
      long l = expr_norm(sys, e->left, norms), r = expr_norm(sys, e->right, norms);
      if (l == bpa_infinite_norm || r == bpa_infinite_norm)
        return bpa_infinite_norm;
      return l + r;
    }
  }
  return bpa_infinite_norm;
}

inline bool is_normed(const BpaSystem& sys) {
  for (const auto& [_, n] : variable_norms(sys))
    if (n == bpa_infinite_norm) return false;
  return true;
}

inline void require_normed(const BpaSystem& sys) {
  for (const auto& [name, n] : variable_norms(sys))
    if (n == bpa_infinite_norm)
      throw BpaError("not-normed",
                     "variable '" + name + "' cannot reach the empty process",
                     name);
}

// Syntactic sufficient condition for determinism: the transition labels of
// every subterm of every body are pairwise distinct. Labels of reachable
// expressions always come from the front of some body subterm, so this
// covers the whole reachable LTS.
inline void require_deterministic(const BpaSystem& sys) {
  std::unordered_map<size_t, std::vector<BpaRef>> seen;
  auto visited = [&](const BpaRef& e) {
    auto& bucket = seen[e->hash];
    for (const auto& x : bucket)
      if (bpa_equal(x, e)) return true;
    bucket.push_back(e);
    return false;
  };
  for (const auto& [name, body] : sys.equations()) {
    std::vector<BpaRef> stack{body};
    while (!stack.empty()) {
      BpaRef e = stack.back();
      stack.pop_back();
      if (visited(e)) continue;
      if (e->tag == BpaTag::Choice || e->tag == BpaTag::Seq) {
        stack.push_back(e->left);
        stack.push_back(e->right);
      }
      std::set<std::string> labels;
      for (const auto& [a, _] : bpa_step(sys, e))
        if (!labels.insert(a).second)
          throw BpaError("not-deterministic",
                         "equation '" + name + "' reaches a choice with two '" +
                             a + "' transitions",
                         name);
    }
  }
}

inline bool is_deterministic(const BpaSystem& sys) {
  try {
    require_deterministic(sys);
    return true;
  } catch (const BpaError&) {
    return false;
  }
}

// --- Bounded language -----------------------------------------------------

using Word = std::vector<std::string>;

inline std::string word_text(const Word& w) {
  std::string out;
  for (const auto& a : w) out += a;
  return out;
}

namespace detail {
struct WordSetMemo {
  std::unordered_map<size_t, std::vector<std::pair<BpaRef, std::set<std::string>>>>
      at[64];
};
}  // namespace detail

// Every word of length <= k that drives e to epsilon, as joined label
// strings. Exponential in k; fine at the bounds used here.
inline std::set<std::string> accepted_up_to(const BpaSystem& sys, const BpaRef& e,
                                            int k) {
  if (k < 0 || k > 60) throw std::invalid_argument("bound out of range");
  detail::WordSetMemo memo;
  auto rec = [&](const BpaRef& expr, int depth, auto&& self)
      -> const std::set<std::string>& {
    auto& bucket = memo.at[depth].try_emplace(expr->hash).first->second;
    for (auto& [b, words] : bucket)
      if (bpa_equal(b, expr)) return words;
    std::set<std::string> words;
    if (is_epsilon(expr)) words.insert("");
    if (depth > 0 && !is_epsilon(expr)) {
      for (const auto& [a, succ] : bpa_step(sys, expr))
        for (const auto& w : self(succ, depth - 1, self)) words.insert(a + w);
    }
    bucket.emplace_back(expr, std::move(words));
    return bucket.back().second;
  };
  return rec(e, k, rec);
}

struct InclusionResult {
  bool included = true;
  Word witness;  // shortest word accepted by the left root only
};

namespace detail {

// Norm-greedy shortest completion to epsilon; requires finite norm.
inline Word shortest_completion(const BpaSystem& sys, BpaRef e,
                                const std::map<std::string, long>& norms) {
  Word out;
  while (!is_epsilon(e)) {
    BpaSteps steps = bpa_step(sys, e);
    std::stable_sort(steps.begin(), steps.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::pair<std::string, BpaRef>* best = nullptr;
    long best_norm = bpa_infinite_norm;
    for (const auto& s : steps) {
      long n = expr_norm(sys, s.second, norms);
      if (n == bpa_infinite_norm) continue;
      if (!best || n < best_norm) {
        best = &s;
        best_norm = n;
      }
    }
    if (!best) throw BpaError("not-normed", "completion from un-normed state");
    out.push_back(best->first);
    e = best->second;
  }
  return out;
}

struct ProductMemo {
  // pairs known violation-free at a given budget
  std::unordered_map<size_t, std::vector<std::pair<std::pair<BpaRef, BpaRef>, int>>>
      clean;

  bool known_clean(const BpaRef& p, const BpaRef& q, int budget) {
    auto it = clean.find(p->hash * 31 + q->hash);
    if (it == clean.end()) return false;
    for (const auto& [k, b] : it->second)
      if (b >= budget && bpa_equal(k.first, p) && bpa_equal(k.second, q))
        return true;
    return false;
  }
  void mark_clean(const BpaRef& p, const BpaRef& q, int budget) {
    auto& bucket = clean[p->hash * 31 + q->hash];
    for (auto& [k, b] : bucket)
      if (bpa_equal(k.first, p) && bpa_equal(k.second, q)) {
        if (budget > b) b = budget;
        return;
      }
    bucket.push_back({{p, q}, budget});
  }
};

// Deterministic product walk: finds a word of length <= budget accepted by
// p but not by q. Equivalent to comparing the accepted_up_to sets (the
// right side is deterministic, so its residual per prefix is unique).
inline std::optional<Word> inclusion_violation(
    const BpaSystem& sys, const BpaRef& p, const BpaRef& q, int budget,
    const std::map<std::string, long>& norms, ProductMemo& memo) {
  if (is_epsilon(p)) {
    if (!is_epsilon(q)) return Word{};  // empty word separates them
    return std::nullopt;
  }
  long pnorm = expr_norm(sys, p, norms);
  if (pnorm == bpa_infinite_norm || pnorm > budget)
    return std::nullopt;  // p contributes no word within the budget
  if (is_epsilon(q))
    return shortest_completion(sys, p, norms);
  if (memo.known_clean(p, q, budget)) return std::nullopt;

  BpaSteps psteps = bpa_step(sys, p);
  std::stable_sort(psteps.begin(), psteps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::map<std::string, BpaRef> qmap;
  for (const auto& [a, succ] : bpa_step(sys, q)) qmap.emplace(a, succ);

  for (const auto& [a, psucc] : psteps) {
    auto qit = qmap.find(a);
    if (qit == qmap.end()) {
      long n = expr_norm(sys, psucc, norms);
      if (n != bpa_infinite_norm && n <= budget - 1) {
        Word w = shortest_completion(sys, psucc, norms);
        w.insert(w.begin(), a);
        return w;
      }
      continue;
    }
    if (auto w = inclusion_violation(sys, psucc, qit->second, budget - 1, norms,
                                     memo)) {
      w->insert(w->begin(), a);
      return w;
    }
  }
  memo.mark_clean(p, q, budget);
  return std::nullopt;
}

}  // namespace detail

// Bounded language inclusion of two roots: included iff every word of
// length <= k accepted by lhs is accepted by rhs; otherwise the shortest
// (then lexicographically least) violating word.
inline InclusionResult bounded_inclusion(const BpaSystem& sys,
                                         const std::string& lhs,
                                         const std::string& rhs, int k) {
  BpaRef p = b_var(lhs);
  BpaRef q = b_var(rhs);
  sys.body(lhs);  // both roots must be defined
  sys.body(rhs);
  auto norms = variable_norms(sys);
  detail::ProductMemo memo;
  // Iterative deepening yields the shortest witness.
  for (int j = 0; j <= k; j++) {
    if (auto w = detail::inclusion_violation(sys, p, q, j, norms, memo))
      return {false, std::move(*w)};
  }
  return {true, {}};
}

// Definitional route used to cross-check the product walk.
inline InclusionResult bounded_inclusion_by_enumeration(const BpaSystem& sys,
                                                        const std::string& lhs,
                                                        const std::string& rhs,
                                                        int k) {
  auto lw = accepted_up_to(sys, b_var(lhs), k);
  auto rw = accepted_up_to(sys, b_var(rhs), k);
  std::vector<std::string> extra;
  for (const auto& w : lw)
    if (!rw.count(w)) extra.push_back(w);
  if (extra.empty()) return {true, {}};
  std::stable_sort(extra.begin(), extra.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  Word w;
  for (char c : extra.front()) w.push_back(std::string(1, c));
  return {false, std::move(w)};
}

// --- Translation to nested session types (one type parameter) -------------

struct BpaTranslation {
  Signature sig;
  TypeRef root;
};

inline const std::string bpa_type_param = "k";

// [[e]]_k: actions become singleton internal choices, variables become
// parametric names, sequencing becomes nesting, epsilon is the parameter.
inline TypeRef bpa_translate_expr(const BpaSystem& sys, const BpaRef& e) {
  switch (e->tag) {
    case BpaTag::Epsilon:
      return t_param(bpa_type_param);
    case BpaTag::Action:
      return t_ichoice({{e->name, t_param(bpa_type_param)}});
    case BpaTag::Var:
      return t_named(e->name, {t_param(bpa_type_param)});
    case BpaTag::Seq: {
      TypeRef left = bpa_translate_expr(sys, e->left);
      TypeRef right = bpa_translate_expr(sys, e->right);
      return apply_param_subst(left, {{bpa_type_param, right}});
    }
    case BpaTag::Choice: {
      // Guarded choices head-normalize to sums of action-prefixed terms.
      std::vector<Branch> branches;
      for (const auto& [a, succ] : bpa_step(sys, e))
        branches.emplace_back(a, bpa_translate_expr(sys, succ));
      return t_ichoice(std::move(branches));
    }
  }
  return t_param(bpa_type_param);
}

inline BpaTranslation translate(const BpaSystem& sys) {
  require_guarded(sys);
  require_deterministic(sys);
  require_normed(sys);
  BpaTranslation out;
  for (const auto& [name, body] : sys.equations())
    out.sig.add({name, {{bpa_type_param, Variance::Plus}}, bpa_translate_expr(sys, body)});
  if (sys.root.empty())
    throw BpaError("parse", "system has no root variable");
  out.root = t_named(sys.root, {t_one()});
  return out;
}

// --- Random systems for fuzzing -------------------------------------------

// Deterministic-in-seed generator of guarded, deterministic, normed systems
// in head normal form. Variables that cannot reach epsilon get an extra
// escape branch.
inline BpaSystem gen_random(uint64_t seed, int n_vars, int max_branches,
                            int max_seq_len, const std::string& var_prefix = "X") {
  if (n_vars < 1 || max_branches < 1 || max_seq_len < 1)
    throw std::invalid_argument("gen_random parameters must be >= 1");
  // Plain linear-congruential steps on top of splitmix-style seeding keep
  // the output identical across platforms.
  uint64_t state = seed * 0x9e3779b97f4a7c15ULL + 0xbf58476d1ce4e5b9ULL;
  auto next = [&]() {
    state ^= state >> 30;
    state *= 0xbf58476d1ce4e5b9ULL;
    state ^= state >> 27;
    state *= 0x94d049bb133111ebULL;
    state ^= state >> 31;
    return state;
  };
  auto pick = [&](int n) { return static_cast<int>(next() % n); };

  int alphabet = max_branches + 2;
  auto label = [&](int i) { return std::string(1, static_cast<char>('a' + i)); };

  BpaSystem sys;
  std::vector<std::string> names;
  for (int i = 0; i < n_vars; i++)
    names.push_back(var_prefix + std::to_string(i));

  for (int i = 0; i < n_vars; i++) {
    int n_branches = 1 + pick(max_branches);
    std::vector<int> letters(alphabet);
    for (int j = 0; j < alphabet; j++) letters[j] = j;
    for (int j = alphabet - 1; j > 0; j--)
      std::swap(letters[j], letters[pick(j + 1)]);

    std::vector<BpaRef> branches;
    for (int b = 0; b < n_branches; b++) {
      int tail = pick(max_seq_len + 1);
      std::vector<BpaRef> atoms;
      for (int t = 0; t < tail; t++) {
        if (pick(2) == 0)
          atoms.push_back(b_var(names[pick(n_vars)]));
        else
          atoms.push_back(b_action(label(pick(alphabet))));
      }
      // right-leaning chain behind the guard
      BpaRef chain;
      for (auto it = atoms.rbegin(); it != atoms.rend(); ++it)
        chain = chain ? b_seq(*it, chain) : *it;
      BpaRef branch = b_action(label(letters[b]));
      if (chain) branch = b_seq(branch, chain);
      branches.push_back(branch);
    }
    BpaRef body;
    for (auto it = branches.rbegin(); it != branches.rend(); ++it)
      body = body ? b_choice(*it, body) : *it;
    sys.add_equation(names[i], body);
  }
  sys.root = names[0];

  // Normedness repair: give every non-normed variable an escape action not
  // clashing with its guards.
  auto norms = variable_norms(sys);
  BpaSystem repaired;
  for (const auto& [name, body] : sys.equations()) {
    if (norms.at(name) != bpa_infinite_norm) {
      repaired.add_equation(name, body);
      continue;
    }
    std::set<std::string> guards;
    for (const auto& [a, _] : bpa_step(sys, body)) guards.insert(a);
    int esc = 0;
    while (guards.count(std::string(1, static_cast<char>('a' + esc)))) esc++;
    repaired.add_equation(name,
                          b_choice(body, b_action(std::string(
                                             1, static_cast<char>('a' + esc)))));
  }
  repaired.root = sys.root;
  return repaired;
}

// --- Surface syntax: `proc X = a . X . c + b . X1 ; root X` ----------------

namespace detail {

struct BpaParser {
  const std::string& src;
  size_t i = 0;
  int line = 1, col = 1;

  explicit BpaParser(const std::string& s) : src(s) {}

  void skip() {
    while (i < src.size()) {
      char c = src[i];
      if (c == '%') {
        while (i < src.size() && src[i] != '\n') adv();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        adv();
      } else {
        break;
      }
    }
  }
  void adv() {
    if (src[i] == '\n') {
      line++;
      col = 1;
    } else {
      col++;
    }
    i++;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw BpaError("parse", std::to_string(line) + ":" + std::to_string(col) +
                                ": " + msg);
  }
  bool eat(char c) {
    skip();
    if (i < src.size() && src[i] == c) {
      adv();
      return true;
    }
    return false;
  }
  std::string ident() {
    skip();
    if (i >= src.size() || !ident_start(src[i])) fail("expected an identifier");
    size_t start = i;
    while (i < src.size() && ident_char(src[i])) adv();
    return src.substr(start, i - start);
  }
  bool peek_word(const std::string& w) {
    skip();
    if (src.compare(i, w.size(), w) != 0) return false;
    size_t end = i + w.size();
    return end >= src.size() || !ident_char(src[end]);
  }

  BpaRef expr() {
    BpaRef left = term();
    if (eat('+')) return b_choice(std::move(left), expr());
    return left;
  }
  BpaRef term() {
    BpaRef left = factor();
    if (eat('.')) return b_seq(std::move(left), term());
    return left;
  }
  BpaRef factor() {
    if (eat('(')) {
      BpaRef inner = expr();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    return b_action(ident());  // resolved to Var/Action afterwards
  }
};

inline BpaRef resolve_bpa(const BpaRef& e, const std::set<std::string>& vars) {
  switch (e->tag) {
    case BpaTag::Action:
      return vars.count(e->name) ? b_var(e->name) : e;
    case BpaTag::Var:
    case BpaTag::Epsilon:
      return e;
    case BpaTag::Choice:
      return b_choice(resolve_bpa(e->left, vars), resolve_bpa(e->right, vars));
    case BpaTag::Seq:
      return b_seq(resolve_bpa(e->left, vars), resolve_bpa(e->right, vars));
  }
  return e;
}

}  // namespace detail

inline BpaSystem parse_bpa(const std::string& src) {
  detail::BpaParser p(src);
  std::vector<std::pair<std::string, BpaRef>> raw;
  std::string root;
  while (true) {
    p.skip();
    if (p.i >= src.size()) break;
    if (p.peek_word("proc")) {
      p.ident();  // consume keyword
      std::string name = p.ident();
      if (!p.eat('=')) p.fail("expected '='");
      BpaRef body = p.expr();
      if (!p.eat(';')) p.fail("expected ';'");
      raw.emplace_back(name, body);
    } else if (p.peek_word("root")) {
      p.ident();
      root = p.ident();
      p.eat(';');
    } else {
      p.fail("expected 'proc' or 'root'");
    }
  }
  std::set<std::string> vars;
  for (const auto& [name, _] : raw) vars.insert(name);
  BpaSystem sys;
  for (const auto& [name, body] : raw)
    sys.add_equation(name, detail::resolve_bpa(body, vars));
  sys.root = root;
  if (!root.empty() && !sys.defines(root))
    throw BpaError("parse", "root '" + root + "' is not defined");
  return sys;
}

inline std::string format_bpa_system(const BpaSystem& sys) {
  std::string out;
  for (const auto& [name, body] : sys.equations())
    out += "proc " + name + " = " + format_bpa(body) + " ;\n";
  if (!sys.root.empty()) out += "root " + sys.root + "\n";
  return out;
}

}  // namespace nestsub
