#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nestsub {

struct TypeNode;
using TypeRef = std::shared_ptr<const TypeNode>;

enum class TypeTag : uint8_t {
  InternalChoice,
  ExternalChoice,
  Tensor,
  Lolli,
  One,
  Exists,
  Forall,
  QuantVar,
  Param,
  Named,
};

using Branch = std::pair<std::string, TypeRef>;

// Immutable session-type expression. Children are shared; the structural
// hash is computed once at construction.
struct TypeNode {
  TypeTag tag;
  std::vector<Branch> branches;  // choices (ordered, labels distinct)
  TypeRef left, right;           // tensor / lolli
  std::string name;              // binder, variable, parameter, or constructor
  TypeRef body;                  // quantifier body
  std::vector<TypeRef> args;     // constructor arguments (positional)
  size_t hash = 0;
};

namespace detail {
inline size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}
inline size_t hash_str(const std::string& s) {
  return std::hash<std::string>{}(s);
}

inline TypeRef finish(TypeNode n) {
  size_t h = static_cast<size_t>(n.tag) * 0x100000001b3ULL;
  h = hash_mix(h, hash_str(n.name));
  for (const auto& [label, t] : n.branches) {
    h = hash_mix(h, hash_str(label));
    h = hash_mix(h, t->hash);
  }
  if (n.left) h = hash_mix(h, n.left->hash);
  if (n.right) h = hash_mix(h, n.right->hash);
  if (n.body) h = hash_mix(h, n.body->hash);
  for (const auto& a : n.args) h = hash_mix(h, a->hash);
  n.hash = h;
  return std::make_shared<const TypeNode>(std::move(n));
}
}  // namespace detail

inline TypeRef t_ichoice(std::vector<Branch> branches) {
  TypeNode n;
  n.tag = TypeTag::InternalChoice;
  n.branches = std::move(branches);
  return detail::finish(std::move(n));
}
inline TypeRef t_echoice(std::vector<Branch> branches) {
  TypeNode n;
  n.tag = TypeTag::ExternalChoice;
  n.branches = std::move(branches);
  return detail::finish(std::move(n));
}
inline TypeRef t_tensor(TypeRef l, TypeRef r) {
  TypeNode n;
  n.tag = TypeTag::Tensor;
  n.left = std::move(l);
  n.right = std::move(r);
  return detail::finish(std::move(n));
}
inline TypeRef t_lolli(TypeRef l, TypeRef r) {
  TypeNode n;
  n.tag = TypeTag::Lolli;
  n.left = std::move(l);
  n.right = std::move(r);
  return detail::finish(std::move(n));
}
inline TypeRef t_one() {
  TypeNode n;
  n.tag = TypeTag::One;
  return detail::finish(std::move(n));
}
inline TypeRef t_exists(std::string binder, TypeRef body) {
  TypeNode n;
  n.tag = TypeTag::Exists;
  n.name = std::move(binder);
  n.body = std::move(body);
  return detail::finish(std::move(n));
}
inline TypeRef t_forall(std::string binder, TypeRef body) {
  TypeNode n;
  n.tag = TypeTag::Forall;
  n.name = std::move(binder);
  n.body = std::move(body);
  return detail::finish(std::move(n));
}
inline TypeRef t_quantvar(std::string name) {
  TypeNode n;
  n.tag = TypeTag::QuantVar;
  n.name = std::move(name);
  return detail::finish(std::move(n));
}
inline TypeRef t_param(std::string name) {
  TypeNode n;
  n.tag = TypeTag::Param;
  n.name = std::move(name);
  return detail::finish(std::move(n));
}
inline TypeRef t_named(std::string name, std::vector<TypeRef> args = {}) {
  TypeNode n;
  n.tag = TypeTag::Named;
  n.name = std::move(name);
  n.args = std::move(args);
  return detail::finish(std::move(n));
}

inline bool is_named(const TypeRef& t) { return t->tag == TypeTag::Named; }
inline bool is_quantifier(const TypeRef& t) {
  return t->tag == TypeTag::Exists || t->tag == TypeTag::Forall;
}

inline bool type_equal(const TypeRef& a, const TypeRef& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash || a->tag != b->tag) return false;
  if (a->name != b->name) return false;
  switch (a->tag) {
    case TypeTag::One:
    case TypeTag::QuantVar:
    case TypeTag::Param:
      return true;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice: {
      if (a->branches.size() != b->branches.size()) return false;
      for (size_t i = 0; i < a->branches.size(); i++) {
        if (a->branches[i].first != b->branches[i].first) return false;
        if (!type_equal(a->branches[i].second, b->branches[i].second))
          return false;
      }
      return true;
    }
    case TypeTag::Tensor:
    case TypeTag::Lolli:
      return type_equal(a->left, b->left) && type_equal(a->right, b->right);
    case TypeTag::Exists:
    case TypeTag::Forall:
      return type_equal(a->body, b->body);
    case TypeTag::Named: {
      if (a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); i++)
        if (!type_equal(a->args[i], b->args[i])) return false;
      return true;
    }
  }
  return false;
}

struct FreeVars {
  std::set<std::string> params;
  std::set<std::string> vars;
};

namespace detail {
inline void free_vars_into(const TypeRef& t, std::set<std::string>& bound,
                           FreeVars& out) {
  switch (t->tag) {
    case TypeTag::One:
      return;
    case TypeTag::Param:
      out.params.insert(t->name);
      return;
    case TypeTag::QuantVar:
      if (!bound.count(t->name)) out.vars.insert(t->name);
      return;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice:
      for (const auto& [_, c] : t->branches) free_vars_into(c, bound, out);
      return;
    case TypeTag::Tensor:
    case TypeTag::Lolli:
      free_vars_into(t->left, bound, out);
      free_vars_into(t->right, bound, out);
      return;
    case TypeTag::Exists:
    case TypeTag::Forall: {
      bool fresh = bound.insert(t->name).second;
      free_vars_into(t->body, bound, out);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeTag::Named:
      for (const auto& a : t->args) free_vars_into(a, bound, out);
      return;
  }
}

// Free parameters and variables in first-occurrence order of a pre-order
// walk; used to pick parameter lists for generated definitions.
inline void ordered_free_into(const TypeRef& t, std::set<std::string>& bound,
                              std::vector<std::string>& params,
                              std::vector<std::string>& vars,
                              std::set<std::string>& seen_p,
                              std::set<std::string>& seen_v) {
  switch (t->tag) {
    case TypeTag::One:
      return;
    case TypeTag::Param:
      if (seen_p.insert(t->name).second) params.push_back(t->name);
      return;
    case TypeTag::QuantVar:
      if (!bound.count(t->name) && seen_v.insert(t->name).second)
        vars.push_back(t->name);
      return;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice:
      for (const auto& [_, c] : t->branches)
        ordered_free_into(c, bound, params, vars, seen_p, seen_v);
      return;
    case TypeTag::Tensor:
    case TypeTag::Lolli:
      ordered_free_into(t->left, bound, params, vars, seen_p, seen_v);
      ordered_free_into(t->right, bound, params, vars, seen_p, seen_v);
      return;
    case TypeTag::Exists:
    case TypeTag::Forall: {
      bool fresh = bound.insert(t->name).second;
      ordered_free_into(t->body, bound, params, vars, seen_p, seen_v);
      if (fresh) bound.erase(t->name);
      return;
    }
    case TypeTag::Named:
      for (const auto& a : t->args)
        ordered_free_into(a, bound, params, vars, seen_p, seen_v);
      return;
  }
}
}  // namespace detail

inline FreeVars free_vars(const TypeRef& t) {
  FreeVars out;
  std::set<std::string> bound;
  detail::free_vars_into(t, bound, out);
  return out;
}

inline std::pair<std::vector<std::string>, std::vector<std::string>>
ordered_free_vars(const TypeRef& t) {
  std::vector<std::string> params, vars;
  std::set<std::string> bound, sp, sv;
  detail::ordered_free_into(t, bound, params, vars, sp, sv);
  return {params, vars};
}

// --- Pretty printer ----------------------------------------------------
//
// Precedence levels: 0 = full type (lolli, quantifiers), 1 = tensor chain,
// 2 = atom. Output re-parses to the same tree.

namespace detail {
inline void format_into(const TypeRef& t, int level, std::ostringstream& os);

inline void format_branches(const std::vector<Branch>& bs,
                            std::ostringstream& os) {
  os << '{';
  bool first = true;
  for (const auto& [label, c] : bs) {
    if (!first) os << ", ";
    first = false;
    os << label << " : ";
    format_into(c, 0, os);
  }
  os << '}';
}

inline void format_into(const TypeRef& t, int level, std::ostringstream& os) {
  switch (t->tag) {
    case TypeTag::One:
      os << '1';
      return;
    case TypeTag::Param:
    case TypeTag::QuantVar:
      os << t->name;
      return;
    case TypeTag::InternalChoice:
      os << '+';
      format_branches(t->branches, os);
      return;
    case TypeTag::ExternalChoice:
      os << '&';
      format_branches(t->branches, os);
      return;
    case TypeTag::Named:
      os << t->name;
      for (const auto& a : t->args) {
        os << '[';
        format_into(a, 0, os);
        os << ']';
      }
      return;
    case TypeTag::Tensor: {
      bool paren = level > 1;
      if (paren) os << '(';
      format_into(t->left, 2, os);
      os << " * ";
      format_into(t->right, 1, os);
      if (paren) os << ')';
      return;
    }
    case TypeTag::Lolli: {
      bool paren = level > 0;
      if (paren) os << '(';
      format_into(t->left, 1, os);
      os << " -o ";
      format_into(t->right, 0, os);
      if (paren) os << ')';
      return;
    }
    case TypeTag::Exists:
    case TypeTag::Forall: {
      bool paren = level > 0;
      if (paren) os << '(';
      os << (t->tag == TypeTag::Exists ? '?' : '!') << t->name << ". ";
      format_into(t->body, 0, os);
      if (paren) os << ')';
      return;
    }
  }
}
}  // namespace detail

inline std::string format_type(const TypeRef& t) {
  std::ostringstream os;
  detail::format_into(t, 0, os);
  return os.str();
}

}  // namespace nestsub
