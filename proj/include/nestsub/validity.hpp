#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nestsub/signature.hpp"
#include "nestsub/type.hpp"
#include "nestsub/variance.hpp"

namespace nestsub {

struct ValidityError {
  std::string definition;          // enclosing definition, if any
  std::vector<std::string> path;   // from the root to the offending leaf
  std::string message;

  std::string render() const {
    std::string out;
    if (!definition.empty()) out += "in " + definition + ": ";
    out += message;
    if (!path.empty()) {
      out += " (at ";
      for (size_t i = 0; i < path.size(); i++) {
        if (i) out += " > ";
        out += path[i];
      }
      out += ")";
    }
    return out;
  }
};

using ValidityResult = std::optional<ValidityError>;  // nullopt = ok

namespace detail {

inline std::optional<Variance> ctx_lookup(const VarianceContext& ctx,
                                          const std::string& name) {
  for (const auto& b : ctx)
    if (b.name == name) return b.variance;
  return std::nullopt;
}

struct ValidityChecker {
  const Signature& sig;
  std::vector<std::string> path;

  ValidityResult fail(const std::string& msg) {
    return ValidityError{"", path, msg};
  }

  ValidityResult check(std::set<std::string>& vars, const VarianceContext& ctx,
                       const TypeRef& t, Variance at) {
    switch (t->tag) {
      case TypeTag::One:
        return std::nullopt;
      case TypeTag::QuantVar:
        if (!vars.count(t->name))
          return fail("unbound quantified variable '" + t->name + "'");
        return std::nullopt;
      case TypeTag::Param: {
        auto declared = ctx_lookup(ctx, t->name);
        if (!declared)
          return fail("unbound type parameter '" + t->name + "'");
        if (!variance_leq(at, *declared))
          return fail("parameter '" + t->name + "' declared at " +
                      variance_symbol(*declared) + " used at " +
                      variance_symbol(at));
        return std::nullopt;
      }
      case TypeTag::InternalChoice:
      case TypeTag::ExternalChoice: {
        for (const auto& [label, c] : t->branches) {
          path.push_back("branch " + label);
          if (auto e = check(vars, ctx, c, at)) return e;
          path.pop_back();
        }
        return std::nullopt;
      }
      case TypeTag::Tensor: {
        path.push_back("tensor left");
        if (auto e = check(vars, ctx, t->left, at)) return e;
        path.back() = "tensor right";
        if (auto e = check(vars, ctx, t->right, at)) return e;
        path.pop_back();
        return std::nullopt;
      }
      case TypeTag::Lolli: {
        path.push_back("lolli left");
        if (auto e = check(vars, ctx, t->left, negate(at))) return e;
        path.back() = "lolli right";
        if (auto e = check(vars, ctx, t->right, at)) return e;
        path.pop_back();
        return std::nullopt;
      }
      case TypeTag::Exists:
      case TypeTag::Forall: {
        path.push_back(std::string(t->tag == TypeTag::Exists ? "?" : "!") +
                       t->name);
        bool fresh = vars.insert(t->name).second;
        auto e = check(vars, ctx, t->body, at);
        if (fresh) vars.erase(t->name);
        if (e) return e;
        path.pop_back();
        return std::nullopt;
      }
      case TypeTag::Named: {
        const TypeDefinition* def = sig.find(t->name);
        if (!def) return fail("undefined type name '" + t->name + "'");
        if (def->params.size() != t->args.size())
          return fail("'" + t->name + "' expects " +
                      std::to_string(def->params.size()) + " argument(s), got " +
                      std::to_string(t->args.size()));
        VarianceContext target = nest_context(def->params, at);
        for (size_t i = 0; i < t->args.size(); i++) {
          path.push_back(t->name + " argument " + target[i].name);
          if (auto e = check(vars, ctx, t->args[i], target[i].variance))
            return e;
          path.pop_back();
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }
};

}  // namespace detail

// Valid-types judgment: accepts iff t may appear at variance `at` given the
// parameter variances in ctx and the quantified variables in vars.
inline ValidityResult check_type_valid(const std::set<std::string>& vars,
                                       const VarianceContext& ctx,
                                       const TypeRef& t, Variance at,
                                       const Signature& sig) {
  detail::ValidityChecker c{sig, {}};
  std::set<std::string> vs = vars;
  return c.check(vs, ctx, t, at);
}

// Valid-substitutions judgment: each payload checked at the variance its
// parameter carries in the target context.
inline ValidityResult check_subst_valid(const std::set<std::string>& vars,
                                        const VarianceContext& ctx,
                                        const std::vector<TypeRef>& args,
                                        const VarianceContext& target,
                                        const Signature& sig) {
  if (args.size() != target.size())
    return ValidityError{"", {}, "substitution length mismatch"};
  for (size_t i = 0; i < args.size(); i++) {
    if (auto e = check_type_valid(vars, ctx, args[i], target[i].variance, sig)) {
      e->path.insert(e->path.begin(), "argument " + target[i].name);
      return e;
    }
  }
  return std::nullopt;
}

// Structural well-formedness: names resolve with matching arity, bodies are
// contractive (not a defined name at the root), no free quantified variables.
inline std::vector<ValidityError> check_signature_structure(const Signature& sig) {
  std::vector<ValidityError> errors;
  for (const auto& def : sig.definitions()) {
    if (def.body->tag == TypeTag::Named) {
      errors.push_back({def.name, {}, "body is a defined name (not contractive)"});
      continue;
    }
    auto fv = free_vars(def.body);
    for (const auto& v : fv.vars)
      errors.push_back({def.name, {}, "free quantified variable '" + v + "'"});
    std::set<std::string> declared;
    for (const auto& p : def.params) declared.insert(p.name);
    for (const auto& p : fv.params)
      if (!declared.count(p))
        errors.push_back({def.name, {}, "unbound parameter '" + p + "'"});
    // arity / resolution walk
    std::vector<TypeRef> stack{def.body};
    while (!stack.empty()) {
      TypeRef t = stack.back();
      stack.pop_back();
      switch (t->tag) {
        case TypeTag::Named: {
          const TypeDefinition* target = sig.find(t->name);
          if (!target)
            errors.push_back({def.name, {}, "undefined type name '" + t->name + "'"});
          else if (target->params.size() != t->args.size())
            errors.push_back({def.name, {},
                              "'" + t->name + "' expects " +
                                  std::to_string(target->params.size()) +
                                  " argument(s), got " +
                                  std::to_string(t->args.size())});
          for (const auto& a : t->args) stack.push_back(a);
          break;
        }
        case TypeTag::InternalChoice:
        case TypeTag::ExternalChoice:
          for (const auto& [_, c] : t->branches) stack.push_back(c);
          break;
        case TypeTag::Tensor:
        case TypeTag::Lolli:
          stack.push_back(t->left);
          stack.push_back(t->right);
          break;
        case TypeTag::Exists:
        case TypeTag::Forall:
          stack.push_back(t->body);
          break;
        default:
          break;
      }
    }
  }
  return errors;
}

// Full signature validity: structure plus every body valid at + in its own
// variance context.
inline std::vector<ValidityError> check_signature_valid(const Signature& sig) {
  std::vector<ValidityError> errors = check_signature_structure(sig);
  if (!errors.empty()) return errors;
  for (const auto& def : sig.definitions()) {
    if (auto e = check_type_valid({}, def.params, def.body, Variance::Plus, sig)) {
      e->definition = def.name;
      errors.push_back(*e);
    }
  }
  return errors;
}

namespace detail {

// One round of the occurrence-variance transfer function: context variance
// starts at +, is negated to the left of lolli, and is nested with the
// current iterate of the parameter variance when descending into a
// constructor argument.
inline void collect_occurrences(const Signature& sig, const TypeRef& t,
                                Variance cur, VarianceContext& acc) {
  switch (t->tag) {
    case TypeTag::One:
    case TypeTag::QuantVar:
      return;
    case TypeTag::Param:
      for (auto& b : acc)
        if (b.name == t->name) b.variance = join(b.variance, cur);
      return;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice:
      for (const auto& [_, c] : t->branches)
        collect_occurrences(sig, c, cur, acc);
      return;
    case TypeTag::Tensor:
      collect_occurrences(sig, t->left, cur, acc);
      collect_occurrences(sig, t->right, cur, acc);
      return;
    case TypeTag::Lolli:
      collect_occurrences(sig, t->left, negate(cur), acc);
      collect_occurrences(sig, t->right, cur, acc);
      return;
    case TypeTag::Exists:
    case TypeTag::Forall:
      collect_occurrences(sig, t->body, cur, acc);
      return;
    case TypeTag::Named: {
      const TypeDefinition* def = sig.find(t->name);
      for (size_t i = 0; i < t->args.size(); i++) {
        Variance pv = (def && i < def->params.size()) ? def->params[i].variance
                                                      : Variance::Bot;
        collect_occurrences(sig, t->args[i], nest(cur, pv), acc);
      }
      return;
    }
  }
}

}  // namespace detail

// Least-fixed-point variance inference. Parameters with no occurrence end
// at Bot. The lattice is finite and the transfer function monotone, so the
// iteration terminates.
inline Signature infer_variances(Signature sig) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& def : sig.definitions()) {
      VarianceContext acc;
      acc.reserve(def.params.size());
      for (const auto& p : def.params) acc.push_back({p.name, Variance::Bot});
      detail::collect_occurrences(sig, def.body, Variance::Plus, acc);
      if (acc != def.params) {
        sig.set_variances(def.name, acc);
        changed = true;
      }
    }
  }
  return sig;
}

}  // namespace nestsub
