#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "nestsub/parser.hpp"
#include "nestsub/signature.hpp"
#include "nestsub/subst.hpp"
#include "nestsub/type.hpp"
#include "nestsub/validity.hpp"

namespace nestsub {

// A renamed eqtype declaration: both sides are defined names, free
// quantified variables listed in first-occurrence order.
struct SeedDecl {
  std::vector<std::string> vars;
  TypeRef lhs, rhs;
  bool bidirectional = false;
  std::string text;
};

struct RenamedQuery {
  TypeRef lhs, rhs;
  std::string text;
};

struct RenamedProgram {
  Signature sig;
  std::vector<SeedDecl> seeds;
  std::vector<RenamedQuery> queries;
  std::vector<ValidityError> errors;

  bool ok() const { return errors.empty(); }
};

namespace detail {

// Converts free quantified variables to parameters, respecting binders.
// `mapping` pairs variable names with the parameter names standing for them.
inline TypeRef vars_to_params(const TypeRef& t,
                              const std::map<std::string, std::string>& mapping,
                              std::set<std::string>& bound) {
  switch (t->tag) {
    case TypeTag::One:
    case TypeTag::Param:
      return t;
    case TypeTag::QuantVar: {
      if (bound.count(t->name)) return t;
      auto it = mapping.find(t->name);
      return it == mapping.end() ? t : t_param(it->second);
    }
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice: {
      std::vector<Branch> bs;
      bs.reserve(t->branches.size());
      for (const auto& [label, c] : t->branches)
        bs.emplace_back(label, vars_to_params(c, mapping, bound));
      return t->tag == TypeTag::InternalChoice ? t_ichoice(std::move(bs))
                                               : t_echoice(std::move(bs));
    }
    case TypeTag::Tensor:
      return t_tensor(vars_to_params(t->left, mapping, bound),
                      vars_to_params(t->right, mapping, bound));
    case TypeTag::Lolli:
      return t_lolli(vars_to_params(t->left, mapping, bound),
                     vars_to_params(t->right, mapping, bound));
    case TypeTag::Exists:
    case TypeTag::Forall: {
      bool fresh = bound.insert(t->name).second;
      TypeRef body = vars_to_params(t->body, mapping, bound);
      if (fresh) bound.erase(t->name);
      return t->tag == TypeTag::Exists ? t_exists(t->name, std::move(body))
                                       : t_forall(t->name, std::move(body));
    }
    case TypeTag::Named: {
      std::vector<TypeRef> as;
      as.reserve(t->args.size());
      for (const auto& a : t->args)
        as.push_back(vars_to_params(a, mapping, bound));
      return t_named(t->name, std::move(as));
    }
  }
  return t;
}

class Renamer {
 public:
  explicit Renamer(Signature sig) : sig_(std::move(sig)) {
    // Continue numbering past any internal names already present, so that
    // renaming an already-renamed signature stays idempotent.
    for (const auto& def : sig_.definitions()) {
      if (def.name.size() > 2 && def.name[0] == '%' && def.name[1] == 'X') {
        int n = 0;
        bool numeric = true;
        for (size_t i = 2; i < def.name.size(); i++) {
          if (!std::isdigit(static_cast<unsigned char>(def.name[i]))) {
            numeric = false;
            break;
          }
          n = n * 10 + (def.name[i] - '0');
        }
        if (numeric && n >= counter_) counter_ = n + 1;
      }
    }
  }

  Signature& signature() { return sig_; }

  void rename_definitions() {
    std::vector<std::pair<std::string, TypeRef>> originals;
    for (const auto& def : sig_.definitions())
      originals.emplace_back(def.name, def.body);
    for (auto& [name, body] : originals)
      sig_.set_body(name, rename_structural(body));
  }

  // A type used as a subtyping goal side: kept when already a name,
  // otherwise wrapped in a fresh internal definition with its free
  // variables lifted to parameters.
  TypeRef rename_goal_side(const TypeRef& t) {
    if (t->tag == TypeTag::Named) return rename_args(t);
    return make_internal(t);
  }

 private:
  Signature sig_;
  int counter_ = 1;
  // structural-equality map from renamed body to internal name
  std::unordered_map<size_t, std::vector<std::pair<TypeRef, std::string>>> cons_;

  std::string fresh_name() { return "%X" + std::to_string(counter_++); }

  // Continuation position: everything gets a name, including bare leaves.
  TypeRef name_continuation(const TypeRef& t) {
    if (t->tag == TypeTag::Named) return rename_args(t);
    return make_internal(t);
  }

  // Argument position: variables stay raw, names recurse, structural
  // arguments are wrapped.
  TypeRef rename_args(const TypeRef& t) {
    switch (t->tag) {
      case TypeTag::Param:
      case TypeTag::QuantVar:
        return t;
      case TypeTag::Named: {
        std::vector<TypeRef> as;
        as.reserve(t->args.size());
        for (const auto& a : t->args) as.push_back(rename_args(a));
        return t_named(t->name, std::move(as));
      }
      default:
        return make_internal(t);
    }
  }

  // The renamed form of a structural body: same root constructor, every
  // continuation replaced by a name. Bare leaves stay as they are.
  TypeRef rename_structural(const TypeRef& t) {
    switch (t->tag) {
      case TypeTag::One:
      case TypeTag::Param:
      case TypeTag::QuantVar:
        return t;
      case TypeTag::InternalChoice:
      case TypeTag::ExternalChoice: {
        std::vector<Branch> bs;
        bs.reserve(t->branches.size());
        for (const auto& [label, c] : t->branches)
          bs.emplace_back(label, name_continuation(c));
        return t->tag == TypeTag::InternalChoice ? t_ichoice(std::move(bs))
                                                 : t_echoice(std::move(bs));
      }
      case TypeTag::Tensor:
        return t_tensor(name_continuation(t->left),
                        name_continuation(t->right));
      case TypeTag::Lolli:
        return t_lolli(name_continuation(t->left),
                       name_continuation(t->right));
      case TypeTag::Exists:
        return t_exists(t->name, name_continuation(t->body));
      case TypeTag::Forall:
        return t_forall(t->name, name_continuation(t->body));
      case TypeTag::Named:
        return rename_args(t);  // not reached for contractive bodies
    }
    return t;
  }

  TypeRef make_internal(const TypeRef& t) {
    auto [free_params, free_quant] = ordered_free_vars(t);

    // Free quantified variables become extra parameters; dodge clashes with
    // parameter names already present.
    std::set<std::string> taken(free_params.begin(), free_params.end());
    std::map<std::string, std::string> var_params;
    std::vector<std::string> param_names = free_params;
    for (const auto& v : free_quant) {
      std::string p = v;
      while (taken.count(p)) p += "'";
      taken.insert(p);
      var_params.emplace(v, p);
      param_names.push_back(p);
    }

    std::set<std::string> bound;
    TypeRef converted = free_quant.empty()
                            ? t
                            : vars_to_params(t, var_params, bound);
    TypeRef body = rename_structural(converted);

    std::string name;
    auto& bucket = cons_[body->hash];
    for (const auto& [existing, n] : bucket)
      if (type_equal(existing, body)) {
        name = n;
        break;
      }
    if (name.empty()) {
      name = fresh_name();
      bucket.emplace_back(body, name);
      VarianceContext params;
      params.reserve(param_names.size());
      for (const auto& p : param_names) params.push_back({p, Variance::Bot});
      sig_.add({name, std::move(params), body});
    }

    std::vector<TypeRef> use_args;
    use_args.reserve(param_names.size());
    for (const auto& p : free_params) use_args.push_back(t_param(p));
    for (const auto& v : free_quant) use_args.push_back(t_quantvar(v));
    return t_named(name, std::move(use_args));
  }
};

}  // namespace detail

// Internal renaming: assigns fresh hidden names to every continuation
// subexpression so loop detection can work on defined names alone, wraps
// query and eqtype sides, and re-infers all variances.
inline RenamedProgram internal_rename(const Program& program) {
  RenamedProgram out;

  Signature original;
  for (const auto& item : program.items) {
    if (item.kind != Item::Kind::TypeDef) continue;
    VarianceContext params;
    params.reserve(item.params.size());
    for (const auto& p : item.params) params.push_back({p, Variance::Bot});
    original.add({item.name, std::move(params), item.body});
  }

  out.errors = check_signature_structure(original);
  if (!out.errors.empty()) return out;

  detail::Renamer renamer(std::move(original));
  renamer.rename_definitions();

  for (const auto& item : program.items) {
    if (item.kind == Item::Kind::EqType) {
      SeedDecl seed;
      seed.vars = item.free_names;
      seed.lhs = renamer.rename_goal_side(item.lhs);
      seed.rhs = renamer.rename_goal_side(item.rhs);
      seed.bidirectional = item.bidirectional;
      seed.text = format_type(item.lhs) +
                  (item.bidirectional ? " = " : " <= ") + format_type(item.rhs);
      out.seeds.push_back(std::move(seed));
    } else if (item.kind == Item::Kind::Check) {
      RenamedQuery q;
      q.lhs = renamer.rename_goal_side(item.lhs);
      q.rhs = renamer.rename_goal_side(item.rhs);
      q.text = format_type(item.lhs) + " <= " + format_type(item.rhs);
      out.queries.push_back(std::move(q));
    }
  }

  out.sig = infer_variances(std::move(renamer.signature()));
  out.errors = check_signature_valid(out.sig);
  return out;
}

// Checks the alternation invariant of a renamed signature: every
// continuation position holds a defined name, and arguments are nestings of
// names and variables.
inline bool satisfies_alternation(const Signature& sig) {
  auto arg_ok = [&](const TypeRef& t, auto&& self) -> bool {
    switch (t->tag) {
      case TypeTag::Param:
      case TypeTag::QuantVar:
        return true;
      case TypeTag::Named:
        for (const auto& a : t->args)
          if (!self(a, self)) return false;
        return true;
      default:
        return false;
    }
  };
  auto cont_ok = [&](const TypeRef& t) {
    return t->tag == TypeTag::Named && arg_ok(t, arg_ok);
  };
  for (const auto& def : sig.definitions()) {
    const TypeRef& b = def.body;
    switch (b->tag) {
      case TypeTag::One:
      case TypeTag::Param:
      case TypeTag::QuantVar:
        break;
      case TypeTag::InternalChoice:
      case TypeTag::ExternalChoice:
        for (const auto& [_, c] : b->branches)
          if (!cont_ok(c)) return false;
        break;
      case TypeTag::Tensor:
      case TypeTag::Lolli:
        if (!cont_ok(b->left) || !cont_ok(b->right)) return false;
        break;
      case TypeTag::Exists:
      case TypeTag::Forall:
        if (!cont_ok(b->body)) return false;
        break;
      case TypeTag::Named:
        return false;  // not contractive
    }
  }
  return true;
}

}  // namespace nestsub
