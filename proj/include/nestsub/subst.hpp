#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "nestsub/type.hpp"

namespace nestsub {

// Substitutions are simultaneous. Quantifier binders are renamed when they
// would capture a free variable of a payload.

using ParamMap = std::map<std::string, TypeRef>;
using VarMap = std::map<std::string, TypeRef>;

namespace detail {

inline std::string fresh_binder(const std::string& base,
                                const std::set<std::string>& avoid) {
  std::string cand = base + "'";
  while (avoid.count(cand)) cand += "'";
  return cand;
}

template <bool OnParams>
TypeRef subst_go(const TypeRef& t, const std::map<std::string, TypeRef>& sub,
                 const std::set<std::string>& payload_vars) {
  switch (t->tag) {
    case TypeTag::One:
      return t;
    case TypeTag::Param:
      if constexpr (OnParams) {
        auto it = sub.find(t->name);
        if (it != sub.end()) return it->second;
      }
      return t;
    case TypeTag::QuantVar:
      if constexpr (!OnParams) {
        auto it = sub.find(t->name);
        if (it != sub.end()) return it->second;
      }
      return t;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice: {
      std::vector<Branch> bs;
      bs.reserve(t->branches.size());
      for (const auto& [label, c] : t->branches)
        bs.emplace_back(label, subst_go<OnParams>(c, sub, payload_vars));
      return t->tag == TypeTag::InternalChoice ? t_ichoice(std::move(bs))
                                               : t_echoice(std::move(bs));
    }
    case TypeTag::Tensor:
      return t_tensor(subst_go<OnParams>(t->left, sub, payload_vars),
                      subst_go<OnParams>(t->right, sub, payload_vars));
    case TypeTag::Lolli:
      return t_lolli(subst_go<OnParams>(t->left, sub, payload_vars),
                     subst_go<OnParams>(t->right, sub, payload_vars));
    case TypeTag::Exists:
    case TypeTag::Forall: {
      std::map<std::string, TypeRef> inner = sub;
      std::string binder = t->name;
      TypeRef body = t->body;
      if constexpr (!OnParams) {
        // The binder shields its own name from the substitution.
        inner.erase(binder);
      }
      if (inner.empty()) return t;
      if (payload_vars.count(binder)) {
        // The binder would capture a free variable of a payload; rename it.
        std::set<std::string> avoid = payload_vars;
        auto fv = free_vars(body);
        avoid.insert(fv.vars.begin(), fv.vars.end());
        for (const auto& [k, _] : inner) avoid.insert(k);
        std::string renamed = fresh_binder(binder, avoid);
        VarMap rn{{binder, t_quantvar(renamed)}};
        std::set<std::string> rn_payload{renamed};
        body = subst_go<false>(body, rn, rn_payload);
        binder = renamed;
      }
      TypeRef nb = subst_go<OnParams>(body, inner, payload_vars);
      return t->tag == TypeTag::Exists ? t_exists(binder, std::move(nb))
                                       : t_forall(binder, std::move(nb));
    }
    case TypeTag::Named: {
      std::vector<TypeRef> as;
      as.reserve(t->args.size());
      for (const auto& a : t->args)
        as.push_back(subst_go<OnParams>(a, sub, payload_vars));
      return t_named(t->name, std::move(as));
    }
  }
  return t;
}

inline std::set<std::string> payload_var_names(
    const std::map<std::string, TypeRef>& sub) {
  std::set<std::string> out;
  for (const auto& [_, payload] : sub) {
    auto fv = free_vars(payload);
    out.insert(fv.vars.begin(), fv.vars.end());
  }
  return out;
}

}  // namespace detail

inline TypeRef apply_param_subst(const TypeRef& t, const ParamMap& sub) {
  if (sub.empty()) return t;
  return detail::subst_go<true>(t, sub, detail::payload_var_names(sub));
}

inline TypeRef apply_var_subst(const TypeRef& t, const VarMap& sub) {
  if (sub.empty()) return t;
  return detail::subst_go<false>(t, sub, detail::payload_var_names(sub));
}

}  // namespace nestsub
