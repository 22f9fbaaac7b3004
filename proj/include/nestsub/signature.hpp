#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nestsub/subst.hpp"
#include "nestsub/type.hpp"
#include "nestsub/variance.hpp"

namespace nestsub {

struct TypeDefinition {
  std::string name;
  VarianceContext params;
  TypeRef body;
};

// Ordered map from constructor name to definition. Insertion order is kept
// for deterministic reporting.
class Signature {
 public:
  bool contains(const std::string& name) const { return index_.count(name); }

  const TypeDefinition* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &defs_[it->second];
  }

  const TypeDefinition& at(const std::string& name) const {
    const TypeDefinition* d = find(name);
    if (!d) throw std::out_of_range("undefined type name: " + name);
    return *d;
  }

  void add(TypeDefinition def) {
    if (index_.count(def.name))
      throw std::invalid_argument("duplicate definition: " + def.name);
    index_.emplace(def.name, defs_.size());
    defs_.push_back(std::move(def));
  }

  void set_variances(const std::string& name, const VarianceContext& params) {
    defs_[index_.at(name)].params = params;
  }

  void set_body(const std::string& name, TypeRef body) {
    defs_[index_.at(name)].body = std::move(body);
  }

  const std::vector<TypeDefinition>& definitions() const { return defs_; }
  size_t size() const { return defs_.size(); }

 private:
  std::vector<TypeDefinition> defs_;
  std::unordered_map<std::string, size_t> index_;
};

struct UndefinedName : std::runtime_error {
  explicit UndefinedName(const std::string& name)
      : std::runtime_error("undefined type name: " + name) {}
};

// Positional pairing of definition parameters with use-site arguments.
inline ParamMap param_map_for(const TypeDefinition& def,
                              const std::vector<TypeRef>& args) {
  if (def.params.size() != args.size())
    throw std::invalid_argument("arity mismatch for " + def.name);
  ParamMap m;
  for (size_t i = 0; i < args.size(); i++)
    m.emplace(def.params[i].name, args[i]);
  return m;
}

// One unfolding step: a defined name expands to its body with the argument
// substitution applied; anything else is returned unchanged.
inline TypeRef unfold(const Signature& sig, const TypeRef& t) {
  if (t->tag != TypeTag::Named) return t;
  const TypeDefinition* def = sig.find(t->name);
  if (!def) throw UndefinedName(t->name);
  return apply_param_subst(def->body, param_map_for(*def, t->args));
}

// Iterated unfolding until the result is no longer a defined name. Bodies
// consisting of a bare parameter make a single step insufficient; each such
// step substitutes a strict subterm, so this terminates.
inline TypeRef head_normalize(const Signature& sig, const TypeRef& t) {
  TypeRef cur = t;
  int guard = 0;
  while (cur->tag == TypeTag::Named) {
    if (++guard > 65536)
      throw std::logic_error("head_normalize diverged (non-contractive signature?)");
    cur = unfold(sig, cur);
  }
  return cur;
}

}  // namespace nestsub
