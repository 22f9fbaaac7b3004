#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace nestsub {

// The four-point variance lattice: bottom (nonvariant), covariant,
// contravariant, top (bivariant).
enum class Variance : uint8_t { Bot = 0, Plus = 1, Minus = 2, Top = 3 };

constexpr std::array<Variance, 4> all_variances = {
    Variance::Bot, Variance::Plus, Variance::Minus, Variance::Top};

// Partial order: Bot <= v <= Top for every v, plus reflexivity.
constexpr bool variance_leq(Variance a, Variance b) {
  return a == b || a == Variance::Bot || b == Variance::Top;
}

// Nesting operator. Plus is the identity, Bot absorbs, Minus flips
// Plus/Minus, Top maps Plus/Minus to Top.
constexpr Variance nest(Variance a, Variance b) {
  if (a == Variance::Bot || b == Variance::Bot) return Variance::Bot;
  if (a == Variance::Plus) return b;
  if (b == Variance::Plus) return a;
  if (a == Variance::Top || b == Variance::Top) return Variance::Top;
  // both Minus
  return Variance::Plus;
}

constexpr Variance negate(Variance a) { return nest(Variance::Minus, a); }

// Least upper bound in the variance_leq order.
constexpr Variance join(Variance a, Variance b) {
  if (a == b) return a;
  if (a == Variance::Bot) return b;
  if (b == Variance::Bot) return a;
  return Variance::Top;
}

inline std::string variance_symbol(Variance v) {
  switch (v) {
    case Variance::Bot: return "⊥";
    case Variance::Plus: return "+";
    case Variance::Minus: return "-";
    case Variance::Top: return "⊤";
  }
  return "?";
}

// ASCII form used in machine-readable output.
inline std::string variance_name(Variance v) {
  switch (v) {
    case Variance::Bot: return "bot";
    case Variance::Plus: return "+";
    case Variance::Minus: return "-";
    case Variance::Top: return "top";
  }
  return "?";
}

// Ordered list of parameter/variance pairs; names are pairwise distinct.
struct VarianceBinding {
  std::string name;
  Variance variance;

  bool operator==(const VarianceBinding&) const = default;
};

using VarianceContext = std::vector<VarianceBinding>;

inline VarianceContext nest_context(const VarianceContext& ctx, Variance by) {
  VarianceContext out;
  out.reserve(ctx.size());
  for (const auto& b : ctx) out.push_back({b.name, nest(b.variance, by)});
  return out;
}

}  // namespace nestsub
