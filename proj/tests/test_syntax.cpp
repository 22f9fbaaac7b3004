#include <catch2/catch_amalgamated.hpp>

#include "nestsub/nestsub.hpp"

using namespace nestsub;

TEST_CASE("parsing the nat declaration") {
  Program prog = parse_program("type nat = +{ z : 1, s : nat }");
  REQUIRE(prog.items.size() == 1);
  const Item& item = prog.items[0];
  CHECK(item.kind == Item::Kind::TypeDef);
  CHECK(item.name == "nat");
  CHECK(item.params.empty());
  REQUIRE(item.body->tag == TypeTag::InternalChoice);
  REQUIRE(item.body->branches.size() == 2);
  CHECK(item.body->branches[0].first == "z");
  CHECK(item.body->branches[0].second->tag == TypeTag::One);
  CHECK(item.body->branches[1].first == "s");
  CHECK(type_equal(item.body->branches[1].second, t_named("nat")));
}

TEST_CASE("empty input parses to an empty program") {
  CHECK(parse_program("").items.empty());
  CHECK(parse_program("% nothing but a comment\n").items.empty());
}

TEST_CASE("unbound identifiers are rejected with their role") {
  CHECK_THROWS_MATCHES(
      parse_program("type V[a] = +{ l : b }"), ParseError,
      Catch::Matchers::Predicate<ParseError>(
          [](const ParseError& e) { return e.kind == "unbound-parameter"; }));
  CHECK_THROWS_MATCHES(
      parse_program("type nat = +{ z : 1 }\ncheck nat <= zap"), ParseError,
      Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
        return e.kind == "unbound-quantified-variable";
      }));
  CHECK_THROWS_MATCHES(
      parse_program("type A = 1\ntype A = 1"), ParseError,
      Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
        return e.kind == "duplicate-definition";
      }));
}

TEST_CASE("duplicate labels in one choice are a parse error") {
  CHECK_THROWS_AS(parse_program("type V = +{ l : 1, l : 1 }"), ParseError);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_program("type V =\n  +{ l : }");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.col > 1);
  }
}

TEST_CASE("eqtype free names become seed variables") {
  Program prog = parse_program(
      "type R[k] = +{ r : k }\n"
      "type D[k] = +{ l : D[D[k]], r : k }\n"
      "eqtype R[x] <= D[x]\n");
  const Item& eq = prog.items[2];
  REQUIRE(eq.kind == Item::Kind::EqType);
  CHECK(eq.free_names == std::vector<std::string>{"x"});
  CHECK(type_equal(eq.lhs, t_named("R", {t_quantvar("x")})));
  CHECK_FALSE(eq.bidirectional);

  Program both = parse_program(
      "type A = 1\ntype B = 1\n"
      "eqtype A = B\n");
  CHECK(both.items[2].bidirectional);
}

TEST_CASE("decl lines are captured raw with their types extracted") {
  Program prog = parse_program(
      "type nat = +{ z : 1, s : nat }\n"
      "type Stack[k] = &{ push : nat -o Stack[Stack[k]], pop : k }\n"
      "decl elem[k] : (x : nat) (t : Stack[k]) |- (s : Stack[Stack[k]])\n");
  const Item& decl = prog.items[2];
  REQUIRE(decl.kind == Item::Kind::Decl);
  CHECK(decl.name == "elem");
  CHECK(decl.decl_vars == std::vector<std::string>{"k"});
  REQUIRE(decl.types.size() == 3);
  CHECK(type_equal(decl.types[0], t_named("nat")));
  CHECK(type_equal(decl.types[1], t_named("Stack", {t_quantvar("k")})));
  CHECK(decl.raw.rfind("decl elem", 0) == 0);
  CHECK(decl.raw.back() == ')');
}

TEST_CASE("formatting examples") {
  CHECK(format_type(t_one()) == "1");
  TypeRef list_nat = t_named("List", {t_named("nat")});
  CHECK(format_type(t_lolli(list_nat, list_nat)) ==
        "List[nat] -o List[nat]");
  TypeRef hcons = t_exists("x", t_tensor(t_quantvar("x"), t_named("HList")));
  CHECK(format_type(hcons) == "?x. x * HList");
}

TEST_CASE("precedence and associativity") {
  // -o is right-associative and binds looser than *
  TypeRef t = parse_type("1 * 1 -o 1 -o 1");
  REQUIRE(t->tag == TypeTag::Lolli);
  CHECK(t->left->tag == TypeTag::Tensor);
  CHECK(t->right->tag == TypeTag::Lolli);

  TypeRef stars = parse_type("1 * 1 * 1");
  REQUIRE(stars->tag == TypeTag::Tensor);
  CHECK(stars->right->tag == TypeTag::Tensor);

  // quantifiers scope to the end of the expression
  TypeRef q = parse_type("?x. x * x", {}, {});
  REQUIRE(q->tag == TypeTag::Exists);
  CHECK(q->body->tag == TypeTag::Tensor);

  // parenthesised quantifier as a tensor component
  TypeRef p = parse_type("(?x. x) * 1");
  REQUIRE(p->tag == TypeTag::Tensor);
  CHECK(p->left->tag == TypeTag::Exists);
}

TEST_CASE("dollar labels and comments") {
  Program prog = parse_program(
      "% Dyck prefix\n"
      "type D0 = +{ l : D0, $ : 1 }  % trailing comment\n");
  CHECK(prog.items[0].body->branches[1].first == "$");
}

TEST_CASE("free variable computation") {
  auto fv1 = free_vars(t_exists("x", t_quantvar("x")));
  CHECK(fv1.params.empty());
  CHECK(fv1.vars.empty());

  auto fv2 = free_vars(t_tensor(t_param("a"), t_quantvar("y")));
  CHECK(fv2.params == std::set<std::string>{"a"});
  CHECK(fv2.vars == std::set<std::string>{"y"});

  auto fv3 = free_vars(t_named("List", {t_param("a")}));
  CHECK(fv3.params == std::set<std::string>{"a"});
  CHECK(fv3.vars.empty());
}

namespace {

// Structured generator for the round-trip property. Tracks the names it
// uses for parameters and variables so parse_type can resolve them.
struct SurfaceGen {
  uint64_t state;
  std::vector<std::string> binders;
  std::vector<std::string> params{"a", "b"};
  bool allow_free_var = true;

  explicit SurfaceGen(uint64_t seed) : state(seed * 0x9e3779b97f4a7c15ULL + 3) {}
  uint64_t next() {
    state ^= state >> 30;
    state *= 0xbf58476d1ce4e5b9ULL;
    state ^= state >> 27;
    return state;
  }
  int pick(int n) { return static_cast<int>(next() % n); }

  TypeRef gen(int depth) {
    if (depth == 0) {
      switch (pick(4)) {
        case 0: return t_one();
        case 1:
          if (params.empty()) return t_one();
          return t_param(params[pick((int)params.size())]);
        case 2:
          if (!binders.empty()) return t_quantvar(binders[pick((int)binders.size())]);
          return allow_free_var ? t_quantvar("v") : t_one();
        default: return t_named(pick(2) ? "N" : "M");
      }
    }
    switch (pick(8)) {
      case 0: {
        std::vector<Branch> bs{{"l", gen(depth - 1)}};
        if (pick(2)) bs.emplace_back("m", gen(depth - 1));
        if (pick(2)) bs.emplace_back("$", gen(depth - 1));
        return t_ichoice(std::move(bs));
      }
      case 1: {
        std::vector<Branch> bs{{"l", gen(depth - 1)}};
        if (pick(2)) bs.emplace_back("m", gen(depth - 1));
        return t_echoice(std::move(bs));
      }
      case 2: return t_tensor(gen(depth - 1), gen(depth - 1));
      case 3: return t_lolli(gen(depth - 1), gen(depth - 1));
      case 4: case 5: {
        std::string binder = pick(2) ? "x" : "y";
        binders.push_back(binder);
        TypeRef body = gen(depth - 1);
        binders.pop_back();
        return pick(2) ? t_exists(binder, body) : t_forall(binder, body);
      }
      case 6:
        return t_named("V", {gen(depth - 1)});
      default:
        return t_named("W", {gen(depth - 1), gen(depth - 1)});
    }
  }
};

}  // namespace

TEST_CASE("round trip: parse after format is the identity") {
  for (int i = 0; i < 500; i++) {
    SurfaceGen g(i + 1);
    TypeRef t = g.gen(1 + g.pick(4));
    std::string text = format_type(t);
    INFO("formatted: " << text);
    TypeRef back = parse_type(text, {"a", "b"}, {"v"});
    CHECK(type_equal(t, back));
  }
}

TEST_CASE("grammar-produced programs reparse") {
  for (int i = 0; i < 100; i++) {
    SurfaceGen g(1000 + i);
    g.allow_free_var = false;
    std::string src;
    src += "type N = 1\ntype M = 1\n";
    g.params = {"a"};
    TypeRef vbody = g.gen(2);
    g.params = {"a", "b"};
    TypeRef wbody = g.gen(2);
    src += "type V[a] = " + format_type(vbody) + "\n";
    src += "type W[a][b] = " + format_type(wbody) + "\n";
    Program prog;
    REQUIRE_NOTHROW(prog = parse_program(src));
    // formatting every parsed body reparses to the same tree
    for (const auto& item : prog.items) {
      if (item.kind != Item::Kind::TypeDef) continue;
      std::set<std::string> params(item.params.begin(), item.params.end());
      CHECK(type_equal(item.body, parse_type(format_type(item.body), params, {})));
    }
  }
}

TEST_CASE("quantified variables may not take arguments") {
  CHECK_THROWS_AS(parse_type("?x. x[1]", {}, {}), ParseError);
  CHECK_THROWS_AS(parse_type("a[1]", {"a"}, {}), ParseError);
}
