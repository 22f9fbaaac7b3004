#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "nestsub/driver.hpp"
#include "nestsub/nestsub.hpp"

using namespace nestsub;

namespace {

std::string corpus_path(const std::string& name) {
  return std::string(NESTSUB_CORPUS_DIR) + "/" + name;
}

LoadedFile load_corpus(const std::string& name, CheckOptions opts = {}) {
  LoadedFile f = load_program_file(corpus_path(name), opts);
  return f;
}

// Convenience: load a file and run the i-th check query.
Verdict run_query(const LoadedFile& file, size_t i, CheckOptions opts = {}) {
  REQUIRE(file.ok());
  REQUIRE(i < file.renamed.queries.size());
  auto outcome = check_subtype(file.renamed.sig, file.seeds, {},
                               file.renamed.queries[i].lhs,
                               file.renamed.queries[i].rhs, Variance::Plus, opts);
  return outcome.verdict;
}

LoadedFile overview() {
  static LoadedFile f = load_corpus("overview.nst");
  return f;
}

}  // namespace

TEST_CASE("overview corpus verdicts") {
  LoadedFile f = overview();
  REQUIRE(f.ok());
  auto verdict_of = [&](const std::string& goal) {
    for (size_t i = 0; i < f.renamed.queries.size(); i++)
      if (f.renamed.queries[i].text == goal) return run_query(f, i).kind;
    FAIL("no such query: " << goal);
    return VerdictKind::Unknown;
  };

  CHECK(verdict_of("even <= nat") == VerdictKind::Subtype);
  CHECK(verdict_of("odd <= nat") == VerdictKind::Subtype);
  CHECK(verdict_of("nat <= even") == VerdictKind::NotSubtype);
  CHECK(verdict_of("List[even] <= List'[nat]") == VerdictKind::Subtype);
  CHECK(verdict_of("List[nat] -o List[nat] <= List[even] -o List[nat]") ==
        VerdictKind::Subtype);
  CHECK(verdict_of("Seg[even] <= Seg[nat]") == VerdictKind::NotSubtype);
  CHECK(verdict_of("Seg[nat] <= Seg[even]") == VerdictKind::NotSubtype);
  CHECK(verdict_of("HNil <= HList") == VerdictKind::Subtype);
  CHECK(verdict_of("HCons[HNil] <= HList") == VerdictKind::Subtype);
  CHECK(verdict_of("Cons[nat][HNil] <= HList") == VerdictKind::NotSubtype);
}

TEST_CASE("nat is not a subtype of even: the z label is the witness") {
  LoadedFile f = load_corpus("natbad.nst");
  Verdict v = run_query(f, 0);
  REQUIRE(v.kind == VerdictKind::NotSubtype);
  // the failure path walks through the s branch into the label-set clash
  bool saw_s_branch = false;
  for (const auto& step : v.failure_path)
    if (step.find("branch s") != std::string::npos) saw_s_branch = true;
  CHECK(saw_s_branch);
  CHECK(v.reason.find("label") != std::string::npos);
}

TEST_CASE("stack and queue corpora verify with their seeds") {
  for (const char* name : {"stack.nst", "queue.nst"}) {
    LoadedFile f = load_corpus(name);
    INFO(name);
    REQUIRE(f.ok());
    REQUIRE(f.renamed.queries.size() == 3);
    for (size_t i = 0; i < f.renamed.queries.size(); i++) {
      INFO(f.renamed.queries[i].text);
      CHECK(run_query(f, i).kind == VerdictKind::Subtype);
    }
  }
}

TEST_CASE("dyck corpus: subtype with seeds, unknown without") {
  LoadedFile with = load_corpus("dyck.nst");
  CHECK(run_query(with, 0).kind == VerdictKind::Subtype);

  LoadedFile without = load_corpus("dyck_noseed.nst");
  Verdict v = run_query(without, 0);
  CHECK(v.kind == VerdictKind::Unknown);
}

TEST_CASE("seed dependence of the self-nesting example") {
  LoadedFile with = load_corpus("seeddep.nst");
  Verdict seeded = run_query(with, 0);
  CHECK(seeded.kind == VerdictKind::Subtype);

  LoadedFile without = load_corpus("seeddep_noseed.nst");
  Verdict v = run_query(without, 0);
  REQUIRE(v.kind == VerdictKind::Unknown);
  CHECK(v.reason.find("depth") != std::string::npos);
}

TEST_CASE("the invalid nat <= even seed is rejected") {
  LoadedFile f = load_corpus("badseed.nst");
  CHECK_FALSE(f.ok());
  REQUIRE(f.seed_failures.size() == 1);
  CHECK(f.seed_failures[0].declaration == "nat <= even");
  CHECK(f.seed_failures[0].verdict.kind == VerdictKind::NotSubtype);
}

TEST_CASE("empty declaration lists validate to an empty seed set") {
  Signature sig;
  auto v = validate_eqtypes(sig, {});
  CHECK(v.ok());
  CHECK(v.closures.empty());
}

TEST_CASE("bidirectional declarations validate both directions") {
  CheckOptions opts;
  LoadedFile ok_file = load_program_text(
      "type A = +{ l : 1 }\n"
      "type B = +{ l : 1 }\n"
      "eqtype A = B\n",
      "both-ok", opts);
  REQUIRE(ok_file.ok());
  CHECK(ok_file.seeds.size() == 2);  // one closure per direction

  LoadedFile bad_file = load_program_text(
      "type nat = +{ z : 1, s : nat }\n"
      "type even = +{ z : 1, s : odd }\n"
      "type odd = +{ s : even }\n"
      "eqtype even = nat\n",
      "both-bad", opts);
  REQUIRE_FALSE(bad_file.ok());
  REQUIRE(bad_file.seed_failures.size() == 1);
  CHECK(bad_file.seed_failures[0].declaration.find("right-to-left") !=
        std::string::npos);
}

TEST_CASE("match_args") {
  // pattern (x/a) against subject (D/a)
  auto sigma = match_args({t_quantvar("x")}, {t_named("D")}, {"x"});
  REQUIRE(sigma.has_value());
  CHECK(type_equal(sigma->at("x"), t_named("D")));

  // ground identical
  auto empty = match_args({t_named("nat")}, {t_named("nat")}, {});
  REQUIRE(empty.has_value());
  CHECK(empty->empty());

  // inconsistent bindings
  CHECK_FALSE(match_args({t_quantvar("x"), t_quantvar("x")},
                         {t_named("D"), t_named("E")}, {"x"})
                  .has_value());

  // subject-side variables are rigid
  CHECK_FALSE(match_args({t_named("D")}, {t_quantvar("y")}, {}).has_value());
  auto bind_var = match_args({t_quantvar("x")}, {t_quantvar("y")}, {"x"});
  REQUIRE(bind_var.has_value());
  CHECK(type_equal(bind_var->at("x"), t_quantvar("y")));
}

TEST_CASE("substitution subtyping") {
  LoadedFile f = overview();
  const Signature& sig = f.renamed.sig;

  // ((nat/a), (even/a)) at a # - reduces to even <= nat at +
  auto neg = check_subst_subtype(sig, {}, {}, {t_named("nat")},
                                 {t_named("even")}, {{"a", Variance::Minus}});
  CHECK(neg.verdict.kind == VerdictKind::Subtype);

  auto nil = check_subst_subtype(sig, {}, {}, {}, {}, {});
  CHECK(nil.verdict.kind == VerdictKind::Subtype);

  // nonvariant entries succeed regardless of the two types
  auto perm = check_subst_subtype(sig, {}, {}, {t_named("nat")},
                                  {t_named("HList")}, {{"a", Variance::Bot}});
  CHECK(perm.verdict.kind == VerdictKind::Subtype);
}

TEST_CASE("verdicts and traces are deterministic") {
  for (const char* name : {"overview.nst", "stack.nst", "dyck.nst"}) {
    LoadedFile f = load_corpus(name);
    REQUIRE(f.ok());
    for (size_t i = 0; i < f.renamed.queries.size(); i++) {
      Verdict a = run_query(f, i);
      Verdict b = run_query(f, i);
      CHECK(a.kind == b.kind);
      std::function<bool(const TraceNode&, const TraceNode&)> same =
          [&](const TraceNode& x, const TraceNode& y) {
            if (x.rule != y.rule || x.goal != y.goal || x.detail != y.detail ||
                x.children.size() != y.children.size())
              return false;
            for (size_t j = 0; j < x.children.size(); j++)
              if (!same(x.children[j], y.children[j])) return false;
            return true;
          };
      CHECK(same(a.trace, b.trace));
    }
  }
}

TEST_CASE("reflexivity over all corpus definitions") {
  for (const char* name :
       {"overview.nst", "stack.nst", "queue.nst", "dyck.nst", "seeddep.nst"}) {
    LoadedFile f = load_corpus(name);
    REQUIRE(f.ok());
    const Signature& sig = f.renamed.sig;
    // close each definition by instantiating parameters with a wrapped 1
    TypeRef one_name;
    for (const auto& def : sig.definitions())
      if (def.body->tag == TypeTag::One) {
        one_name = t_named(def.name);
        break;
      }
    for (const auto& def : sig.definitions()) {
      std::vector<TypeRef> args;
      for (size_t i = 0; i < def.params.size(); i++) {
        REQUIRE(one_name);
        args.push_back(one_name);
      }
      TypeRef t = t_named(def.name, args);
      INFO(name << ": " << format_type(t));
      auto outcome = check_subtype(sig, f.seeds, {}, t, t, Variance::Plus);
      CHECK(outcome.verdict.kind == VerdictKind::Subtype);
    }
  }
}

TEST_CASE("validated seed supersets preserve Subtype verdicts") {
  // stack.nst plus extra (valid) declarations: every Subtype stays Subtype
  std::ifstream in(corpus_path("stack.nst"));
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string extended = buf.str() +
                         "eqtype Stack[Some[Stack[None]]] <= Stack'\n"
                         "eqtype None <= Option[Stack']\n";
  CheckOptions opts;
  LoadedFile base = load_corpus("stack.nst");
  LoadedFile more = load_program_text(extended, "stack-extended", opts);
  REQUIRE(base.ok());
  REQUIRE(more.ok());
  CHECK(more.seeds.size() > base.seeds.size());
  for (size_t i = 0; i < base.renamed.queries.size(); i++) {
    Verdict before = run_query(base, i);
    Verdict after = run_query(more, i);
    if (before.kind == VerdictKind::Subtype)
      CHECK(after.kind == VerdictKind::Subtype);
  }
}

TEST_CASE("alternation assertion stays quiet across the corpus") {
  for (const char* name : {"overview.nst", "stack.nst", "queue.nst",
                           "dyck.nst", "dyck_noseed.nst", "seeddep.nst",
                           "seeddep_noseed.nst", "natbad.nst"}) {
    LoadedFile f = load_corpus(name);
    REQUIRE(f.ok());
    SubtypeChecker checker(f.renamed.sig, f.seeds, {});
    for (const auto& q : f.renamed.queries) {
      checker.check({}, q.lhs, q.rhs, Variance::Plus);
      INFO(name << ": " << q.text);
      CHECK(checker.stats().alternation_violations == 0);
    }
  }
}

TEST_CASE("def nodes record the closure and matching substitution") {
  LoadedFile f = load_corpus("seeddep.nst");
  Verdict v = run_query(f, 0);
  REQUIRE(v.kind == VerdictKind::Subtype);
  // find a def node in the trace mentioning the seed and a binding for x
  std::function<bool(const TraceNode&)> has_def = [&](const TraceNode& n) {
    if (n.rule == "def" && n.detail.find("sigma") != std::string::npos &&
        n.detail.find("x ->") != std::string::npos)
      return true;
    for (const auto& c : n.children)
      if (has_def(c)) return true;
    return false;
  };
  CHECK(has_def(v.trace));
}

TEST_CASE("variance normalization at the goal level") {
  LoadedFile f = overview();
  const Signature& sig = f.renamed.sig;
  TypeRef nat = t_named("nat");
  TypeRef even = t_named("even");

  // bot: anything relates
  CHECK(check_subtype(sig, {}, {}, nat, t_named("HList"), Variance::Bot)
            .verdict.kind == VerdictKind::Subtype);
  // minus: swapped
  CHECK(check_subtype(sig, {}, {}, nat, even, Variance::Minus).verdict.kind ==
        VerdictKind::Subtype);
  CHECK(check_subtype(sig, {}, {}, even, nat, Variance::Minus).verdict.kind ==
        VerdictKind::NotSubtype);
  // top: both directions; even <=> even holds, even <=> nat does not
  CHECK(check_subtype(sig, {}, {}, even, even, Variance::Top).verdict.kind ==
        VerdictKind::Subtype);
  CHECK(check_subtype(sig, {}, {}, even, nat, Variance::Top).verdict.kind ==
        VerdictKind::NotSubtype);
}

TEST_CASE("goal budget exhaustion reports the budget kind") {
  LoadedFile f = load_corpus("seeddep_noseed.nst");
  CheckOptions opts;
  opts.goal_cap = 20;
  Verdict v = run_query(f, 0, opts);
  REQUIRE(v.kind == VerdictKind::Unknown);
  CHECK(v.reason.find("goal") != std::string::npos);
  CHECK_FALSE(v.frontier.empty());
}
