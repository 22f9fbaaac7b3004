// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Bounds and tolerances are fixed here, not configurable.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nestsub/driver.hpp"
#include "nestsub/nestsub.hpp"

using namespace nestsub;

namespace {

struct Criterion {
  std::string title;
  double limit_seconds;
  std::function<bool(std::string&)> run;
};

std::string corpus(const std::string& name) {
  return std::string(NESTSUB_CORPUS_DIR) + "/" + name;
}

LoadedFile load_corpus(const std::string& name) {
  return load_program_file(corpus(name), {});
}

const std::vector<std::string> corpus_files = {
    "overview.nst",      "stack.nst",   "stack_poly.nst",
    "queue.nst",         "dyck.nst",    "dyck_noseed.nst",
    "seeddep.nst",       "seeddep_noseed.nst", "natbad.nst"};

bool expect(bool cond, const std::string& what, std::string& detail) {
  if (!cond && detail.empty()) detail = what;
  return cond;
}

VerdictKind query_verdict(const LoadedFile& f, const std::string& goal,
                          std::string& detail) {
  for (const auto& q : f.renamed.queries) {
    if (q.text != goal) continue;
    return check_subtype(f.renamed.sig, f.seeds, {}, q.lhs, q.rhs,
                         Variance::Plus)
        .verdict.kind;
  }
  detail = "missing query: " + goal;
  return VerdictKind::Unknown;
}

// ---- 1. variance lattice ---------------------------------------------------

bool criterion_lattice(std::string& detail) {
  constexpr Variance B = Variance::Bot, P = Variance::Plus,
                     M = Variance::Minus, T = Variance::Top;
  const Variance expected[4][4] = {
      {B, B, B, B}, {B, P, M, T}, {B, M, P, T}, {B, T, T, T}};
  const Variance order[4] = {B, P, M, T};
  bool ok = true;
  for (int i = 0; i < 4; i++)
    for (int j = 0; j < 4; j++)
      ok &= expect(nest(order[i], order[j]) == expected[i][j], "nest table",
                   detail);
  for (Variance a : all_variances)
    for (Variance b : all_variances) {
      ok &= expect(nest(a, b) == nest(b, a), "commutativity", detail);
      for (Variance c : all_variances)
        ok &= expect(nest(nest(a, b), c) == nest(a, nest(b, c)),
                     "associativity", detail);
      if (variance_leq(a, b))
        for (Variance z : all_variances) {
          ok &= expect(variance_leq(nest(a, z), nest(b, z)), "monotonicity",
                       detail);
          ok &= expect(variance_leq(nest(z, a), nest(z, b)), "monotonicity",
                       detail);
        }
    }
  for (Variance a : all_variances) {
    ok &= expect(variance_leq(a, a), "reflexivity", detail);
    ok &= expect(variance_leq(B, a) && variance_leq(a, T), "bounds", detail);
    for (Variance b : all_variances) {
      if (variance_leq(a, b) && variance_leq(b, a))
        ok &= expect(a == b, "antisymmetry", detail);
      for (Variance c : all_variances)
        if (variance_leq(a, b) && variance_leq(b, c))
          ok &= expect(variance_leq(a, c), "transitivity", detail);
      Variance j = join(a, b);
      ok &= expect(variance_leq(a, j) && variance_leq(b, j), "join ub", detail);
      for (Variance u : all_variances)
        if (variance_leq(a, u) && variance_leq(b, u))
          ok &= expect(variance_leq(j, u), "join least", detail);
    }
  }
  return ok;
}

// ---- 2. variance inference -------------------------------------------------

bool criterion_inference(std::string& detail) {
  auto build = [](const std::string& src) {
    Program prog = parse_program(src);
    Signature sig;
    for (const auto& item : prog.items) {
      VarianceContext params;
      for (const auto& p : item.params) params.push_back({p, Variance::Bot});
      sig.add({item.name, params, item.body});
    }
    return infer_variances(sig);
  };

  Signature ex31 = build(
      "type List[a] = +{ nil : 1, cons : a * List[a] }\n"
      "type Seg[a] = List[a] -o List[a]\n");
  bool ok = expect(ex31.at("List").params[0].variance == Variance::Plus,
                   "List # +", detail);
  ok &= expect(ex31.at("Seg").params[0].variance == Variance::Top, "Seg # T",
               detail);

  Signature renamed = build(
      "type nat = +{ z : X1, s : nat }\n"
      "type List[a] = +{ nil : X2, cons : X3[a] }\n"
      "type X1 = 1\ntype X2 = 1\n"
      "type X3[a] = X4[a] * List[a]\n"
      "type X4[a] = a\n");
  ok &= expect(renamed.at("X3").params[0].variance == Variance::Plus, "X3 # +",
               detail);
  ok &= expect(renamed.at("X4").params[0].variance == Variance::Plus, "X4 # +",
               detail);
  ok &= expect(renamed.at("List").params[0].variance == Variance::Plus,
               "renamed List # +", detail);

  Signature unused = build("type V[a] = +{ x : 1 }\n");
  ok &= expect(unused.at("V").params[0].variance == Variance::Bot, "V # bot",
               detail);
  return ok;
}

// ---- 3. reference corpus verdict table ------------------------------------------

bool criterion_corpus(std::string& detail) {
  bool ok = true;
  LoadedFile ov = load_corpus("overview.nst");
  ok &= expect(ov.ok(), "overview loads", detail);
  if (!ov.ok()) return false;
  auto want = [&](const LoadedFile& f, const std::string& goal, VerdictKind k) {
    VerdictKind got = query_verdict(f, goal, detail);
    return expect(got == k, goal + " -> " + verdict_name(got), detail);
  };
  ok &= want(ov, "even <= nat", VerdictKind::Subtype);
  ok &= want(ov, "nat <= even", VerdictKind::NotSubtype);
  ok &= want(ov, "odd <= nat", VerdictKind::Subtype);
  ok &= want(ov, "List[even] <= List'[nat]", VerdictKind::Subtype);
  ok &= want(ov, "List[nat] -o List[nat] <= List[even] -o List[nat]",
             VerdictKind::Subtype);
  ok &= want(ov, "Seg[even] <= Seg[nat]", VerdictKind::NotSubtype);
  ok &= want(ov, "Seg[nat] <= Seg[even]", VerdictKind::NotSubtype);
  ok &= want(ov, "HNil <= HList", VerdictKind::Subtype);
  ok &= want(ov, "HCons[HNil] <= HList", VerdictKind::Subtype);
  ok &= want(ov, "Cons[nat][HNil] <= HList", VerdictKind::NotSubtype);

  LoadedFile stack = load_corpus("stack.nst");
  ok &= expect(stack.ok(), "stack loads", detail);
  if (stack.ok()) {
    ok &= want(stack, "Stack[None] <= Stack'", VerdictKind::Subtype);
    ok &= want(stack, "Stack[Some[Stack']] <= Stack'", VerdictKind::Subtype);
    ok &= want(stack, "Stack[Option[Stack']] <= Stack'", VerdictKind::Subtype);
  }

  LoadedFile queue = load_corpus("queue.nst");
  ok &= expect(queue.ok(), "queue loads", detail);
  if (queue.ok()) {
    ok &= want(queue, "Queue[None] <= Queue'", VerdictKind::Subtype);
    ok &= want(queue, "Queue[Some[Queue']] <= Queue'", VerdictKind::Subtype);
    ok &= want(queue, "Queue[Option[Queue']] <= Queue'", VerdictKind::Subtype);
  }

  LoadedFile dyck = load_corpus("dyck.nst");
  ok &= expect(dyck.ok(), "dyck loads", detail);
  if (dyck.ok()) ok &= want(dyck, "E0 <= D0", VerdictKind::Subtype);
  return ok;
}

// ---- 4. seed dependence ------------------------------------------------------

bool criterion_seeds(std::string& detail) {
  bool ok = true;

  LoadedFile bare = load_corpus("seeddep_noseed.nst");
  ok &= expect(bare.ok(), "seeddep_noseed loads", detail);
  if (bare.ok()) {
    CheckOptions opts;
    opts.depth = 50;
    Verdict v = check_subtype(bare.renamed.sig, bare.seeds, {},
                              bare.renamed.queries[0].lhs,
                              bare.renamed.queries[0].rhs, Variance::Plus, opts)
                    .verdict;
    ok &= expect(v.kind == VerdictKind::Unknown,
                 "D <= D' unseeded should be unknown, got " +
                     verdict_name(v.kind),
                 detail);
    ok &= expect(v.reason.find("depth") != std::string::npos,
                 "budget kind should be depth: " + v.reason, detail);
  }

  LoadedFile seeded = load_corpus("seeddep.nst");
  ok &= expect(seeded.ok(), "seeddep loads", detail);
  if (seeded.ok())
    ok &= expect(query_verdict(seeded, "D <= D'", detail) ==
                     VerdictKind::Subtype,
                 "D <= D' seeded should be subtype", detail);

  LoadedFile bad = load_corpus("badseed.nst");
  ok &= expect(!bad.ok() && bad.seed_failures.size() == 1,
               "nat <= even seed must be rejected", detail);
  return ok;
}

// ---- 5. oracle soundness campaign -------------------------------------------

bool criterion_soundness(std::string& detail) {
  bool ok = true;

  // closed corpus goals through the simulation oracle
  int corpus_goals = 0;
  for (const auto& name : corpus_files) {
    LoadedFile f = load_corpus(name);
    if (!f.ok()) continue;
    std::vector<CrossGoal> goals;
    for (const auto& q : f.renamed.queries) {
      if (contains_quantifier(f.renamed.sig, q.lhs) ||
          contains_quantifier(f.renamed.sig, q.rhs))
        continue;
      goals.push_back({q.text, q.lhs, q.rhs});
    }
    corpus_goals += static_cast<int>(goals.size());
    CrossReport report = cross_check(f.renamed.sig, f.seeds, goals, 12);
    ok &= expect(report.violations == 0, name + ": oracle violation", detail);
  }
  ok &= expect(corpus_goals >= 10, "corpus goal count", detail);

  // 200 random BPA pairs against both oracles
  FuzzReport fuzz = fuzz_bpa(200, 7, 10, 5, 3, 3, 12);
  ok &= expect(fuzz.violations == 0,
               "fuzz violations: " + std::to_string(fuzz.violations), detail);

  // harness sensitivity: an inverted internal-choice label check must be
  // caught on the nat/even/odd family
  LoadedFile ov = load_corpus("overview.nst");
  std::vector<CrossGoal> mutants = {
      {"nat <= odd", t_named("nat"), t_named("odd")},
      {"nat <= even", t_named("nat"), t_named("even")},
      {"even <= nat", t_named("even"), t_named("nat")},
  };
  CheckOptions broken;
  broken.invert_internal_choice_inclusion = true;
  CrossReport mutant_report =
      cross_check(ov.renamed.sig, {}, mutants, 12, 100000, broken);
  ok &= expect(mutant_report.violations >= 1,
               "mutant run should produce a violation", detail);
  return ok;
}

// ---- 6. translation unfolds like the LTS ------------------------------------

bool criterion_translation(std::string& detail) {
  bool ok = true;
  int checked = 0;
  for (uint64_t seed = 101; checked < 100; seed++) {
    BpaSystem sys = gen_random(seed, 4, 3, 3);
    BpaTranslation tr = translate(sys);
    std::vector<BpaRef> frontier{b_var(sys.root)};
    for (int round = 0; round < 4 && checked < 100; round++) {
      std::vector<BpaRef> next;
      for (const auto& e : frontier)
        for (const auto& [_, succ] : bpa_step(sys, e))
          if (!is_epsilon(succ)) next.push_back(succ);
      for (const auto& p : next) {
        if (checked >= 100) break;
        checked++;
        TypeRef unfolded = head_normalize(tr.sig, bpa_translate_expr(sys, p));
        if (unfolded->tag != TypeTag::InternalChoice) {
          ok &= expect(false, "unfold is not an internal choice", detail);
          continue;
        }
        BpaSteps steps = bpa_step(sys, p);
        ok &= expect(unfolded->branches.size() == steps.size(),
                     "branch count mismatch", detail);
        for (const auto& [a, succ] : steps) {
          bool found = false;
          for (const auto& [label, cont] : unfolded->branches)
            if (label == a) {
              found = type_equal(cont, bpa_translate_expr(sys, succ));
              break;
            }
          ok &= expect(found, "branch for " + a + " differs", detail);
        }
      }
      frontier = std::move(next);
    }
  }
  ok &= expect(checked == 100, "reached 100 expressions", detail);
  return ok;
}

// ---- 7. renaming invariants ---------------------------------------------------

bool criterion_renaming(std::string& detail) {
  bool ok = true;

  // the alternation assertion never fires on any corpus check
  for (const auto& name : corpus_files) {
    LoadedFile f = load_corpus(name);
    if (!f.ok()) continue;
    ok &= expect(satisfies_alternation(f.renamed.sig),
                 name + ": renamed signature alternation", detail);
    SubtypeChecker checker(f.renamed.sig, f.seeds, {});
    for (const auto& q : f.renamed.queries) {
      checker.check({}, q.lhs, q.rhs, Variance::Plus);
      ok &= expect(checker.stats().alternation_violations == 0,
                   name + ": alternation violation in " + q.text, detail);
    }
  }

  // wrappers are simulation-equivalent to the types they name
  std::string base =
      "type nat = +{ z : 1, s : nat }\n"
      "type even = +{ z : 1, s : odd }\n"
      "type odd = +{ s : even }\n"
      "type List[a] = +{ nil : 1, cons : a * List[a] }\n";
  for (int i = 0; i < 50; i++) {
    uint64_t state = i * 2654435761u + 7;
    auto next = [&]() {
      state ^= state >> 30;
      state *= 0xbf58476d1ce4e5b9ULL;
      state ^= state >> 27;
      return state;
    };
    auto pick = [&](int n) { return static_cast<int>(next() % n); };
    std::function<TypeRef(int)> gen = [&](int depth) -> TypeRef {
      if (depth == 0) {
        switch (pick(4)) {
          case 0: return t_one();
          case 1: return t_named("nat");
          case 2: return t_named("even");
          default: return t_named("odd");
        }
      }
      switch (pick(5)) {
        case 0:
          return t_ichoice({{"l", gen(depth - 1)}, {"m", gen(depth - 1)}});
        case 1: return t_echoice({{"l", gen(depth - 1)}});
        case 2: return t_tensor(gen(depth - 1), gen(depth - 1));
        case 3: return t_lolli(gen(depth - 1), gen(depth - 1));
        default: return t_named("List", {gen(depth - 1)});
      }
    };
    TypeRef t = gen(1 + pick(3));
    Program prog = parse_program(base);
    Item query;
    query.kind = Item::Kind::Check;
    query.lhs = t;
    query.rhs = t;
    prog.items.push_back(query);
    RenamedProgram r = internal_rename(prog);
    if (!r.ok()) {
      ok &= expect(false, "rename failed on random type", detail);
      continue;
    }
    TypeRef wrapper = r.queries[0].lhs;
    ok &= expect(bounded_sim(r.sig, t, wrapper, 8).holds(),
                 "type <= wrapper at k=8: " + format_type(t), detail);
    ok &= expect(bounded_sim(r.sig, wrapper, t, 8).holds(),
                 "wrapper <= type at k=8: " + format_type(t), detail);
  }
  return ok;
}

// ---- 8. determinism and reflexivity -------------------------------------------

bool criterion_determinism(std::string& detail) {
  bool ok = true;
  for (const auto& name : corpus_files) {
    CheckOptions opts;
    LoadedFile f1 = load_program_file(corpus(name), opts);
    LoadedFile f2 = load_program_file(corpus(name), opts);
    std::string a = report_json(run_checks(f1, opts)).dump(2);
    std::string b = report_json(run_checks(f2, opts)).dump(2);
    ok &= expect(a == b, name + ": reports differ across runs", detail);
  }

  for (const auto& name : corpus_files) {
    LoadedFile f = load_corpus(name);
    if (!f.ok()) continue;
    const Signature& sig = f.renamed.sig;
    TypeRef one_name;
    for (const auto& def : sig.definitions())
      if (def.body->tag == TypeTag::One) one_name = t_named(def.name);
    for (const auto& def : sig.definitions()) {
      std::vector<TypeRef> args;
      for (size_t i = 0; i < def.params.size() && one_name; i++)
        args.push_back(one_name);
      if (args.size() != def.params.size()) continue;
      TypeRef t = t_named(def.name, args);
      auto outcome = check_subtype(sig, f.seeds, {}, t, t, Variance::Plus);
      ok &= expect(outcome.verdict.kind == VerdictKind::Subtype,
                   name + ": reflexivity of " + format_type(t), detail);
    }
  }
  return ok;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"variance lattice laws (exhaustive)", 1.0, criterion_lattice},
      {"variance inference on the reference signatures", 1.0, criterion_inference},
      {"reference corpus verdict table", 5.0, criterion_corpus},
      {"seed dependence and invalid-seed rejection", 5.0, criterion_seeds},
      {"oracle soundness campaign (corpus + 200 BPA pairs)", 60.0,
       criterion_soundness},
      {"translated systems unfold like their LTS", 10.0, criterion_translation},
      {"renaming invariants (alternation, wrapper equivalence)", 30.0,
       criterion_renaming},
      {"determinism and reflexivity over the corpus", 10.0,
       criterion_determinism},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); i++) {
    std::string detail;
    auto start = std::chrono::steady_clock::now();
    bool pass = false;
    try {
      pass = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    bool in_time = seconds < criteria[i].limit_seconds;
    bool overall = pass && in_time;
    if (!overall) failures++;
    std::printf("%s  %zu. %s (%.2fs, limit %.0fs)%s%s\n",
                overall ? "PASS" : "FAIL", i + 1, criteria[i].title.c_str(),
                seconds, criteria[i].limit_seconds,
                detail.empty() ? "" : " -- ", detail.c_str());
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
