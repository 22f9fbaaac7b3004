#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nestsub/bpa.hpp"
#include "nestsub/parser.hpp"
#include "nestsub/rename.hpp"
#include "nestsub/simoracle.hpp"
#include "nestsub/subtype.hpp"
#include "nestsub/validity.hpp"

namespace nestsub {

using Json = nlohmann::ordered_json;

inline CheckOptions default_check_options() {
  CheckOptions opts;
  if (const char* env = std::getenv("NESTSUB_DEPTH")) {
    try {
      int d = std::stoi(env);
      if (d > 0) opts.depth = d;
    } catch (...) {
      // ignore malformed override
    }
  }
  return opts;
}

// Pipeline products for one source file: parse -> structural validity ->
// internal renaming (with variance inference and signature validation) ->
// decl type validation -> eqtype validation.
struct LoadedFile {
  std::string name;
  Program program;
  RenamedProgram renamed;
  std::vector<Closure> seeds;
  std::vector<InvalidSeed> seed_failures;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty() && seed_failures.empty(); }
};

inline LoadedFile load_program_text(const std::string& src,
                                    const std::string& name,
                                    const CheckOptions& opts) {
  LoadedFile out;
  out.name = name;
  try {
    out.program = parse_program(src);
  } catch (const ParseError& e) {
    out.errors.push_back(name + ":" + e.what());
    return out;
  }

  out.renamed = internal_rename(out.program);
  if (!out.renamed.ok()) {
    for (const auto& e : out.renamed.errors) out.errors.push_back(e.render());
    return out;
  }

  // Query and declaration types must be valid over the inferred signature.
  for (const auto& item : out.program.items) {
    if (item.kind == Item::Kind::Decl) {
      std::set<std::string> vars(item.decl_vars.begin(), item.decl_vars.end());
      for (const auto& t : item.types)
        if (auto e = check_type_valid(vars, {}, t, Variance::Plus,
                                      out.renamed.sig)) {
          e->definition = "decl " + item.name;
          out.errors.push_back(e->render());
        }
    }
  }
  if (!out.errors.empty()) return out;

  EqtypeValidation validation =
      validate_eqtypes(out.renamed.sig, out.renamed.seeds, opts);
  if (!validation.ok()) {
    out.seed_failures = std::move(validation.failures);
    return out;
  }
  out.seeds = std::move(validation.closures);
  return out;
}

inline LoadedFile load_program_file(const std::string& path,
                                    const CheckOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    LoadedFile out;
    out.name = path;
    out.errors.push_back("cannot open " + path);
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_program_text(buf.str(), path, opts);
}

struct ItemReport {
  std::string kind;  // "eqtype" | "check"
  std::string goal;
  VerdictKind verdict;
  int depth_used = 0;
  size_t seeds_used = 0;
  double millis = 0.0;
  Verdict detail;
};

struct RunReport {
  std::string file;
  bool loaded = false;
  std::vector<std::string> errors;
  std::vector<ItemReport> items;
  int subtype = 0, not_subtype = 0, unknown = 0;

  int exit_code() const {
    if (!loaded) return 3;
    if (not_subtype > 0) return 1;
    if (unknown > 0) return 2;
    return 0;
  }
};

inline RunReport run_checks(const LoadedFile& file, const CheckOptions& opts) {
  RunReport report;
  report.file = file.name;
  if (!file.ok()) {
    report.errors = file.errors;
    for (const auto& f : file.seed_failures)
      report.errors.push_back("invalid eqtype declaration: " + f.declaration +
                              " (" + verdict_name(f.verdict.kind) +
                              (f.verdict.reason.empty() ? "" : ": " + f.verdict.reason) +
                              ")");
    return report;
  }
  report.loaded = true;

  SubtypeChecker checker(file.renamed.sig, file.seeds, opts);

  // Seed declarations were validated at load; report them first, then the
  // queries, preserving input order within each group.
  for (const auto& seed : file.renamed.seeds) {
    ItemReport item;
    item.kind = "eqtype";
    item.goal = seed.text;
    item.verdict = VerdictKind::Subtype;
    report.items.push_back(std::move(item));
    report.subtype++;
  }
  for (const auto& q : file.renamed.queries) {
    ItemReport item;
    item.kind = "check";
    item.goal = q.text;
    auto start = std::chrono::steady_clock::now();
    item.detail = checker.check({}, q.lhs, q.rhs, Variance::Plus);
    auto stop = std::chrono::steady_clock::now();
    item.millis =
        std::chrono::duration<double, std::milli>(stop - start).count();
    item.verdict = item.detail.kind;
    item.depth_used = checker.stats().max_expd_depth;
    item.seeds_used = checker.stats().seeds_used.size();
    switch (item.verdict) {
      case VerdictKind::Subtype: report.subtype++; break;
      case VerdictKind::NotSubtype: report.not_subtype++; break;
      case VerdictKind::Unknown: report.unknown++; break;
    }
    report.items.push_back(std::move(item));
  }
  return report;
}

inline Json report_json(const RunReport& report) {
  Json j;
  j["file"] = report.file;
  j["ok"] = report.loaded;
  j["errors"] = report.errors;
  Json items = Json::array();
  for (const auto& item : report.items) {
    Json r;
    r["kind"] = item.kind;
    r["goal"] = item.goal;
    r["verdict"] = verdict_name(item.verdict);
    r["depth_used"] = item.depth_used;
    r["seeds_used"] = item.seeds_used;
    items.push_back(std::move(r));
  }
  j["items"] = std::move(items);
  j["summary"] = {{"subtype", report.subtype},
                  {"not_subtype", report.not_subtype},
                  {"unknown", report.unknown}};
  return j;
}

// --- check / validate commands --------------------------------------------

struct CommandFlags {
  bool json = false;
  bool trace = false;
};

inline int cmd_check(const std::string& path, const CheckOptions& opts,
                     const CommandFlags& flags, std::ostream& os) {
  LoadedFile file = load_program_file(path, opts);
  RunReport report = run_checks(file, opts);
  if (flags.json) {
    os << report_json(report).dump(2) << "\n";
  } else {
    for (const auto& e : report.errors) os << "error: " << e << "\n";
    for (const auto& item : report.items) {
      os << item.kind << "  " << item.goal << " : "
         << verdict_name(item.verdict);
      if (item.kind == "check") {
        os << " (depth " << item.depth_used << ", " << item.seeds_used
           << " seed" << (item.seeds_used == 1 ? "" : "s") << ", "
           << item.millis << " ms)";
        if (item.verdict == VerdictKind::NotSubtype &&
            !item.detail.failure_path.empty())
          os << "\n  at: " << item.detail.failure_path.back()
             << "\n  reason: " << item.detail.reason;
        if (item.verdict == VerdictKind::Unknown)
          os << "\n  " << item.detail.reason << " at " << item.detail.frontier;
      }
      os << "\n";
      if (flags.trace && item.kind == "check") render_trace(item.detail.trace, os, 1);
    }
    os << report.subtype << " subtype, " << report.not_subtype
       << " not-subtype, " << report.unknown << " unknown\n";
  }
  return report.exit_code();
}

inline int cmd_validate(const std::string& path, const CheckOptions& opts,
                        const CommandFlags& flags, std::ostream& os) {
  LoadedFile file = load_program_file(path, opts);
  std::set<std::string> original_names;
  for (const auto& item : file.program.items)
    if (item.kind == Item::Kind::TypeDef) original_names.insert(item.name);

  auto render_def = [](const TypeDefinition& def) {
    std::string line = def.name;
    for (const auto& p : def.params)
      line += "[" + p.name + " # " + variance_symbol(p.variance) + "]";
    return line;
  };

  if (flags.json) {
    Json j;
    j["file"] = path;
    j["ok"] = file.ok();
    j["errors"] = file.errors;
    Json defs = Json::array();
    if (file.ok()) {
      for (const auto& def : file.renamed.sig.definitions()) {
        if (!original_names.count(def.name)) continue;
        Json d;
        d["name"] = def.name;
        Json params = Json::array();
        for (const auto& p : def.params)
          params.push_back({{"name", p.name}, {"variance", variance_name(p.variance)}});
        d["params"] = std::move(params);
        defs.push_back(std::move(d));
      }
    }
    j["definitions"] = std::move(defs);
    Json seeds = Json::array();
    for (const auto& f : file.seed_failures)
      seeds.push_back({{"declaration", f.declaration}, {"valid", false}});
    if (file.ok())
      for (const auto& s : file.renamed.seeds)
        seeds.push_back({{"declaration", s.text}, {"valid", true}});
    j["eqtypes"] = std::move(seeds);
    os << j.dump(2) << "\n";
  } else {
    for (const auto& e : file.errors) os << "error: " << e << "\n";
    for (const auto& f : file.seed_failures)
      os << "error: invalid eqtype declaration: " << f.declaration << "\n";
    if (file.ok()) {
      for (const auto& def : file.renamed.sig.definitions())
        if (original_names.count(def.name)) os << render_def(def) << "\n";
      for (const auto& s : file.renamed.seeds)
        os << "eqtype " << s.text << " : valid\n";
      os << "ok\n";
    }
  }
  return file.ok() ? 0 : 3;
}

// --- bpa commands -----------------------------------------------------------

inline Program program_from_signature(const Signature& sig,
                                      const std::vector<std::pair<TypeRef, TypeRef>>& checks) {
  Program prog;
  for (const auto& def : sig.definitions()) {
    Item item;
    item.kind = Item::Kind::TypeDef;
    item.name = def.name;
    for (const auto& p : def.params) item.params.push_back(p.name);
    item.body = def.body;
    prog.items.push_back(std::move(item));
  }
  for (const auto& [lhs, rhs] : checks) {
    Item item;
    item.kind = Item::Kind::Check;
    item.lhs = lhs;
    item.rhs = rhs;
    prog.items.push_back(std::move(item));
  }
  return prog;
}

inline std::string render_surface_signature(const Signature& sig) {
  std::string out;
  for (const auto& def : sig.definitions()) {
    out += "type " + def.name;
    for (const auto& p : def.params) out += "[" + p.name + "]";
    out += " = " + format_type(def.body) + "\n";
  }
  return out;
}

inline int cmd_bpa_translate(const std::string& path, const std::string& root,
                             const std::string& check_lhs,
                             const std::string& check_rhs, std::ostream& os,
                             std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "error: cannot open " << path << "\n";
    return 3;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    BpaSystem sys = parse_bpa(buf.str());
    if (!root.empty()) {
      if (!sys.defines(root)) throw BpaError("parse", "root '" + root + "' is not defined");
      sys.root = root;
    }
    BpaTranslation tr = translate(sys);
    os << render_surface_signature(tr.sig);
    if (!check_lhs.empty() && !check_rhs.empty()) {
      if (!sys.defines(check_lhs) || !sys.defines(check_rhs))
        throw BpaError("parse", "check pair must name defined processes");
      os << "check " << check_lhs << "[1] <= " << check_rhs << "[1]\n";
    }
    return 0;
  } catch (const BpaError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

inline int cmd_bpa_include(const std::string& path, const std::string& lhs,
                           const std::string& rhs, int bound, std::ostream& os,
                           std::ostream& err) {
  std::ifstream in(path);
  if (!in) {
    err << "error: cannot open " << path << "\n";
    return 3;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    BpaSystem sys = parse_bpa(buf.str());
    InclusionResult result = bounded_inclusion(sys, lhs, rhs, bound);
    if (result.included) {
      os << "included (bound " << bound << ")\n";
      return 0;
    }
    os << "witness " << word_text(result.witness) << "\n";
    return 1;
  } catch (const BpaError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

inline int cmd_bpa_gen(uint64_t seed, int vars, int branches, int seqlen,
                       std::ostream& os, std::ostream& err) {
  try {
    BpaSystem sys = gen_random(seed, vars, branches, seqlen);
    os << "% generated system, seed " << seed << "\n";
    os << format_bpa_system(sys);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

// --- fuzz campaign ----------------------------------------------------------

struct FuzzCase {
  std::string description;
  VerdictKind algorithm;
  bool inclusion_included = false;
  Word inclusion_witness;
  SimKind oracle;
  bool violation = false;
};

struct FuzzReport {
  std::vector<FuzzCase> cases;
  int violations = 0;
  int subtype_verdicts = 0;
};

namespace detail {

inline BpaRef rename_bpa_vars(const BpaRef& e, const std::string& from_prefix,
                              const std::string& to_prefix) {
  switch (e->tag) {
    case BpaTag::Action:
    case BpaTag::Epsilon:
      return e;
    case BpaTag::Var:
      if (e->name.rfind(from_prefix, 0) == 0)
        return b_var(to_prefix + e->name.substr(from_prefix.size()));
      return e;
    case BpaTag::Choice:
      return b_choice(rename_bpa_vars(e->left, from_prefix, to_prefix),
                      rename_bpa_vars(e->right, from_prefix, to_prefix));
    case BpaTag::Seq:
      return b_seq(rename_bpa_vars(e->left, from_prefix, to_prefix),
                   rename_bpa_vars(e->right, from_prefix, to_prefix));
  }
  return e;
}

// Copy of `base` under a new prefix, optionally with extra branches spliced
// in: the result accepts a superset of the base language.
inline BpaSystem augment_system(const BpaSystem& base, const std::string& from,
                                const std::string& to, uint64_t salt,
                                bool add_extras) {
  uint64_t state = salt * 0x9e3779b97f4a7c15ULL + 1;
  auto next = [&]() {
    state ^= state >> 30;
    state *= 0xbf58476d1ce4e5b9ULL;
    state ^= state >> 27;
    return state;
  };
  BpaSystem out;
  for (const auto& [name, body] : base.equations()) {
    BpaRef renamed = rename_bpa_vars(body, from, to);
    if (add_extras && next() % 2 == 0) {
      std::set<std::string> guards;
      for (const auto& [a, _] : bpa_step(base, body)) guards.insert(a);
      int esc = 0;
      while (guards.count(std::string(1, static_cast<char>('a' + esc)))) esc++;
      renamed = b_choice(renamed,
                         b_action(std::string(1, static_cast<char>('a' + esc))));
    }
    out.add_equation(to + name.substr(from.size()), renamed);
  }
  out.root = to + base.root.substr(from.size());
  return out;
}

inline BpaSystem merge_systems(const BpaSystem& a, const BpaSystem& b) {
  BpaSystem out;
  for (const auto& [name, body] : a.equations()) out.add_equation(name, body);
  for (const auto& [name, body] : b.equations()) out.add_equation(name, body);
  out.root = a.root;
  return out;
}

}  // namespace detail

// Seeded campaign comparing check_subtype against both oracles on random
// BPA pairs. A violation means the algorithm claimed Subtype while an
// oracle refuted the pair.
inline FuzzReport fuzz_bpa(int n, uint64_t seed, int inclusion_bound,
                           int vars = 4, int branches = 3, int seqlen = 3,
                           int sim_bound = 12, long sim_node_cap = 100000,
                           CheckOptions opts = {}) {
  FuzzReport report;
  opts.build_trace = false;
  for (int i = 0; i < n; i++) {
    uint64_t base = seed + static_cast<uint64_t>(i) * 2654435761u;
    BpaSystem p = gen_random(base, vars, branches, seqlen, "P");
    BpaSystem q;
    std::string kind;
    switch (i % 4) {
      case 0:
      case 1:
        q = gen_random(base + 1, vars, branches, seqlen, "Q");
        kind = "independent";
        break;
      case 2:
        q = detail::augment_system(p, "P", "Q", base, true);
        kind = "augmented";
        break;
      default:
        q = detail::augment_system(p, "P", "Q", base, false);  // plain copy
        kind = "copy";
        break;
    }
    BpaSystem merged = detail::merge_systems(p, q);
    BpaTranslation tr = translate(merged);

    Program prog = program_from_signature(
        tr.sig, {{t_named(p.root, {t_one()}), t_named(q.root, {t_one()})}});
    RenamedProgram renamed = internal_rename(prog);

    FuzzCase fc;
    fc.description = kind + " pair, seed " + std::to_string(base);
    if (!renamed.ok()) {
      fc.description += " (rename failed)";
      fc.violation = true;  // generator postconditions guarantee this works
      report.violations++;
      report.cases.push_back(std::move(fc));
      continue;
    }

    auto outcome = check_subtype(renamed.sig, {}, {}, renamed.queries[0].lhs,
                                 renamed.queries[0].rhs, Variance::Plus, opts);
    fc.algorithm = outcome.verdict.kind;
    if (fc.algorithm == VerdictKind::Subtype) report.subtype_verdicts++;

    InclusionResult incl = bounded_inclusion(merged, p.root, q.root,
                                             inclusion_bound);
    fc.inclusion_included = incl.included;
    fc.inclusion_witness = incl.witness;

    SimResult sim = bounded_sim(renamed.sig, renamed.queries[0].lhs,
                                renamed.queries[0].rhs, sim_bound, sim_node_cap);
    fc.oracle = sim.kind;

    if (fc.algorithm == VerdictKind::Subtype &&
        (!incl.included || sim.refuted())) {
      fc.violation = true;
      report.violations++;
    }
    report.cases.push_back(std::move(fc));
  }
  return report;
}

inline int cmd_bpa_fuzz(int n, uint64_t seed, int bound, std::ostream& os) {
  FuzzReport report = fuzz_bpa(n, seed, bound);
  for (const auto& fc : report.cases)
    if (fc.violation) os << "VIOLATION: " << fc.description << "\n";
  os << report.violations << " violations in " << n << " cases ("
     << report.subtype_verdicts << " subtype verdicts)\n";
  return report.violations == 0 ? 0 : 1;
}

}  // namespace nestsub
