#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nestsub/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Subtyping checker for nested polymorphic session types"};
  app.require_subcommand(1);

  nestsub::CheckOptions base_opts = nestsub::default_check_options();

  // check
  auto* check = app.add_subcommand("check", "run the subtype queries in a file");
  std::string check_file;
  int check_depth = base_opts.depth;
  bool check_trace = false, check_json = false;
  check->add_option("file", check_file, "input file")->required();
  check->add_option("--depth", check_depth, "expansion budget per derivation path");
  check->add_flag("--trace", check_trace, "print the rule-application tree");
  check->add_flag("--json", check_json, "machine-readable report");

  // validate
  auto* validate = app.add_subcommand("validate", "validate definitions and print variances");
  std::string validate_file;
  bool validate_json = false;
  validate->add_option("file", validate_file, "input file")->required();
  validate->add_flag("--json", validate_json, "machine-readable report");

  // bpa
  auto* bpa = app.add_subcommand("bpa", "basic process algebra tooling");
  bpa->require_subcommand(1);

  auto* translate = bpa->add_subcommand("translate", "translate a .bpa system to type definitions");
  std::string tr_file, tr_root, tr_lhs, tr_rhs;
  translate->add_option("file", tr_file, ".bpa input")->required();
  translate->add_option("--root", tr_root, "override the root variable");
  auto* tr_check = translate->add_option("--check", "emit a check line for two roots");
  tr_check->expected(2);

  auto* include = bpa->add_subcommand("include", "bounded language inclusion of two roots");
  std::string inc_file, inc_lhs, inc_rhs;
  int inc_bound = 10;
  include->add_option("file", inc_file, ".bpa input")->required();
  include->add_option("lhs", inc_lhs, "left root")->required();
  include->add_option("rhs", inc_rhs, "right root")->required();
  include->add_option("--bound", inc_bound, "word-length bound");

  auto* gen = bpa->add_subcommand("gen", "emit a random normed deterministic system");
  uint64_t gen_seed = 1;
  int gen_vars = 4, gen_branches = 3, gen_seqlen = 3;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--vars", gen_vars, "number of process variables");
  gen->add_option("--branches", gen_branches, "maximum branches per equation");
  gen->add_option("--seqlen", gen_seqlen, "maximum sequence tail length");

  auto* fuzz = bpa->add_subcommand("fuzz", "soundness campaign on random pairs");
  int fuzz_n = 100;
  uint64_t fuzz_seed = 1;
  int fuzz_bound = 10;
  fuzz->add_option("--n", fuzz_n, "number of pairs");
  fuzz->add_option("--seed", fuzz_seed, "campaign seed");
  fuzz->add_option("--bound", fuzz_bound, "inclusion bound");

  CLI11_PARSE(app, argc, argv);

  if (*check) {
    nestsub::CheckOptions opts = base_opts;
    opts.depth = check_depth;
    nestsub::CommandFlags flags;
    flags.trace = check_trace;
    flags.json = check_json;
    return nestsub::cmd_check(check_file, opts, flags, std::cout);
  }
  if (*validate) {
    nestsub::CommandFlags flags;
    flags.json = validate_json;
    return nestsub::cmd_validate(validate_file, base_opts, flags, std::cout);
  }
  if (*translate) {
    if (tr_check->count()) {
      auto pair = tr_check->results();
      tr_lhs = pair[0];
      tr_rhs = pair[1];
    }
    return nestsub::cmd_bpa_translate(tr_file, tr_root, tr_lhs, tr_rhs,
                                      std::cout, std::cerr);
  }
  if (*include)
    return nestsub::cmd_bpa_include(inc_file, inc_lhs, inc_rhs, inc_bound,
                                    std::cout, std::cerr);
  if (*gen)
    return nestsub::cmd_bpa_gen(gen_seed, gen_vars, gen_branches, gen_seqlen,
                                std::cout, std::cerr);
  if (*fuzz) return nestsub::cmd_bpa_fuzz(fuzz_n, fuzz_seed, fuzz_bound, std::cout);
  return 0;
}
