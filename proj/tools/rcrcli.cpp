#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcr.h"

namespace {

int exit_code_of(rcr_status status) {
  switch (status) {
    case RCR_OK: return 0;
    case RCR_ERR_PARSE: return 2;
    case RCR_ERR_CAPACITY: return 3;
    default: return 1;
  }
}

int fail(rcr_status status) {
  std::cerr << "error: " << rcr_last_error() << "\n";
  return exit_code_of(status);
}

struct ModelHandle {
  rcr_model* model = nullptr;
  ~ModelHandle() { rcr_model_free(model); }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { rcr_string_free(s); }
};

rcr_status load_model(const std::string& path, const std::string& gen, int size,
                      ModelHandle& handle) {
  if (!gen.empty()) return rcr_model_generate(gen.c_str(), size, &handle.model);
  return rcr_model_parse_file(path.c_str(), &handle.model);
}

bool write_output(const std::string& path, const char* content) {
  if (path.empty()) {
    std::cout << content;
    return true;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return false;
  }
  out << content;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relax-compensate-recover inference for Markov logic networks"};
  app.require_subcommand(1);

  std::string model_path, gen_name, out_path, trace_path, audit_path, engine = "ve";
  std::string mode = "lifted", schedule = "seq";
  int gen_size = 2;
  bool dump = false, strict = false;

  rcr_run_options opts;
  rcr_run_options_init(&opts);
  double recover_frac = -1.0;
  long recover_count = -1;
  std::vector<double> grid;

  auto add_model_arg = [&](CLI::App* cmd, bool allow_gen) {
    auto* positional = cmd->add_option("model", model_path, "model file in MLN text format");
    if (allow_gen) {
      cmd->add_option("--gen", gen_name, "generate a built-in model instead of reading a file")
          ->check(CLI::IsMember({"smokers", "smokers_drinkers", "symmetric_smokers"}));
      cmd->add_option("--size", gen_size, "domain size for --gen")->check(CLI::PositiveNumber);
    } else {
      positional->required();
    }
  };
  auto add_comp_args = [&](CLI::App* cmd) {
    cmd->add_option("--damping", opts.damping, "damping factor in (0,1]")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("--tol", opts.tol, "convergence tolerance on weight deltas");
    cmd->add_option("--max-iters", opts.max_iters, "compensation iteration cap");
    cmd->add_option("--schedule", schedule, "update schedule")
        ->check(CLI::IsMember({"seq", "sim"}));
    cmd->add_option("--seed", opts.seed, "rng seed for reproducible runs");
    cmd->add_option("--batch-k", opts.batch_k, "cells recovered per outer step");
  };

  auto* ground_cmd = app.add_subcommand("ground", "ground a model and report its size");
  add_model_arg(ground_cmd, false);
  ground_cmd->add_flag("--dump", dump, "print the full ground model");

  auto* exact_cmd = app.add_subcommand("exact", "exact marginals and log partition function");
  add_model_arg(exact_cmd, false);
  exact_cmd->add_option("--engine", engine, "inference engine")
      ->check(CLI::IsMember({"ve", "brute"}));

  auto* shatter_cmd =
      app.add_subcommand("shatter", "preemptive-shattering cells and counts per equivalence");
  add_model_arg(shatter_cmd, false);

  auto* rcr_cmd = app.add_subcommand("rcr", "relax, compensate, and recover");
  add_model_arg(rcr_cmd, true);
  rcr_cmd->add_option("--mode", mode, "ground or lifted")
      ->check(CLI::IsMember({"ground", "lifted"}));
  auto* frac_opt =
      rcr_cmd->add_option("--recover-frac", recover_frac, "fraction of ground equivalences")
          ->check(CLI::Range(0.0, 1.0));
  rcr_cmd->add_option("--recover-count", recover_count, "number of first-order cells")
      ->excludes(frac_opt);
  add_comp_args(rcr_cmd);
  rcr_cmd->add_option("--out", out_path, "write marginals JSON here (default stdout)");
  rcr_cmd->add_option("--trace", trace_path, "write the compensation trace CSV here");
  rcr_cmd->add_option("--audit", audit_path, "write the recovery audit log (JSON lines) here");
  rcr_cmd->add_flag("--strict", strict, "exit with code 4 when compensation does not converge");

  auto* eval_cmd = app.add_subcommand("eval", "sweep recovery levels and emit CSV");
  add_model_arg(eval_cmd, true);
  eval_cmd->add_option("--grid", grid, "recovery fractions, e.g. 0,0.25,0.5,0.75,1")
      ->delimiter(',')
      ->required();
  eval_cmd->add_option("--mode", mode, "ground or lifted")
      ->check(CLI::IsMember({"ground", "lifted"}));
  add_comp_args(eval_cmd);
  eval_cmd->add_option("--out", out_path, "write the sweep CSV here (default stdout)");

  CLI11_PARSE(app, argc, argv);

  opts.lifted = mode == "lifted" ? 1 : 0;
  opts.sequential = schedule == "seq" ? 1 : 0;
  opts.recover_fraction = recover_frac;
  opts.recover_count = recover_count;

  ModelHandle model;
  if (app.got_subcommand(ground_cmd) || app.got_subcommand(exact_cmd) ||
      app.got_subcommand(shatter_cmd) || app.got_subcommand(rcr_cmd) ||
      app.got_subcommand(eval_cmd)) {
    if (model_path.empty() && gen_name.empty()) {
      std::cerr << "error: provide a model file or --gen\n";
      return 1;
    }
    rcr_status status = load_model(model_path, gen_name, gen_size, model);
    if (status != RCR_OK) return fail(status);
  }

  if (app.got_subcommand(ground_cmd)) {
    OwnedString text;
    rcr_status status =
        dump ? rcr_ground_text(model.model, &text.s) : rcr_ground_summary(model.model, &text.s);
    if (status != RCR_OK) return fail(status);
    std::cout << text.s;
    if (!dump) std::cout << "\n";
    return 0;
  }

  if (app.got_subcommand(exact_cmd)) {
    OwnedString json;
    rcr_status status = rcr_exact_json(model.model, engine.c_str(), &json.s);
    if (status != RCR_OK) return fail(status);
    std::cout << json.s << "\n";
    return 0;
  }

  if (app.got_subcommand(shatter_cmd)) {
    OwnedString json;
    rcr_status status = rcr_shatter_json(model.model, &json.s);
    if (status != RCR_OK) return fail(status);
    std::cout << json.s << "\n";
    return 0;
  }

  if (app.got_subcommand(rcr_cmd)) {
    OwnedString marginals, audit, trace;
    int converged = 0;
    rcr_status status = rcr_run(model.model, &opts, &marginals.s, &audit.s, &trace.s, &converged);
    if (status != RCR_OK) return fail(status);
    if (!write_output(out_path, marginals.s)) return 1;
    if (out_path.empty()) std::cout << "\n";
    if (!trace_path.empty() && !write_output(trace_path, trace.s)) return 1;
    if (!audit_path.empty() && !write_output(audit_path, audit.s)) return 1;
    if (strict && !converged) return 4;
    return 0;
  }

  if (app.got_subcommand(eval_cmd)) {
    OwnedString csv;
    std::string name = gen_name.empty() ? model_path : gen_name;
    rcr_status status =
        rcr_eval_sweep(model.model, name.c_str(), &opts, grid.data(), grid.size(), &csv.s);
    if (status != RCR_OK) return fail(status);
    if (!write_output(out_path, csv.s)) return 1;
    return 0;
  }

  return 0;
}
