#include "rcr.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rcr/errors.hpp"
#include "rcr/eval.hpp"
#include "rcr/parser.hpp"
#include "rcr/shattering.hpp"

using nlohmann::ordered_json;

struct rcr_model {
  rcr::ModelPtr ptr;
};

namespace {

thread_local std::string g_last_error;

rcr_status status_of(const rcr::Error& err) {
  switch (err.code()) {
    case rcr::ErrorCode::kParse: return RCR_ERR_PARSE;
    case rcr::ErrorCode::kCapacity: return RCR_ERR_CAPACITY;
    case rcr::ErrorCode::kNotCountNormalized: return RCR_ERR_NOT_COUNT_NORMALIZED;
    case rcr::ErrorCode::kNoFeasibleWorld: return RCR_ERR_NO_FEASIBLE_WORLD;
    case rcr::ErrorCode::kInvalidArgument: return RCR_ERR_INVALID_ARGUMENT;
    case rcr::ErrorCode::kInference: return RCR_ERR_INFERENCE;
  }
  return RCR_ERR_UNKNOWN;
}

template <typename Fn>
rcr_status guarded(Fn&& fn) {
  try {
    fn();
    return RCR_OK;
  } catch (const rcr::Error& err) {
    g_last_error = err.what();
    return status_of(err);
  } catch (const std::exception& err) {
    g_last_error = err.what();
    return RCR_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return RCR_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rcr_status require(bool ok, const char* message) {
  if (ok) return RCR_OK;
  g_last_error = message;
  return RCR_ERR_INVALID_ARGUMENT;
}

rcr::RcrOptions to_options(const rcr_run_options* opts) {
  rcr::RcrOptions out;
  if (!opts) return out;
  out.mode = opts->lifted ? rcr::RcrMode::kLifted : rcr::RcrMode::kGround;
  if (opts->recover_fraction >= 0.0) out.policy.fraction = opts->recover_fraction;
  if (opts->recover_count >= 0) out.policy.count = opts->recover_count;
  out.policy.batch_k = opts->batch_k > 0 ? opts->batch_k : 1;
  out.params.damping = opts->damping;
  out.params.tol = opts->tol;
  out.params.max_iters = static_cast<int>(opts->max_iters);
  out.params.schedule =
      opts->sequential ? rcr::Schedule::kSequential : rcr::Schedule::kSimultaneous;
  out.seed = opts->seed;
  return out;
}

ordered_json marginals_to_json(const std::vector<rcr::AtomMarginal>& marginals) {
  ordered_json obj = ordered_json::object();
  for (const rcr::AtomMarginal& am : marginals) obj[am.name] = am.prob;
  return obj;
}

}  // namespace

extern "C" {

const char* rcr_last_error(void) { return g_last_error.c_str(); }

void rcr_string_free(char* s) { std::free(s); }

rcr_status rcr_model_parse(const char* text, rcr_model** out) {
  rcr_status bad = require(text && out, "text and out must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    auto model = std::make_shared<rcr::Model>(rcr::parse_model(text));
    *out = new rcr_model{std::move(model)};
  });
}

rcr_status rcr_model_parse_file(const char* path, rcr_model** out) {
  rcr_status bad = require(path && out, "path and out must be non-NULL");
  if (bad != RCR_OK) return bad;
  std::ifstream in(path);
  if (!in) {
    g_last_error = std::string("cannot open '") + path + "'";
    return RCR_ERR_IO;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return rcr_model_parse(buffer.str().c_str(), out);
}

rcr_status rcr_model_generate(const char* name, int size, rcr_model** out) {
  rcr_status bad = require(name && out, "name and out must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    auto model = std::make_shared<rcr::Model>(rcr::generate_model(name, size));
    *out = new rcr_model{std::move(model)};
  });
}

void rcr_model_free(rcr_model* model) { delete model; }

rcr_status rcr_model_print(const rcr_model* model, char** out_text) {
  rcr_status bad = require(model && out_text, "model and out_text must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] { *out_text = dup_string(rcr::to_text(*model->ptr)); });
}

rcr_status rcr_ground_summary(const rcr_model* model, char** out_json) {
  rcr_status bad = require(model && out_json, "model and out_json must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    rcr::GroundModel gm = rcr::ground(model->ptr);
    ordered_json obj;
    obj["atoms"] = gm.atoms.size();
    obj["formulas"] = gm.formulas.size();
    obj["disconnected"] = rcr::verify_disconnected(gm);
    *out_json = dup_string(obj.dump(2));
  });
}

rcr_status rcr_ground_text(const rcr_model* model, char** out_text) {
  rcr_status bad = require(model && out_text, "model and out_text must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    rcr::GroundModel gm = rcr::ground(model->ptr);
    const rcr::Model& m = *model->ptr;
    std::string text;
    for (const rcr::GroundFormula& g : gm.formulas) {
      text += g.weight.hard ? "hard" : rcr::format_double(g.weight.value);
      text += "  ";
      std::vector<rcr::Atom> atoms;
      atoms.reserve(g.atom_ids.size());
      for (int id : g.atom_ids) atoms.push_back(gm.atoms[id]);
      text += rcr::to_string(m, g.body, atoms);
      text += "\n";
    }
    *out_text = dup_string(text);
  });
}

rcr_status rcr_exact_json(const rcr_model* model, const char* engine, char** out_json) {
  rcr_status bad = require(model && out_json, "model and out_json must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    std::string which = engine ? engine : "ve";
    rcr::GroundModel gm = rcr::ground(model->ptr);
    rcr::MarginalTable table;
    if (which == "brute") {
      table = rcr::brute_force(gm);
    } else if (which == "ve") {
      rcr::FactorGraph fg = rcr::FactorGraph::from_ground(gm);
      table = rcr::ve_all_marginals(fg);
    } else {
      throw rcr::Error(rcr::ErrorCode::kInvalidArgument,
                       "unknown engine '" + which + "' (expected 've' or 'brute')");
    }
    ordered_json obj;
    obj["logZ"] = table.logZ;
    ordered_json marg = ordered_json::object();
    for (size_t i = 0; i < gm.atoms.size(); ++i) marg[gm.atom_name(static_cast<int>(i))] = table.prob[i];
    obj["marginals"] = std::move(marg);
    *out_json = dup_string(obj.dump(2));
  });
}

rcr_status rcr_shatter_json(const rcr_model* model, char** out_json) {
  rcr_status bad = require(model && out_json, "model and out_json must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    const rcr::Model& m = *model->ptr;
    rcr::RelaxedModel rm = rcr::clone_all(model->ptr);
    std::vector<rcr::ConstId> K = rcr::constants_of(m);

    ordered_json obj;
    ordered_json constants = ordered_json::array();
    for (rcr::ConstId k : K) constants.push_back(m.constants[k].name);
    obj["constants"] = std::move(constants);

    ordered_json eqs = ordered_json::array();
    for (const rcr::Equivalence& eq : rm.equivalences) {
      ordered_json entry;
      entry["id"] = eq.id;
      entry["original"] = rcr::to_string(*rm.base, eq.original);
      entry["clone"] = rcr::to_string(*rm.base, eq.clone);
      ordered_json cells = ordered_json::array();
      for (const rcr::Equivalence& cell : rcr::partition_equivalence(*rm.base, eq, K)) {
        ordered_json c;
        c["constraint"] = rcr::to_string(*rm.base, cell.constraint);
        c["n"] = cell.n;
        c["n_prime"] = cell.n_prime;
        c["count_normalized"] = true;  // partition cells always pass the check
        cells.push_back(std::move(c));
      }
      entry["cells"] = std::move(cells);
      eqs.push_back(std::move(entry));
    }
    obj["equivalences"] = std::move(eqs);
    *out_json = dup_string(obj.dump(2));
  });
}

void rcr_run_options_init(rcr_run_options* opts) {
  if (!opts) return;
  opts->lifted = 1;
  opts->recover_fraction = -1.0;
  opts->recover_count = -1;
  opts->batch_k = 1;
  opts->damping = 0.5;
  opts->tol = 1e-8;
  opts->max_iters = 1000;
  opts->sequential = 1;
  opts->seed = 0;
}

rcr_status rcr_run(const rcr_model* model, const rcr_run_options* opts, char** marginals_json,
                   char** audit_jsonl, char** trace_csv, int* out_converged) {
  rcr_status bad = require(model && marginals_json, "model and marginals_json must be non-NULL");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    rcr::RcrResult result = rcr::run_rcr(model->ptr, to_options(opts));

    ordered_json obj;
    obj["converged"] = result.converged;
    obj["marginals"] = marginals_to_json(result.marginals);
    ordered_json recovered;
    recovered["cells"] = result.recovered_cells;
    recovered["ground_equivalences"] = result.recovered_ground_equivalences;
    recovered["total_ground_equivalences"] = result.total_ground_equivalences;
    recovered["fraction"] =
        result.total_ground_equivalences == 0
            ? 1.0
            : static_cast<double>(result.recovered_ground_equivalences) /
                  static_cast<double>(result.total_ground_equivalences);
    recovered["truncated"] = result.truncated;
    if (result.truncated) recovered["truncation_reason"] = result.truncation_reason;
    obj["recovered"] = std::move(recovered);
    if (!result.warnings.empty()) obj["warnings"] = result.warnings;
    *marginals_json = dup_string(obj.dump(2));

    if (audit_jsonl) *audit_jsonl = dup_string(rcr::audit_jsonl(result.audit));
    if (trace_csv) *trace_csv = dup_string(rcr::trace_csv(result.trace));
    if (out_converged) *out_converged = result.converged ? 1 : 0;
  });
}

rcr_status rcr_eval_sweep(const rcr_model* model, const char* model_name,
                          const rcr_run_options* opts, const double* grid, size_t grid_len,
                          char** out_csv) {
  rcr_status bad =
      require(model && grid && grid_len > 0 && out_csv, "model, grid, and out_csv are required");
  if (bad != RCR_OK) return bad;
  return guarded([&] {
    std::vector<double> fractions(grid, grid + grid_len);
    std::vector<rcr::EvalRow> rows = rcr::sweep(
        model->ptr, model_name ? model_name : "model", fractions, to_options(opts));
    *out_csv = dup_string(rcr::sweep_csv(rows));
  });
}

}  // extern "C"
