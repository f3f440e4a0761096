#include "rcr/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rcr/errors.hpp"
#include "rcr/shattering.hpp"

namespace rcr {

double recovery_score(const Equivalence& eq, double pr_original, double pr_clone, double eps) {
  return static_cast<double>(eq.n_prime) *
         kld3(pr_original, pr_clone, sigmoid(eq.w + eq.w_prime), eps);
}

std::string audit_jsonl(const std::vector<AuditEntry>& audit) {
  std::string out;
  for (const AuditEntry& e : audit) {
    out += "{\"step\": " + std::to_string(e.step) +
           ", \"recovered_eq\": " + std::to_string(e.recovered_eq) + ", \"equivalence\": \"" +
           e.description + "\", \"score\": " + format_double(e.score) +
           ", \"converged\": " + (e.converged ? "true" : "false") +
           ", \"iters\": " + std::to_string(e.iters) + ", \"ground_equivs_recovered_cum\": " +
           std::to_string(e.ground_equivs_recovered_cum) + "}\n";
  }
  return out;
}

namespace {

struct Candidate {
  int eq_id;
  double score;
  long n_prime;
};

}  // namespace

RcrResult run_rcr(const ModelPtr& model, const RcrOptions& opts) {
  RcrResult result;
  GroundModel source_gm = ground(model, opts.ground_limits);

  RelaxedModel rm = clone_all(model);
  std::vector<ConstId> K = constants_of(*model);
  rm = opts.mode == RcrMode::kLifted ? partition_all(rm, K) : ground_partition_all(rm);

  for (const Equivalence& eq : rm.equivalences) result.total_ground_equivalences += eq.n_prime;

  auto recovered_ground = [&rm]() {
    long total = 0;
    for (const Equivalence& eq : rm.equivalences)
      if (eq.status == Equivalence::Status::kRecovered) total += eq.n_prime;
    return total;
  };
  auto recovered_cells = [&rm]() {
    long total = 0;
    for (const Equivalence& eq : rm.equivalences)
      if (eq.status == Equivalence::Status::kRecovered) ++total;
    return total;
  };
  auto budget_reached = [&]() {
    if (opts.policy.count) return recovered_cells() >= *opts.policy.count;
    if (opts.policy.fraction) {
      double target = *opts.policy.fraction * static_cast<double>(result.total_ground_equivalences);
      return static_cast<double>(recovered_ground()) >= target - 1e-9;
    }
    return true;
  };

  // every accepted engine must also be able to answer the final marginal
  // queries, so the last committed state always yields a usable result
  std::vector<double> marginals;
  auto run_engine = [&source_gm, &opts](CompensationEngine& eng, int iter_offset,
                                        std::vector<double>* out_marginals) {
    CompensationTrace t = eng.run(opts.params, iter_offset);
    out_marginals->clear();
    out_marginals->reserve(source_gm.atoms.size());
    for (const Atom& atom : source_gm.atoms) out_marginals->push_back(eng.marginal_of(atom));
    return t;
  };

  auto engine = std::make_unique<CompensationEngine>(rm, opts.limits, opts.merge_recovered);
  CompensationTrace run_trace = run_engine(*engine, 0, &marginals);
  result.converged = run_trace.converged;
  result.iterations = run_trace.iterations;
  int iter_total = run_trace.iterations;
  result.trace.rows = std::move(run_trace.rows);
  rm = engine->snapshot();

  int step_no = 0;
  while (!budget_reached()) {
    // rank the relaxed cells by residual score at the latest weights
    std::vector<Candidate> candidates;
    for (const Equivalence& eq : rm.equivalences) {
      if (eq.status != Equivalence::Status::kRelaxed) continue;
      double s;
      if (opts.accumulated_residual_scores) {
        s = static_cast<double>(eq.n_prime) * engine->accumulated_residual(eq.id);
      } else {
        auto [pr_orig, pr_clone] = engine->representative_pair(eq.id);
        s = recovery_score(eq, pr_orig, pr_clone, opts.params.clamp_eps);
      }
      candidates.push_back(Candidate{eq.id, s, eq.n_prime});
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.eq_id < b.eq_id;
    });

    long want = static_cast<long>(opts.policy.batch_k);
    if (opts.policy.count) want = std::min(want, *opts.policy.count - recovered_cells());
    want = std::min(want, static_cast<long>(candidates.size()));
    if (want <= 0) break;

    ++step_no;
    RelaxedModel next_rm = rm;
    std::vector<AuditEntry> step_audit;
    long cum = recovered_ground();
    for (long i = 0; i < want; ++i) {
      const Candidate& c = candidates[i];
      next_rm = recover(next_rm, c.eq_id);
      cum += c.n_prime;
      AuditEntry entry;
      entry.step = step_no;
      entry.recovered_eq = c.eq_id;
      entry.description = to_string(*rm.base, rm.equivalence(c.eq_id));
      entry.score = c.score;
      entry.converged = result.converged;
      entry.iters = result.iterations;
      entry.ground_equivs_recovered_cum = cum;
      step_audit.push_back(std::move(entry));
    }

    try {
      auto next_engine = std::make_unique<CompensationEngine>(next_rm, opts.limits,
                                                              opts.merge_recovered);
      std::vector<double> next_marginals;
      CompensationTrace t = run_engine(*next_engine, iter_total, &next_marginals);
      engine = std::move(next_engine);
      marginals = std::move(next_marginals);
      rm = engine->snapshot();
      result.converged = t.converged;
      result.iterations = t.iterations;
      iter_total += t.iterations;
      result.trace.rows.insert(result.trace.rows.end(), t.rows.begin(), t.rows.end());
      result.audit.insert(result.audit.end(), step_audit.begin(), step_audit.end());
    } catch (const CapacityError& err) {
      // recovery made exact inference too expensive; keep the previous model
      result.truncated = true;
      result.truncation_reason = err.what();
      break;
    }

    if (opts.debug_equiprobability) {
      for (const Equivalence& eq : rm.equivalences) {
        if (eq.status != Equivalence::Status::kRelaxed) continue;
        EquiprobabilityReport report =
            check_strong_equiprobability(rm, eq.id, 3, opts.seed, opts.limits);
        if (report.worst_spread() > 1e-9)
          result.warnings.push_back("equivalence " + std::to_string(eq.id) +
                                    " lost strong equiprobability after recovery step " +
                                    std::to_string(step_no) + " (spread " +
                                    format_double(report.worst_spread()) + ")");
      }
    }
  }

  result.recovered_ground_equivalences = recovered_ground();
  result.recovered_cells = recovered_cells();
  result.trace.converged = result.converged;
  result.trace.iterations = iter_total;

  result.marginals.reserve(source_gm.atoms.size());
  for (size_t i = 0; i < source_gm.atoms.size(); ++i) {
    AtomMarginal am;
    am.atom = source_gm.atoms[i];
    am.name = to_string(*model, am.atom);
    am.prob = marginals[i];
    result.marginals.push_back(std::move(am));
  }
  return result;
}

}  // namespace rcr
