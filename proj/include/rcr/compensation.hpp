#pragma once

#include "rcr/inference.hpp"
#include "rcr/relaxation.hpp"

namespace rcr {

enum class Schedule { kSequential, kSimultaneous };

struct CompensationParams {
  double damping = 0.5;  // in (0, 1]; 1 disables damping
  double tol = 1e-8;
  int max_iters = 1000;
  Schedule schedule = Schedule::kSequential;
  double clamp_eps = 1e-12;
};

/// log p - log (1-p) with p clamped into [eps, 1-eps].
double logit(double p, double eps = 1e-12);
double sigmoid(double x);

/// Symmetrized Bernoulli KL divergence KL(p||q) + KL(q||p), clamped.
double symmetric_kl(double p, double q, double eps = 1e-12);

/// Three-way symmetric KL divergence: the sum of the pairwise symmetrized
/// divergences of (p, q), (p, r), (q, r). Zero iff p = q = r.
double kld3(double p, double q, double r, double eps = 1e-12);

struct TraceRow {
  int iter = 0;
  int eq_id = 0;
  double w = 0.0;
  double w_prime = 0.0;
  double delta = 0.0;
  double residual = 0.0;
};

struct CompensationTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  int iterations = 0;
  double final_max_delta = 0.0;
};

std::string trace_csv(const CompensationTrace& trace);

/// Mutable compensation state over a relaxed model: the grounding is built
/// once, recovered equivalences become hard pairwise factors (or are merged
/// away when merge_recovered is set), and each relaxed equivalence owns a pair
/// of per-ground-equivalence weights realized as unit factors. An original
/// grounding that appears in n'/n ground equivalences of a cell accumulates
/// (n'/n) * w from it.
class CompensationEngine {
 public:
  CompensationEngine(const RelaxedModel& rm, const InferenceLimits& limits = {},
                     bool merge_recovered = true);

  const std::vector<int>& relaxed_ids() const { return relaxed_ids_; }

  std::pair<double, double> weights_of(int eq_id) const;
  void set_weights(int eq_id, double w, double w_prime);

  /// Exact marginals of the equivalence's representative grounding pair
  /// (lexicographically first constraint solution) under current weights.
  std::pair<double, double> representative_pair(int eq_id);

  /// Exact marginal of a ground atom under current weights. Atoms merged away
  /// by a recovered equivalence resolve to their representative.
  double marginal_of(const Atom& ground_atom);
  double marginal(int atom_id);

  /// One compensation pass over all relaxed equivalences in id order; returns
  /// the max post-damping weight change and appends one trace row per
  /// equivalence.
  double step(const CompensationParams& params, CompensationTrace* trace, int iter_no);

  /// Iterates until the max weight delta drops below tol or max_iters is hit.
  CompensationTrace run(const CompensationParams& params, int iter_offset = 0);

  double last_residual(int eq_id) const;
  double accumulated_residual(int eq_id) const;

  /// The relaxed model with the engine's current weights written back.
  RelaxedModel snapshot() const;

  const GroundModel& ground_model() const { return gm_; }
  long ground_equivalences_of(int eq_id) const;

 private:
  struct EqState {
    int eq_id = 0;
    double w = 0.0, w_prime = 0.0;
    int rep_original = -1, rep_clone = -1;
    std::vector<std::pair<int, long>> original_atoms;  // (atom id, multiplicity)
    std::vector<int> clone_atoms;
    long n = 0, n_prime = 0;
    double last_residual = 0.0;
    double max_residual = 0.0;
  };

  int resolve(int atom_id) const;
  void refresh_unit_factor(int atom_id);
  void bump(int atom_id);
  std::pair<double, double> compute_update(const EqState& st, const CompensationParams& p,
                                           double pr_orig, double pr_clone) const;

  RelaxedModel rm_;
  InferenceLimits limits_;
  bool merge_recovered_;
  GroundModel gm_;
  std::vector<int> root_;  // union-find over ground atoms (originals are roots)
  FactorGraph fg_;
  Components comps_;
  std::vector<int> unit_factor_of_;  // atom -> unit factor index or -1
  struct UnitContribution {
    int eq_index;
    long multiplicity;
    bool clone_side;
  };
  std::vector<std::vector<UnitContribution>> unit_contribs_;  // atom -> contributions
  std::vector<EqState> eqs_;
  std::vector<int> eq_index_of_id_;
  std::vector<int> relaxed_ids_;
  std::vector<long> comp_version_;
  std::vector<std::pair<long, double>> marginal_cache_;  // atom -> (version, prob)
};

struct CompensationOutcome {
  RelaxedModel model;
  CompensationTrace trace;
};

/// Convenience wrapper: build an engine, run to a fixed point, return the
/// model at the final weights together with the trace.
CompensationOutcome run_compensation(const RelaxedModel& rm, const CompensationParams& params,
                                     const InferenceLimits& limits = {},
                                     bool merge_recovered = true);

}  // namespace rcr
