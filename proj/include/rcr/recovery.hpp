#pragma once

#include <optional>

#include "rcr/compensation.hpp"
#include "rcr/grounding.hpp"

namespace rcr {

enum class RcrMode { kGround, kLifted };

/// How much to recover: a fraction of ground equivalences, or a count of
/// first-order cells. Neither set means no recovery (pure compensation).
/// Inference blow-ups act as a hard cost cap: recovery stops with a
/// truncation flag when the exact engine exceeds its limits.
struct RecoveryPolicy {
  int batch_k = 1;
  std::optional<double> fraction;
  std::optional<long> count;
};

struct RcrOptions {
  RcrMode mode = RcrMode::kLifted;
  RecoveryPolicy policy;
  CompensationParams params;
  InferenceLimits limits;
  GroundLimits ground_limits;
  uint64_t seed = 0;
  bool accumulated_residual_scores = false;  // score on running-max residuals
  bool debug_equiprobability = false;        // re-check cells after each recovery
  bool merge_recovered = true;
};

struct AuditEntry {
  int step = 0;
  int recovered_eq = -1;
  std::string description;
  double score = 0.0;
  bool converged = false;  // of the compensation run that produced the score
  int iters = 0;
  long ground_equivs_recovered_cum = 0;
};

struct AtomMarginal {
  Atom atom;
  std::string name;
  double prob = 0.0;
};

struct RcrResult {
  std::vector<AtomMarginal> marginals;  // original ground atoms
  bool converged = false;               // last compensation run
  int iterations = 0;
  std::vector<AuditEntry> audit;
  CompensationTrace trace;  // concatenated across compensation runs
  long total_ground_equivalences = 0;
  long recovered_ground_equivalences = 0;
  long recovered_cells = 0;
  bool truncated = false;
  std::string truncation_reason;
  std::vector<std::string> warnings;
};

/// Residual recovery score: n' times the three-way symmetric KL divergence of
/// the representative marginals and sigma(w + w'). Ground cells have n' = 1.
double recovery_score(const Equivalence& eq, double pr_original, double pr_clone, double eps);

std::string audit_jsonl(const std::vector<AuditEntry>& audit);

/// The full pipeline: clone, partition (per mode), compensate, and repeatedly
/// recover the top-scored cells followed by re-compensation until the budget
/// is exhausted; final marginals come from exact inference on the last model.
RcrResult run_rcr(const ModelPtr& model, const RcrOptions& opts);

}  // namespace rcr
