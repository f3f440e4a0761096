#pragma once

#include <cstdint>

#include "rcr/inference.hpp"
#include "rcr/relaxation.hpp"

namespace rcr {

struct ConstrainedAtom {
  Constraint constraint;
  Atom atom;
};

struct AtomPartition {
  Atom source;
  std::vector<ConstrainedAtom> cells;
};

/// Preemptive shattering of an atom against the constant set K: every
/// combination of per-variable constant cases crossed with the same-domain
/// argument-equality partitions, with contradictory and empty cells dropped.
/// Emitted constraints omit conjuncts already implied by constant bindings.
AtomPartition shatter_atom(const Model& m, const Atom& atom, const std::vector<ConstId>& K);

/// Splits a first-order equivalence into count-normalized, strongly
/// equiprobable cells by shattering both sides; each clone cell implies
/// exactly one original cell, and the clone cell's constraint alone describes
/// the member.
std::vector<Equivalence> partition_equivalence(const Model& m, const Equivalence& eq,
                                               const std::vector<ConstId>& K);

/// Partitions every equivalence of the relaxed model against K (ids are
/// renumbered sequentially).
RelaxedModel partition_all(const RelaxedModel& rm, const std::vector<ConstId>& K);

/// Splits every equivalence into its individual ground instances
/// (fully-bound constraints, n = n' = 1).
RelaxedModel ground_partition_all(const RelaxedModel& rm);

/// Ground-level count-normalization check over an explicit set of ground
/// equivalences (original, clone).
struct CountCheck {
  bool normalized = false;
  long n = 0;
  long n_prime = 0;
  std::string witness_a, witness_b;
  long count_a = 0, count_b = 0;
};

CountCheck count_check(const Model& m, const std::vector<std::pair<Atom, Atom>>& ground_pairs);

/// Counts for one first-order equivalence, verifying along the way that every
/// original grounding appears in exactly n'/n ground equivalences. Throws
/// NotCountNormalizedError otherwise.
std::pair<long, long> compute_counts(const Model& m, const Equivalence& eq);

struct EquiprobabilityReport {
  int trials = 0;
  double worst_original_spread = 0.0;
  double worst_clone_spread = 0.0;
  double worst_spread() const {
    return worst_original_spread > worst_clone_spread ? worst_original_spread
                                                      : worst_clone_spread;
  }
};

/// Draws `trials` random shared compensating-weight assignments in [-2, 2]
/// and measures, by exact inference, the within-class marginal spread of the
/// equivalence's original and clone groundings.
EquiprobabilityReport check_strong_equiprobability(const RelaxedModel& rm, int eq_id, int trials,
                                                   uint64_t seed,
                                                   const InferenceLimits& limits = {});

}  // namespace rcr
