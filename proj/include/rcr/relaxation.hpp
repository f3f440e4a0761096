#pragma once

#include "rcr/model.hpp"

namespace rcr {

/// A (possibly constrained) first-order equivalence between an original atom
/// and its clone. `constraint` ranges over the clone's variables, which by
/// construction include every variable of the original. The compensating
/// weights w/w_prime are per-ground-equivalence; the derived unit formulas
/// (w: C, a) and (w': C, a') repeat them once per constraint solution, so each
/// original grounding accumulates (n'/n) * w in total.
struct Equivalence {
  enum class Status { kRelaxed, kRecovered };

  int id = 0;
  Constraint constraint;
  Atom original;
  Atom clone;
  Status status = Status::kRelaxed;
  double w = 0.0;
  double w_prime = 0.0;
  long n = 0;        // distinct original-atom groundings
  long n_prime = 0;  // ground equivalences (= clone groundings)

  /// Declared variable order: the clone's distinct variables.
  std::vector<VarDecl> vars() const { return atom_vars(clone); }
};

struct RelaxedModel {
  ModelPtr source;  // the input model
  ModelPtr base;    // source with every atom occurrence replaced by its clone
  std::vector<Equivalence> equivalences;

  const Equivalence& equivalence(int id) const;
};

/// Clones every atom occurrence of every formula (evidence excluded) and
/// introduces one initially-relaxed equivalence per occurrence, with zero
/// compensating weights. Occurrence letters count per base predicate within
/// each formula.
RelaxedModel clone_all(const ModelPtr& model);

/// Reinstates a relaxed equivalence; its compensating atoms disappear from the
/// derived view. Errors if the id is unknown or already recovered.
RelaxedModel recover(const RelaxedModel& rm, int eq_id);

/// Drops a recovered equivalence again with the given initial weights.
RelaxedModel relax(const RelaxedModel& rm, int eq_id, double w0, double w0_prime);

struct DerivedModelOptions {
  bool compensations = true;  // weighted unit formulas for relaxed equivalences
  bool recovered = true;      // hard equivalence formulas for recovered ones
  bool evidence = true;
};

/// Materializes the relaxed model as a plain MLN: base formulas, plus the
/// selected derived formulas.
Model derived_model(const RelaxedModel& rm, const DerivedModelOptions& opts = {});

std::string to_string(const Model& m, const Equivalence& eq);

}  // namespace rcr
