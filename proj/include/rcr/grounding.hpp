#pragma once

#include <optional>
#include <unordered_map>

#include "rcr/model.hpp"

namespace rcr {

struct GroundFormula {
  Weight weight;
  BodyExpr body;              // leaves index into atom_ids
  std::vector<int> atom_ids;  // occurrence list, ground atom ids
  int source_formula = -1;    // formula id in the source model; -1 for evidence
  std::vector<ConstId> subst; // parallel to the source formula's logvars
};

struct GroundModel {
  ModelPtr model;
  std::vector<Atom> atoms;  // id = index; all ground
  std::unordered_map<Atom, int, AtomHash> atom_index;
  std::vector<GroundFormula> formulas;

  int atom_id(const Atom& a) const {
    auto it = atom_index.find(a);
    return it == atom_index.end() ? -1 : it->second;
  }
  int intern(const Atom& a);
  std::string atom_name(int id) const { return to_string(*model, atoms[id]); }
};

struct GroundLimits {
  size_t max_atoms = 1'000'000;
};

/// Grounds every weighted formula over the solutions of its constraint and
/// turns evidence literals into hard unit formulas.
GroundModel ground(const ModelPtr& m, const GroundLimits& limits = {});

/// Log-weight of a complete truth assignment: sum of satisfied soft weights,
/// -inf if any hard formula is violated.
double weight_of_world(const GroundModel& gm, const std::vector<bool>& world);

bool eval_body(const BodyExpr& body, const std::vector<int>& atom_ids,
               const std::vector<bool>& world);

struct SharedAtomWitness {
  int atom = -1;
  int formula_a = -1;
  int formula_b = -1;
};

/// True iff no ground atom occurs in two distinct ground formulas; otherwise
/// returns a witness.
std::optional<SharedAtomWitness> find_shared_atom(const GroundModel& gm);
inline bool verify_disconnected(const GroundModel& gm) { return !find_shared_atom(gm); }

}  // namespace rcr
