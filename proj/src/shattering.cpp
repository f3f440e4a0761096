#include "rcr/shattering.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "rcr/compensation.hpp"
#include "rcr/errors.hpp"

namespace rcr {

AtomPartition shatter_atom(const Model& m, const Atom& atom, const std::vector<ConstId>& K) {
  AtomPartition partition;
  partition.source = atom;
  std::vector<VarDecl> vars = atom_vars(atom);
  for (const EqualityCase& c : equality_cases(m, vars, K)) {
    Constraint cell = c.to_constraint(m, vars, K);
    if (solutions(m, cell, vars).empty()) continue;
    partition.cells.push_back(ConstrainedAtom{std::move(cell), atom});
  }
  return partition;
}

namespace {

std::vector<std::pair<std::string, ConstId>> make_subst(const std::vector<VarDecl>& vars,
                                                        const std::vector<ConstId>& tuple) {
  std::vector<std::pair<std::string, ConstId>> sub;
  sub.reserve(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
  return sub;
}

}  // namespace

std::vector<Equivalence> partition_equivalence(const Model& m, const Equivalence& eq,
                                               const std::vector<ConstId>& K) {
  AtomPartition orig_cells = shatter_atom(m, eq.original, K);
  AtomPartition clone_cells = shatter_atom(m, eq.clone, K);
  std::vector<VarDecl> eq_vars = eq.vars();
  std::vector<VarDecl> orig_vars = atom_vars(eq.original);

  std::vector<Equivalence> out;
  for (const ConstrainedAtom& clone_cell : clone_cells.cells) {
    std::vector<std::vector<ConstId>> sols = solutions(m, clone_cell.constraint, eq_vars);
    if (sols.empty()) continue;

    // keep only cells inside the equivalence's own constraint; a shattering
    // cell either implies it or is disjoint from it
    bool inside = true;
    for (const std::vector<ConstId>& tuple : sols) {
      if (!satisfies(eq.constraint, make_subst(eq_vars, tuple))) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;

    // the unique original cell this clone cell refines
    int matching = -1;
    auto first_sub = make_subst(eq_vars, sols.front());
    for (size_t i = 0; i < orig_cells.cells.size(); ++i) {
      std::vector<std::pair<std::string, ConstId>> restricted;
      for (const VarDecl& v : orig_vars)
        for (const auto& [name, value] : first_sub)
          if (name == v.name) restricted.emplace_back(name, value);
      if (satisfies(orig_cells.cells[i].constraint, restricted)) {
        matching = static_cast<int>(i);
        break;
      }
    }
    if (matching < 0)
      throw Error(ErrorCode::kInference, "clone cell matches no original cell");

    Equivalence cell;
    cell.id = static_cast<int>(out.size());
    cell.constraint = clone_cell.constraint;
    cell.original = eq.original;
    cell.clone = eq.clone;
    cell.status = eq.status;
    cell.w = eq.w;
    cell.w_prime = eq.w_prime;
    auto [n, n_prime] = compute_counts(m, cell);
    cell.n = n;
    cell.n_prime = n_prime;
    out.push_back(std::move(cell));
  }
  return out;
}

RelaxedModel partition_all(const RelaxedModel& rm, const std::vector<ConstId>& K) {
  RelaxedModel out = rm;
  out.equivalences.clear();
  for (const Equivalence& eq : rm.equivalences) {
    for (Equivalence& cell : partition_equivalence(*rm.base, eq, K)) {
      cell.id = static_cast<int>(out.equivalences.size());
      out.equivalences.push_back(std::move(cell));
    }
  }
  return out;
}

RelaxedModel ground_partition_all(const RelaxedModel& rm) {
  RelaxedModel out = rm;
  out.equivalences.clear();
  for (const Equivalence& eq : rm.equivalences) {
    std::vector<VarDecl> vars = eq.vars();
    for (const std::vector<ConstId>& tuple : solutions(*rm.base, eq.constraint, vars)) {
      Equivalence cell;
      cell.id = static_cast<int>(out.equivalences.size());
      for (size_t i = 0; i < vars.size(); ++i)
        cell.constraint.add_eq(vars[i].name, Term::make_const(tuple[i], vars[i].domain));
      cell.original = eq.original;
      cell.clone = eq.clone;
      cell.status = eq.status;
      cell.w = eq.w;
      cell.w_prime = eq.w_prime;
      cell.n = 1;
      cell.n_prime = 1;
      out.equivalences.push_back(std::move(cell));
    }
  }
  return out;
}

CountCheck count_check(const Model& m, const std::vector<std::pair<Atom, Atom>>& ground_pairs) {
  CountCheck check;
  check.n_prime = static_cast<long>(ground_pairs.size());
  std::vector<Atom> order;  // first-appearance order of original groundings
  std::vector<long> counts;
  for (const auto& [orig, clone] : ground_pairs) {
    bool found = false;
    for (size_t i = 0; i < order.size(); ++i) {
      if (order[i] == orig) {
        ++counts[i];
        found = true;
        break;
      }
    }
    if (!found) {
      order.push_back(orig);
      counts.push_back(1);
    }
  }
  check.n = static_cast<long>(order.size());
  for (size_t i = 1; i < order.size(); ++i) {
    if (counts[i] != counts[0]) {
      check.normalized = false;
      check.witness_a = to_string(m, order[0]);
      check.count_a = counts[0];
      check.witness_b = to_string(m, order[i]);
      check.count_b = counts[i];
      return check;
    }
  }
  check.normalized = true;
  return check;
}

std::pair<long, long> compute_counts(const Model& m, const Equivalence& eq) {
  std::vector<VarDecl> vars = eq.vars();
  std::vector<std::pair<Atom, Atom>> pairs;
  for (const std::vector<ConstId>& tuple : solutions(m, eq.constraint, vars)) {
    auto sub = make_subst(vars, tuple);
    pairs.emplace_back(substitute(eq.original, sub), substitute(eq.clone, sub));
  }
  CountCheck check = count_check(m, pairs);
  if (!check.normalized)
    throw NotCountNormalizedError(check.witness_a, check.count_a, check.witness_b, check.count_b);
  return {check.n, check.n_prime};
}

EquiprobabilityReport check_strong_equiprobability(const RelaxedModel& rm, int eq_id, int trials,
                                                   uint64_t seed, const InferenceLimits& limits) {
  EquiprobabilityReport report;
  report.trials = trials;
  if (trials <= 0) return report;

  const Equivalence& eq = rm.equivalence(eq_id);
  std::vector<VarDecl> vars = eq.vars();
  std::vector<Atom> originals, clones;
  {
    std::set<std::string> seen;
    for (const std::vector<ConstId>& tuple : solutions(*rm.base, eq.constraint, vars)) {
      auto sub = make_subst(vars, tuple);
      Atom o = substitute(eq.original, sub);
      if (seen.insert(to_string(*rm.base, o)).second) originals.push_back(o);
      clones.push_back(substitute(eq.clone, sub));
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight_dist(-2.0, 2.0);
  RelaxedModel trial_model = rm;
  CompensationEngine engine(trial_model, limits, true);
  for (int t = 0; t < trials; ++t) {
    for (Equivalence& e : trial_model.equivalences) {
      if (e.status != Equivalence::Status::kRelaxed) continue;
      double w = weight_dist(rng), wp = weight_dist(rng);
      engine.set_weights(e.id, w, wp);
    }
    auto spread = [&engine, &rm](const std::vector<Atom>& atoms) {
      double lo = 1.0, hi = 0.0;
      for (const Atom& a : atoms) {
        double p = engine.marginal_of(a);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      return atoms.empty() ? 0.0 : hi - lo;
    };
    report.worst_original_spread = std::max(report.worst_original_spread, spread(originals));
    report.worst_clone_spread = std::max(report.worst_clone_spread, spread(clones));
  }
  return report;
}

}  // namespace rcr
