#pragma once

#include <utility>

#include "rcr/grounding.hpp"

namespace rcr {

/// Table over binary variables in log-space; -inf entries encode violated hard
/// formulas. Bit i of a table index is the value of vars[i].
struct Factor {
  std::vector<int> vars;  // ascending variable ids
  std::vector<double> logtab;
};

struct InferenceLimits {
  int max_brute_atoms = 25;
  size_t max_factor_entries = size_t{1} << 26;
};

struct FactorGraph {
  int num_vars = 0;
  std::vector<Factor> factors;

  /// One factor per ground formula, over the formula's distinct atoms.
  static FactorGraph from_ground(const GroundModel& gm, const InferenceLimits& limits = {});
};

struct MarginalTable {
  double logZ = 0.0;
  std::vector<double> prob;  // indexed by ground atom id; NaN where not queried
};

struct Components {
  int count = 0;
  std::vector<int> of_var;                 // var -> component
  std::vector<std::vector<int>> vars;      // component -> vars
  std::vector<std::vector<int>> factors;   // component -> factor indices
};

Components connected_components(const FactorGraph& fg);

/// Exact marginals and logZ for every atom by exhaustive enumeration.
/// Throws CapacityError above limits.max_brute_atoms and NoFeasibleWorldError
/// when every world violates a hard formula.
MarginalTable brute_force(const GroundModel& gm, const InferenceLimits& limits = {});

/// Exact marginals for the queried variables (plus logZ) by variable
/// elimination with min-fill ordering, deterministic tie-breaking by id.
MarginalTable ve_marginals(const FactorGraph& fg, const std::vector<int>& queries,
                           const InferenceLimits& limits = {});

/// All-variable convenience wrapper.
MarginalTable ve_all_marginals(const FactorGraph& fg, const InferenceLimits& limits = {});

/// VE restricted to one component; prob[i] answers queries[i] and logZ is the
/// component's log partition mass.
MarginalTable ve_marginals_component(const std::vector<int>& comp_vars,
                                     const std::vector<const Factor*>& comp_factors,
                                     const std::vector<int>& queries,
                                     const InferenceLimits& limits = {});

double ve_log_partition(const FactorGraph& fg, const InferenceLimits& limits = {});

/// Batched exact marginals for pairs of atoms (query-driven: only the
/// components containing queried atoms are eliminated).
std::vector<std::pair<double, double>> representative_marginals(
    const GroundModel& gm, const std::vector<std::pair<int, int>>& pairs,
    const InferenceLimits& limits = {});

}  // namespace rcr
