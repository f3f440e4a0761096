#include "rcr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "rcr/errors.hpp"

namespace rcr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

FactorGraph FactorGraph::from_ground(const GroundModel& gm, const InferenceLimits& limits) {
  FactorGraph fg;
  fg.num_vars = static_cast<int>(gm.atoms.size());
  fg.factors.reserve(gm.formulas.size());
  std::vector<bool> world(gm.atoms.size(), false);
  for (const GroundFormula& g : gm.formulas) {
    Factor f;
    f.vars = g.atom_ids;
    std::sort(f.vars.begin(), f.vars.end());
    f.vars.erase(std::unique(f.vars.begin(), f.vars.end()), f.vars.end());
    if (f.vars.size() >= 8 * sizeof(size_t) ||
        (size_t{1} << f.vars.size()) > limits.max_factor_entries)
      throw CapacityError("formula scope of " + std::to_string(f.vars.size()) +
                          " atoms exceeds the factor size limit");
    size_t entries = size_t{1} << f.vars.size();
    f.logtab.resize(entries);
    for (size_t idx = 0; idx < entries; ++idx) {
      for (size_t i = 0; i < f.vars.size(); ++i) world[f.vars[i]] = (idx >> i) & 1;
      bool sat = eval_body(g.body, g.atom_ids, world);
      f.logtab[idx] = g.weight.hard ? (sat ? 0.0 : kNegInf) : (sat ? g.weight.value : 0.0);
    }
    fg.factors.push_back(std::move(f));
  }
  return fg;
}

Components connected_components(const FactorGraph& fg) {
  std::vector<int> parent(fg.num_vars);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Factor& f : fg.factors) {
    for (size_t i = 1; i < f.vars.size(); ++i) {
      int a = find(f.vars[0]), b = find(f.vars[i]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  Components comps;
  comps.of_var.assign(fg.num_vars, -1);
  for (int v = 0; v < fg.num_vars; ++v) {
    int root = find(v);
    if (comps.of_var[root] < 0) {
      comps.of_var[root] = comps.count++;
      comps.vars.emplace_back();
      comps.factors.emplace_back();
    }
    comps.of_var[v] = comps.of_var[root];
    comps.vars[comps.of_var[v]].push_back(v);
  }
  for (size_t fi = 0; fi < fg.factors.size(); ++fi) {
    if (fg.factors[fi].vars.empty()) continue;
    comps.factors[comps.of_var[fg.factors[fi].vars[0]]].push_back(static_cast<int>(fi));
  }
  return comps;
}

// ---- brute force ---------------------------------------------------------

MarginalTable brute_force(const GroundModel& gm, const InferenceLimits& limits) {
  int n = static_cast<int>(gm.atoms.size());
  if (n > limits.max_brute_atoms)
    throw CapacityError("model has " + std::to_string(n) +
                        " ground atoms; brute force is limited to " +
                        std::to_string(limits.max_brute_atoms));
  FactorGraph fg = FactorGraph::from_ground(gm, limits);

  // Factors become evaluable once their highest variable is assigned.
  std::vector<std::vector<int>> by_last(n);
  double scale = 0.0;  // upper bound on any world's log-weight
  for (size_t fi = 0; fi < fg.factors.size(); ++fi) {
    const Factor& f = fg.factors[fi];
    if (f.vars.empty()) continue;
    by_last[f.vars.back()].push_back(static_cast<int>(fi));
    scale += *std::max_element(f.logtab.begin(), f.logtab.end());
  }
  if (scale == kNegInf) throw NoFeasibleWorldError();

  std::vector<uint8_t> assign(n, 0);
  std::vector<long double> true_mass(n, 0.0L);
  double max_logw = kNegInf;

  // DFS over assignments; subtree sums give pairwise summation for free.
  std::function<long double(int, double)> rec = [&](int depth, double logw) -> long double {
    if (logw == kNegInf) return 0.0L;
    if (depth == n) {
      max_logw = std::max(max_logw, logw);
      return std::exp(static_cast<long double>(logw - scale));
    }
    long double total = 0.0L;
    for (int v = 0; v < 2; ++v) {
      assign[depth] = static_cast<uint8_t>(v);
      double delta = 0.0;
      for (int fi : by_last[depth]) {
        const Factor& f = fg.factors[fi];
        size_t idx = 0;
        for (size_t i = 0; i < f.vars.size(); ++i) idx |= size_t{assign[f.vars[i]]} << i;
        delta += f.logtab[idx];
      }
      long double sub = rec(depth + 1, logw + delta);
      if (v == 1) true_mass[depth] += sub;
      total += sub;
    }
    return total;
  };

  long double total = rec(0, 0.0);
  if (total <= 0.0L) {
    if (max_logw == kNegInf) throw NoFeasibleWorldError();
    // everything underflowed against the a-priori bound; redo against the max
    scale = max_logw;
    std::fill(true_mass.begin(), true_mass.end(), 0.0L);
    total = rec(0, 0.0);
  }

  MarginalTable table;
  table.logZ = scale + static_cast<double>(std::log(total));
  table.prob.resize(n);
  for (int v = 0; v < n; ++v) table.prob[v] = static_cast<double>(true_mass[v] / total);
  return table;
}

// ---- variable elimination -------------------------------------------------

namespace {

Factor multiply(const Factor& a, const Factor& b, const InferenceLimits& limits) {
  Factor out;
  out.vars.reserve(a.vars.size() + b.vars.size());
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  if (out.vars.size() >= 8 * sizeof(size_t) ||
      (size_t{1} << out.vars.size()) > limits.max_factor_entries)
    throw CapacityError("variable elimination produced a factor over " +
                        std::to_string(out.vars.size()) + " variables");
  // bit-gather maps from the joint index into each operand's index
  auto positions = [&out](const Factor& f) {
    std::vector<int> pos(f.vars.size());
    for (size_t i = 0; i < f.vars.size(); ++i)
      pos[i] = static_cast<int>(
          std::lower_bound(out.vars.begin(), out.vars.end(), f.vars[i]) - out.vars.begin());
    return pos;
  };
  std::vector<int> pa = positions(a), pb = positions(b);
  size_t entries = size_t{1} << out.vars.size();
  out.logtab.resize(entries);
  for (size_t idx = 0; idx < entries; ++idx) {
    size_t ia = 0, ib = 0;
    for (size_t i = 0; i < pa.size(); ++i) ia |= ((idx >> pa[i]) & 1) << i;
    for (size_t i = 0; i < pb.size(); ++i) ib |= ((idx >> pb[i]) & 1) << i;
    out.logtab[idx] = a.logtab[ia] + b.logtab[ib];
  }
  return out;
}

Factor sum_out(const Factor& f, int var) {
  size_t pos = std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin();
  Factor out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + pos);
  size_t entries = size_t{1} << out.vars.size();
  out.logtab.resize(entries);
  size_t lo_mask = (size_t{1} << pos) - 1;
  for (size_t idx = 0; idx < entries; ++idx) {
    size_t base = (idx & lo_mask) | ((idx & ~lo_mask) << 1);
    out.logtab[idx] = log_add(f.logtab[base], f.logtab[base | (size_t{1} << pos)]);
  }
  return out;
}

std::vector<int> min_fill_order(const std::vector<int>& vars,
                                const std::vector<const Factor*>& factors,
                                const std::vector<int>& keep) {
  std::set<int> remaining(vars.begin(), vars.end());
  for (int k : keep) remaining.erase(k);
  std::map<int, std::set<int>> adj;
  for (int v : vars) adj[v] = {};
  for (const Factor* f : factors)
    for (int a : f->vars)
      for (int b : f->vars)
        if (a != b) adj[a].insert(b);

  std::vector<int> order;
  order.reserve(remaining.size());
  while (!remaining.empty()) {
    int best = -1;
    long best_fill = -1;
    for (int v : remaining) {
      long fill = 0;
      std::vector<int> nbrs;
      for (int u : adj[v])
        if (u != v) nbrs.push_back(u);
      for (size_t i = 0; i < nbrs.size(); ++i)
        for (size_t j = i + 1; j < nbrs.size(); ++j)
          if (!adj[nbrs[i]].count(nbrs[j])) ++fill;
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    order.push_back(best);
    std::vector<int> nbrs(adj[best].begin(), adj[best].end());
    for (size_t i = 0; i < nbrs.size(); ++i) {
      adj[nbrs[i]].erase(best);
      for (size_t j = i + 1; j < nbrs.size(); ++j) {
        adj[nbrs[i]].insert(nbrs[j]);
        adj[nbrs[j]].insert(nbrs[i]);
      }
    }
    adj.erase(best);
    remaining.erase(best);
  }
  return order;
}

/// Eliminates every component variable not in `keep`; the result is the
/// combined log-table over `keep` (ascending) plus all constant mass.
Factor eliminate(const std::vector<int>& comp_vars, const std::vector<const Factor*>& comp_factors,
                 const std::vector<int>& keep, const InferenceLimits& limits) {
  std::vector<int> order = min_fill_order(comp_vars, comp_factors, keep);
  std::vector<Factor> active;
  active.reserve(comp_factors.size());
  for (const Factor* f : comp_factors) active.push_back(*f);

  for (int var : order) {
    Factor merged;
    bool have = false;
    std::vector<Factor> rest;
    rest.reserve(active.size());
    for (Factor& f : active) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), var)) {
        merged = have ? multiply(merged, f, limits) : std::move(f);
        have = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (have) rest.push_back(sum_out(merged, var));
    active = std::move(rest);
  }

  Factor result;
  result.logtab = {0.0};
  for (Factor& f : active) result = multiply(result, f, limits);
  // variables in keep that never appeared in a factor contribute a free bit
  for (int k : keep) {
    if (!std::binary_search(result.vars.begin(), result.vars.end(), k)) {
      Factor free_var;
      free_var.vars = {k};
      free_var.logtab = {0.0, 0.0};
      result = multiply(result, free_var, limits);
    }
  }
  return result;
}

}  // namespace

double ve_log_partition(const FactorGraph& fg, const InferenceLimits& limits) {
  Components comps = connected_components(fg);
  double logZ = 0.0;
  for (int c = 0; c < comps.count; ++c) {
    std::vector<const Factor*> fs;
    for (int fi : comps.factors[c]) fs.push_back(&fg.factors[fi]);
    Factor r = eliminate(comps.vars[c], fs, {}, limits);
    logZ += r.logtab[0];
  }
  for (const Factor& f : fg.factors)
    if (f.vars.empty()) logZ += f.logtab[0];
  return logZ;
}

MarginalTable ve_marginals(const FactorGraph& fg, const std::vector<int>& queries,
                           const InferenceLimits& limits) {
  Components comps = connected_components(fg);
  std::vector<std::vector<int>> queries_by_comp(comps.count);
  for (int q : queries) queries_by_comp[comps.of_var[q]].push_back(q);

  MarginalTable table;
  table.prob.assign(fg.num_vars, std::numeric_limits<double>::quiet_NaN());
  table.logZ = 0.0;
  for (int c = 0; c < comps.count; ++c) {
    std::vector<const Factor*> fs;
    for (int fi : comps.factors[c]) fs.push_back(&fg.factors[fi]);
    Factor all = eliminate(comps.vars[c], fs, {}, limits);
    double comp_logZ = all.logtab[0];
    if (comp_logZ == kNegInf) throw NoFeasibleWorldError();
    table.logZ += comp_logZ;
    for (int q : queries_by_comp[c]) {
      Factor r = eliminate(comps.vars[c], fs, {q}, limits);
      double z = log_add(r.logtab[0], r.logtab[1]);
      if (z == kNegInf) throw NoFeasibleWorldError();
      table.prob[q] = std::exp(r.logtab[1] - z);
    }
  }
  for (const Factor& f : fg.factors)
    if (f.vars.empty()) table.logZ += f.logtab[0];
  return table;
}

MarginalTable ve_all_marginals(const FactorGraph& fg, const InferenceLimits& limits) {
  std::vector<int> queries(fg.num_vars);
  std::iota(queries.begin(), queries.end(), 0);
  return ve_marginals(fg, queries, limits);
}

MarginalTable ve_marginals_component(const std::vector<int>& comp_vars,
                                     const std::vector<const Factor*>& comp_factors,
                                     const std::vector<int>& queries,
                                     const InferenceLimits& limits) {
  MarginalTable table;
  table.prob.reserve(queries.size());
  if (queries.empty()) {
    Factor all = eliminate(comp_vars, comp_factors, {}, limits);
    table.logZ = all.logtab[0];
    return table;
  }
  for (int q : queries) {
    Factor r = eliminate(comp_vars, comp_factors, {q}, limits);
    double z = log_add(r.logtab[0], r.logtab[1]);
    if (z == kNegInf) throw NoFeasibleWorldError();
    table.logZ = z;  // marginalizing the last variable closes the component
    table.prob.push_back(std::exp(r.logtab[1] - z));
  }
  return table;
}

std::vector<std::pair<double, double>> representative_marginals(
    const GroundModel& gm, const std::vector<std::pair<int, int>>& pairs,
    const InferenceLimits& limits) {
  FactorGraph fg = FactorGraph::from_ground(gm, limits);
  Components comps = connected_components(fg);

  std::set<int> needed;
  for (const auto& [a, b] : pairs) {
    needed.insert(a);
    needed.insert(b);
  }
  std::vector<double> prob(fg.num_vars, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<int>> by_comp(comps.count);
  for (int q : needed) by_comp[comps.of_var[q]].push_back(q);
  for (int c = 0; c < comps.count; ++c) {
    if (by_comp[c].empty()) continue;
    std::vector<const Factor*> fs;
    for (int fi : comps.factors[c]) fs.push_back(&fg.factors[fi]);
    for (int q : by_comp[c]) {
      Factor r = eliminate(comps.vars[c], fs, {q}, limits);
      double z = log_add(r.logtab[0], r.logtab[1]);
      if (z == kNegInf) throw NoFeasibleWorldError();
      prob[q] = std::exp(r.logtab[1] - z);
    }
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.emplace_back(prob[a], prob[b]);
  return out;
}

}  // namespace rcr
