#include "rcr/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rcr/errors.hpp"

namespace rcr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double logit(double p, double eps) {
  double cp = std::min(std::max(p, eps), 1.0 - eps);
  double cq = std::min(std::max(1.0 - p, eps), 1.0 - eps);
  return std::log(cp) - std::log(cq);
}

double sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double symmetric_kl(double p, double q, double eps) {
  double cp = std::min(std::max(p, eps), 1.0 - eps);
  double cq = std::min(std::max(q, eps), 1.0 - eps);
  auto kl = [](double a, double b) {
    return a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  };
  return kl(cp, cq) + kl(cq, cp);
}

double kld3(double p, double q, double r, double eps) {
  return symmetric_kl(p, q, eps) + symmetric_kl(p, r, eps) + symmetric_kl(q, r, eps);
}

std::string trace_csv(const CompensationTrace& trace) {
  std::string csv = "iter,eq_id,w,w_prime,delta,residual\n";
  for (const TraceRow& row : trace.rows) {
    csv += std::to_string(row.iter) + "," + std::to_string(row.eq_id) + "," +
           format_double(row.w) + "," + format_double(row.w_prime) + "," +
           format_double(row.delta) + "," + format_double(row.residual) + "\n";
  }
  return csv;
}

// ---- engine ----------------------------------------------------------------

CompensationEngine::CompensationEngine(const RelaxedModel& rm, const InferenceLimits& limits,
                                       bool merge_recovered)
    : rm_(rm), limits_(limits), merge_recovered_(merge_recovered) {
  DerivedModelOptions opts;
  opts.compensations = false;
  opts.recovered = false;
  opts.evidence = true;
  gm_ = ground(std::make_shared<Model>(derived_model(rm_, opts)));

  const Model& model = *gm_.model;

  // ground the recovered equivalences; with merging enabled the clone
  // grounding collapses onto its original, otherwise each pair becomes a hard
  // iff factor
  std::vector<std::pair<int, int>> hard_pairs;
  std::vector<std::pair<int, int>> merges;
  for (const Equivalence& eq : rm_.equivalences) {
    if (eq.status != Equivalence::Status::kRecovered) continue;
    std::vector<VarDecl> vars = eq.vars();
    for (const std::vector<ConstId>& tuple : solutions(model, eq.constraint, vars)) {
      std::vector<std::pair<std::string, ConstId>> sub;
      for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
      int orig = gm_.intern(substitute(eq.original, sub));
      int clone = gm_.intern(substitute(eq.clone, sub));
      (merge_recovered_ ? merges : hard_pairs).emplace_back(orig, clone);
    }
  }

  // relaxed equivalence groundings and representatives
  eqs_.reserve(rm_.equivalences.size());
  int max_id = -1;
  for (const Equivalence& eq : rm_.equivalences) max_id = std::max(max_id, eq.id);
  eq_index_of_id_.assign(max_id + 1, -1);
  for (const Equivalence& eq : rm_.equivalences) {
    if (eq.status != Equivalence::Status::kRelaxed) continue;
    EqState st;
    st.eq_id = eq.id;
    st.w = eq.w;
    st.w_prime = eq.w_prime;
    std::vector<VarDecl> vars = eq.vars();
    std::map<int, long> orig_counts;
    for (const std::vector<ConstId>& tuple : solutions(model, eq.constraint, vars)) {
      std::vector<std::pair<std::string, ConstId>> sub;
      for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
      int orig = gm_.intern(substitute(eq.original, sub));
      int clone = gm_.intern(substitute(eq.clone, sub));
      if (st.rep_original < 0) {
        st.rep_original = orig;
        st.rep_clone = clone;
      }
      ++orig_counts[orig];
      st.clone_atoms.push_back(clone);
      ++st.n_prime;
    }
    st.n = static_cast<long>(orig_counts.size());
    long expected = orig_counts.empty() ? 0 : orig_counts.begin()->second;
    for (const auto& [atom, count] : orig_counts) {
      if (count != expected)
        throw NotCountNormalizedError(gm_.atom_name(orig_counts.begin()->first), expected,
                                      gm_.atom_name(atom), count);
      st.original_atoms.emplace_back(atom, count);
    }
    eq_index_of_id_[eq.id] = static_cast<int>(eqs_.size());
    relaxed_ids_.push_back(eq.id);
    eqs_.push_back(std::move(st));
  }

  // union-find; clone atoms merge onto their originals
  root_.resize(gm_.atoms.size());
  for (size_t i = 0; i < root_.size(); ++i) root_[i] = static_cast<int>(i);
  for (const auto& [orig, clone] : merges) {
    int r = orig;
    while (root_[r] != r) r = root_[r];
    root_[clone] = r;
  }
  for (size_t i = 0; i < root_.size(); ++i) root_[i] = resolve(static_cast<int>(i));

  // assemble the factor graph: base formulas (scopes contracted through the
  // merge map), hard equivalence factors, one mutable unit factor per
  // compensated atom
  fg_.num_vars = static_cast<int>(gm_.atoms.size());
  std::vector<bool> world(gm_.atoms.size(), false);
  for (const GroundFormula& g : gm_.formulas) {
    Factor f;
    std::vector<int> mapped(g.atom_ids.size());
    for (size_t i = 0; i < g.atom_ids.size(); ++i) mapped[i] = root_[g.atom_ids[i]];
    f.vars = mapped;
    std::sort(f.vars.begin(), f.vars.end());
    f.vars.erase(std::unique(f.vars.begin(), f.vars.end()), f.vars.end());
    if ((size_t{1} << f.vars.size()) > limits_.max_factor_entries)
      throw CapacityError("formula scope exceeds the factor size limit");
    f.logtab.resize(size_t{1} << f.vars.size());
    for (size_t idx = 0; idx < f.logtab.size(); ++idx) {
      for (size_t i = 0; i < f.vars.size(); ++i) world[f.vars[i]] = (idx >> i) & 1;
      bool sat = eval_body(g.body, mapped, world);
      f.logtab[idx] = g.weight.hard ? (sat ? 0.0 : kNegInf) : (sat ? g.weight.value : 0.0);
    }
    fg_.factors.push_back(std::move(f));
  }
  for (const auto& [orig, clone] : hard_pairs) {
    Factor f;
    int a = std::min(orig, clone), b = std::max(orig, clone);
    f.vars = {a, b};
    f.logtab = {0.0, kNegInf, kNegInf, 0.0};
    fg_.factors.push_back(std::move(f));
  }

  unit_contribs_.assign(gm_.atoms.size(), {});
  for (size_t ei = 0; ei < eqs_.size(); ++ei) {
    for (const auto& [atom, mult] : eqs_[ei].original_atoms)
      unit_contribs_[atom].push_back(UnitContribution{static_cast<int>(ei), mult, false});
    for (int atom : eqs_[ei].clone_atoms)
      unit_contribs_[atom].push_back(UnitContribution{static_cast<int>(ei), 1, true});
  }
  unit_factor_of_.assign(gm_.atoms.size(), -1);
  for (size_t atom = 0; atom < unit_contribs_.size(); ++atom) {
    if (unit_contribs_[atom].empty()) continue;
    Factor f;
    f.vars = {static_cast<int>(atom)};
    f.logtab = {0.0, 0.0};
    unit_factor_of_[atom] = static_cast<int>(fg_.factors.size());
    fg_.factors.push_back(std::move(f));
    refresh_unit_factor(static_cast<int>(atom));
  }

  comps_ = connected_components(fg_);
  comp_version_.assign(comps_.count, 0);
  marginal_cache_.assign(gm_.atoms.size(), {-1, 0.0});
}

int CompensationEngine::resolve(int atom_id) const {
  while (root_[atom_id] != atom_id) atom_id = root_[atom_id];
  return atom_id;
}

void CompensationEngine::refresh_unit_factor(int atom_id) {
  double total = 0.0;
  for (const UnitContribution& c : unit_contribs_[atom_id]) {
    const EqState& st = eqs_[c.eq_index];
    total += static_cast<double>(c.multiplicity) * (c.clone_side ? st.w_prime : st.w);
  }
  fg_.factors[unit_factor_of_[atom_id]].logtab[1] = total;
}

void CompensationEngine::bump(int atom_id) {
  if (!comp_version_.empty()) ++comp_version_[comps_.of_var[atom_id]];
}

std::pair<double, double> CompensationEngine::weights_of(int eq_id) const {
  int idx = eq_index_of_id_.at(eq_id);
  if (idx < 0) throw Error(ErrorCode::kInvalidArgument, "equivalence is not relaxed");
  return {eqs_[idx].w, eqs_[idx].w_prime};
}

void CompensationEngine::set_weights(int eq_id, double w, double w_prime) {
  int idx = eq_index_of_id_.at(eq_id);
  if (idx < 0) throw Error(ErrorCode::kInvalidArgument, "equivalence is not relaxed");
  EqState& st = eqs_[idx];
  st.w = w;
  st.w_prime = w_prime;
  for (const auto& [atom, mult] : st.original_atoms) {
    refresh_unit_factor(atom);
    bump(atom);
  }
  for (int atom : st.clone_atoms) {
    refresh_unit_factor(atom);
    bump(atom);
  }
}

double CompensationEngine::marginal(int atom_id) {
  atom_id = resolve(atom_id);
  int comp = comps_.of_var[atom_id];
  auto& [version, value] = marginal_cache_[atom_id];
  if (version == comp_version_[comp]) return value;
  std::vector<const Factor*> fs;
  fs.reserve(comps_.factors[comp].size());
  for (int fi : comps_.factors[comp]) fs.push_back(&fg_.factors[fi]);
  MarginalTable t = ve_marginals_component(comps_.vars[comp], fs, {atom_id}, limits_);
  version = comp_version_[comp];
  value = t.prob[0];
  return value;
}

double CompensationEngine::marginal_of(const Atom& ground_atom) {
  int id = gm_.atom_id(ground_atom);
  if (id < 0)
    throw Error(ErrorCode::kInvalidArgument,
                "atom " + to_string(*gm_.model, ground_atom) + " is not part of the model");
  return marginal(id);
}

std::pair<double, double> CompensationEngine::representative_pair(int eq_id) {
  int idx = eq_index_of_id_.at(eq_id);
  if (idx < 0) throw Error(ErrorCode::kInvalidArgument, "equivalence is not relaxed");
  return {marginal(eqs_[idx].rep_original), marginal(eqs_[idx].rep_clone)};
}

std::pair<double, double> CompensationEngine::compute_update(const EqState& st,
                                                             const CompensationParams& p,
                                                             double pr_orig,
                                                             double pr_clone) const {
  double w_new = logit(pr_clone, p.clamp_eps) - st.w_prime;
  double wp_new = logit(pr_orig, p.clamp_eps) - st.w;
  w_new = (1.0 - p.damping) * st.w + p.damping * w_new;
  wp_new = (1.0 - p.damping) * st.w_prime + p.damping * wp_new;
  return {w_new, wp_new};
}

double CompensationEngine::step(const CompensationParams& params, CompensationTrace* trace,
                                int iter_no) {
  double max_delta = 0.0;
  auto apply = [&](EqState& st, double pr_orig, double pr_clone) {
    double residual = kld3(pr_orig, pr_clone, sigmoid(st.w + st.w_prime), params.clamp_eps);
    st.last_residual = residual;
    st.max_residual = std::max(st.max_residual, residual);
    auto [w_new, wp_new] = compute_update(st, params, pr_orig, pr_clone);
    double delta = std::max(std::abs(w_new - st.w), std::abs(wp_new - st.w_prime));
    max_delta = std::max(max_delta, delta);
    set_weights(st.eq_id, w_new, wp_new);
    if (trace)
      trace->rows.push_back(TraceRow{iter_no, st.eq_id, w_new, wp_new, delta, residual});
  };

  if (params.schedule == Schedule::kSimultaneous) {
    std::vector<std::pair<double, double>> pairs(eqs_.size());
    for (size_t i = 0; i < eqs_.size(); ++i)
      pairs[i] = {marginal(eqs_[i].rep_original), marginal(eqs_[i].rep_clone)};
    for (size_t i = 0; i < eqs_.size(); ++i) apply(eqs_[i], pairs[i].first, pairs[i].second);
  } else {
    for (EqState& st : eqs_) {
      double pr_orig = marginal(st.rep_original);
      double pr_clone = marginal(st.rep_clone);
      apply(st, pr_orig, pr_clone);
    }
  }
  return max_delta;
}

CompensationTrace CompensationEngine::run(const CompensationParams& params, int iter_offset) {
  for (EqState& st : eqs_) st.max_residual = 0.0;
  CompensationTrace trace;
  int iter = 0;
  double delta = 0.0;
  while (iter < params.max_iters) {
    ++iter;
    delta = step(params, &trace, iter_offset + iter);
    if (delta < params.tol) break;
  }
  trace.iterations = iter;
  trace.final_max_delta = delta;
  trace.converged = eqs_.empty() || delta < params.tol;
  return trace;
}

double CompensationEngine::last_residual(int eq_id) const {
  int idx = eq_index_of_id_.at(eq_id);
  return idx < 0 ? 0.0 : eqs_[idx].last_residual;
}

double CompensationEngine::accumulated_residual(int eq_id) const {
  int idx = eq_index_of_id_.at(eq_id);
  return idx < 0 ? 0.0 : eqs_[idx].max_residual;
}

RelaxedModel CompensationEngine::snapshot() const {
  RelaxedModel out = rm_;
  for (Equivalence& eq : out.equivalences) {
    if (eq.status != Equivalence::Status::kRelaxed) continue;
    int idx = eq_index_of_id_.at(eq.id);
    eq.w = eqs_[idx].w;
    eq.w_prime = eqs_[idx].w_prime;
  }
  return out;
}

long CompensationEngine::ground_equivalences_of(int eq_id) const {
  int idx = eq_index_of_id_.at(eq_id);
  return idx < 0 ? 0 : eqs_[idx].n_prime;
}

CompensationOutcome run_compensation(const RelaxedModel& rm, const CompensationParams& params,
                                     const InferenceLimits& limits, bool merge_recovered) {
  CompensationEngine engine(rm, limits, merge_recovered);
  CompensationTrace trace = engine.run(params);
  return CompensationOutcome{engine.snapshot(), std::move(trace)};
}

}  // namespace rcr
