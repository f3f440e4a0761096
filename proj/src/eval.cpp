#include "rcr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <set>

#include "rcr/errors.hpp"
#include "rcr/parser.hpp"

namespace rcr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Model generate_model(const std::string& name, int size) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "domain size must be >= 1");
  std::string text = "domain Person = " + std::to_string(size) +
                     "\n"
                     "predicate smokes(Person)\n"
                     "predicate cancer(Person)\n"
                     "predicate friends(Person, Person)\n";
  if (name == "smokers") {
    text +=
        "1.3 smokes(X) => cancer(X)\n"
        "1.5 smokes(X) ^ friends(X,Y) => smokes(Y)\n";
  } else if (name == "smokers_drinkers") {
    text +=
        "predicate drinks(Person)\n"
        "1.3 smokes(X) => cancer(X)\n"
        "1.5 smokes(X) ^ friends(X,Y) => smokes(Y)\n"
        "1.1 smokes(X) => drinks(X)\n"
        "1.4 drinks(X) ^ friends(X,Y) => drinks(Y)\n";
  } else if (name == "symmetric_smokers") {
    text +=
        "1.3 smokes(X) => cancer(X)\n"
        "1.5 smokes(X) ^ friends(X,Y) => smokes(Y)\n"
        "1.2 X != Y, friends(X,Y) => friends(Y,X)\n";
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown model generator '" + name + "'");
  }
  return parse_model(text);
}

// ---- loopy belief propagation ----------------------------------------------

namespace {

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

struct Message {
  double log_false = 0.0;
  double log_true = 0.0;

  void normalize() {
    double z = log_add(log_false, log_true);
    log_false -= z;
    log_true -= z;
  }
  double prob_true() const { return std::exp(log_true - log_add(log_false, log_true)); }
};

}  // namespace

BpResult bp_oracle(const GroundModel& gm, const BpParams& params, const InferenceLimits& limits) {
  FactorGraph fg = FactorGraph::from_ground(gm, limits);

  struct Edge {
    int factor;
    int var;
    int position;  // index of var inside the factor's scope
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> edges_of_var(fg.num_vars);
  std::vector<std::vector<int>> edges_of_factor(fg.factors.size());
  for (size_t fi = 0; fi < fg.factors.size(); ++fi) {
    const Factor& f = fg.factors[fi];
    for (size_t j = 0; j < f.vars.size(); ++j) {
      edges_of_var[f.vars[j]].push_back(static_cast<int>(edges.size()));
      edges_of_factor[fi].push_back(static_cast<int>(edges.size()));
      edges.push_back(Edge{static_cast<int>(fi), f.vars[j], static_cast<int>(j)});
    }
  }

  std::vector<Message> to_var(edges.size());    // factor -> variable
  std::vector<Message> to_factor(edges.size()); // variable -> factor

  BpResult result;
  double log_keep = params.damping >= 1.0 ? kNegInf : std::log(1.0 - params.damping);
  double log_mix = std::log(params.damping);

  int iter = 0;
  for (; iter < params.max_iters; ++iter) {
    // variable -> factor: sum of the other incoming factor messages
    for (size_t e = 0; e < edges.size(); ++e) {
      Message m;
      for (int other : edges_of_var[edges[e].var]) {
        if (other == static_cast<int>(e)) continue;
        m.log_false += to_var[other].log_false;
        m.log_true += to_var[other].log_true;
      }
      m.normalize();
      to_factor[e] = m;
    }

    // factor -> variable, flooding with damped updates
    double max_change = 0.0;
    for (size_t e = 0; e < edges.size(); ++e) {
      const Edge& edge = edges[e];
      const Factor& f = fg.factors[edge.factor];
      Message m;
      m.log_false = kNegInf;
      m.log_true = kNegInf;
      size_t entries = f.logtab.size();
      for (size_t idx = 0; idx < entries; ++idx) {
        double val = f.logtab[idx];
        if (val == kNegInf) continue;
        for (int oe : edges_of_factor[edge.factor]) {
          if (oe == static_cast<int>(e)) continue;
          const Edge& other = edges[oe];
          val += ((idx >> other.position) & 1) ? to_factor[oe].log_true
                                               : to_factor[oe].log_false;
        }
        if ((idx >> edge.position) & 1)
          m.log_true = log_add(m.log_true, val);
        else
          m.log_false = log_add(m.log_false, val);
      }
      m.normalize();
      Message damped;
      damped.log_false = log_add(log_keep + to_var[e].log_false, log_mix + m.log_false);
      damped.log_true = log_add(log_keep + to_var[e].log_true, log_mix + m.log_true);
      damped.normalize();
      max_change = std::max(max_change, std::abs(damped.prob_true() - to_var[e].prob_true()));
      to_var[e] = damped;
    }

    if (max_change < params.tol) {
      result.converged = true;
      ++iter;
      break;
    }
  }
  result.iterations = iter;

  result.beliefs.assign(fg.num_vars, 0.5);
  for (int v = 0; v < fg.num_vars; ++v) {
    if (edges_of_var[v].empty()) continue;
    Message belief;
    for (int e : edges_of_var[v]) {
      belief.log_false += to_var[e].log_false;
      belief.log_true += to_var[e].log_true;
    }
    result.beliefs[v] = belief.prob_true();
  }
  return result;
}

// ---- metrics and the sweep --------------------------------------------------

KlBreakdown kl_metrics(const std::vector<double>& approx, const std::vector<double>& exact,
                       const std::vector<int>& queries, double eps) {
  if (approx.size() != exact.size())
    throw Error(ErrorCode::kInvalidArgument, "marginal tables cover different atom sets");
  KlBreakdown out;
  for (int q : queries) {
    if (q < 0 || q >= static_cast<int>(approx.size()))
      throw Error(ErrorCode::kInvalidArgument, "query atom outside the table");
    double d = symmetric_kl(approx[q], exact[q], eps);
    out.per_atom.emplace_back(q, d);
    out.raw += d;
  }
  return out;
}

namespace {

std::string domain_sizes_string(const Model& m) {
  std::string s;
  for (size_t i = 0; i < m.domains.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(m.domains[i].constants.size());
  }
  return s;
}

}  // namespace

std::vector<EvalRow> sweep(const ModelPtr& model, const std::string& model_name,
                           const std::vector<double>& grid, const RcrOptions& base_opts) {
  GroundModel gm = ground(model, base_opts.ground_limits);
  FactorGraph fg = FactorGraph::from_ground(gm, base_opts.limits);
  MarginalTable exact = ve_all_marginals(fg, base_opts.limits);

  // original non-evidence ground atoms
  std::set<int> evidence_atoms;
  for (const GroundLiteral& ev : model->evidence) {
    int id = gm.atom_id(ev.atom);
    if (id >= 0) evidence_atoms.insert(id);
  }
  std::vector<int> queries;
  for (size_t i = 0; i < gm.atoms.size(); ++i)
    if (!evidence_atoms.count(static_cast<int>(i))) queries.push_back(static_cast<int>(i));

  auto run_point = [&](double fraction) {
    EvalRow row;
    row.model = model_name;
    row.domains = domain_sizes_string(*model);
    auto started = std::chrono::steady_clock::now();
    try {
      RcrOptions opts = base_opts;
      opts.policy.fraction = fraction;
      opts.policy.count.reset();
      RcrResult res = run_rcr(model, opts);
      row.recovered_fraction =
          res.total_ground_equivalences == 0
              ? 1.0
              : static_cast<double>(res.recovered_ground_equivalences) /
                    static_cast<double>(res.total_ground_equivalences);
      std::vector<double> approx(gm.atoms.size(), 0.5);
      for (const AtomMarginal& am : res.marginals) {
        int id = gm.atom_id(am.atom);
        if (id >= 0) approx[id] = am.prob;
      }
      row.raw_kl = kl_metrics(approx, exact.prob, queries, base_opts.params.clamp_eps).raw;
      row.iterations = res.iterations;
      row.converged = res.converged;
    } catch (const Error& err) {
      row.failed = true;
      row.error = err.what();
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return row;
  };

  // the fully relaxed baseline always runs; it normalizes every other row
  EvalRow baseline = run_point(0.0);

  std::vector<std::future<EvalRow>> futures;
  futures.reserve(grid.size());
  for (double fraction : grid) {
    if (fraction == 0.0) continue;
    futures.push_back(std::async(std::launch::async, run_point, fraction));
  }

  std::vector<EvalRow> rows;
  rows.reserve(grid.size());
  size_t next_future = 0;
  for (double fraction : grid) {
    EvalRow row = fraction == 0.0 ? baseline : futures[next_future++].get();
    if (!row.failed) {
      if (baseline.failed || baseline.raw_kl <= 1e-15)
        row.normalized_kl_pct = row.raw_kl <= 1e-15 ? 0.0 : 100.0;
      else
        row.normalized_kl_pct = 100.0 * row.raw_kl / baseline.raw_kl;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<EvalRow>& rows) {
  std::string csv =
      "# rcr sweep v1\n"
      "model,domains,recovered_fraction,raw_kl,normalized_kl_pct,iterations,converged,"
      "wall_time_s,error\n";
  for (const EvalRow& row : rows) {
    csv += row.model + "," + row.domains + "," + format_double(row.recovered_fraction) + "," +
           format_double(row.raw_kl) + "," + format_double(row.normalized_kl_pct) + "," +
           std::to_string(row.iterations) + "," + (row.converged ? "true" : "false") + "," +
           format_double(row.wall_time_s) + "," + (row.failed ? row.error : "") + "\n";
  }
  return csv;
}

}  // namespace rcr
