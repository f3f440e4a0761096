#include <doctest.h>

#include <cmath>

#include "rcr/compensation.hpp"
#include "rcr/errors.hpp"
#include "rcr/eval.hpp"
#include "rcr/shattering.hpp"
#include "test_util.hpp"

using namespace rcr;
using rcrtest::parse;

namespace {

ModelPtr two_units() { return parse("predicate p()\n1.3 p()\n1.5 p()\n"); }

const Equivalence& eq_of_formula(const RelaxedModel& rm, int formula_id) {
  for (const Equivalence& eq : rm.equivalences) {
    const Predicate& pred = rm.base->predicates[eq.clone.pred];
    if (pred.tag->formula_id == formula_id) return eq;
  }
  throw std::runtime_error("no equivalence for formula");
}

}  // namespace

TEST_CASE("logit basics") {
  CHECK(logit(0.5) == doctest::Approx(0.0));
  CHECK(logit(sigmoid(2.8)) == doctest::Approx(2.8).epsilon(1e-9));
  CHECK(logit(1.0, 1e-12) == doctest::Approx(std::log((1.0 - 1e-12) / 1e-12)).epsilon(1e-9));
  CHECK(logit(1.0, 1e-12) == doctest::Approx(27.63).epsilon(1e-3));
  CHECK(logit(0.0, 1e-12) == doctest::Approx(-logit(1.0, 1e-12)));
}

TEST_CASE("three-way symmetric KL divergence") {
  CHECK(kld3(0.5, 0.5, 0.5) == doctest::Approx(0.0));
  CHECK(kld3(0.3, 0.3, 0.3) == doctest::Approx(0.0));

  // independent evaluation of the stated formula for (0.9, 0.5, 0.5)
  auto kl = [](double a, double b) {
    return a * std::log(a / b) + (1 - a) * std::log((1 - a) / (1 - b));
  };
  double expected = (kl(0.9, 0.5) + kl(0.5, 0.9)) * 2.0;  // the (q, r) pair is zero
  CHECK(kld3(0.9, 0.5, 0.5) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kld3(0.9, 0.5, 0.5) > 0.0);

  // symmetry in the arguments
  CHECK(kld3(0.2, 0.6, 0.7) == doctest::Approx(kld3(0.7, 0.2, 0.6)).epsilon(1e-12));
}

TEST_CASE("the two-unit-clause model reaches the closed-form fixed point") {
  RelaxedModel rm = clone_all(two_units());
  CompensationParams params;
  params.damping = 0.5;
  params.tol = 1e-12;
  params.max_iters = 500;
  CompensationEngine engine(rm, {}, true);
  CompensationTrace trace = engine.run(params);
  CHECK(trace.converged);

  auto [w2, w2p] = engine.weights_of(eq_of_formula(rm, 2).id);
  CHECK(w2 == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(w2p == doctest::Approx(1.3).epsilon(1e-9));
  auto [w1, w1p] = engine.weights_of(eq_of_formula(rm, 1).id);
  CHECK(w1 == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(w1p == doctest::Approx(1.5).epsilon(1e-9));

  // weak equivalence holds and matches the unsplit model's exact marginal
  double expected = sigmoid(2.8);
  GroundModel source = ground(two_units());
  int p = source.atom_id(source.atoms[0]);
  CHECK(brute_force(source).prob[p] == doctest::Approx(expected).epsilon(1e-12));
  for (const Equivalence& eq : rm.equivalences) {
    auto [pr_orig, pr_clone] = engine.representative_pair(eq.id);
    CHECK(pr_orig == doctest::Approx(expected).epsilon(1e-9));
    CHECK(pr_clone == doctest::Approx(expected).epsilon(1e-9));
    CHECK(engine.last_residual(eq.id) < 1e-12);
  }
}

TEST_CASE("first damped iterate from zeros") {
  RelaxedModel rm = clone_all(two_units());
  CompensationParams params;
  params.damping = 0.5;
  CompensationEngine engine(rm, {}, true);
  CompensationTrace trace;
  engine.step(params, &trace, 1);
  auto [w2, w2p] = engine.weights_of(eq_of_formula(rm, 2).id);
  CHECK(w2 == doctest::Approx(0.5 * 1.5).epsilon(1e-12));
}

TEST_CASE("a fixed point has zero deltas and damping neutrality") {
  RelaxedModel rm = clone_all(two_units());
  const Equivalence& e1 = eq_of_formula(rm, 1);
  const Equivalence& e2 = eq_of_formula(rm, 2);
  for (Equivalence& eq : rm.equivalences) {
    eq.w = eq.id == e1.id ? 1.3 : 1.5;
    eq.w_prime = eq.id == e1.id ? 1.5 : 1.3;
  }
  CompensationParams params;
  params.damping = 0.5;
  CompensationEngine engine(rm, {}, true);
  CompensationTrace trace = engine.run(params);
  CHECK(trace.converged);
  CHECK(trace.iterations == 1);
  CHECK(trace.final_max_delta < 1e-10);

  // an undamped step at the fixed point stays put
  params.damping = 1.0;
  CompensationEngine undamped(engine.snapshot(), {}, true);
  CHECK(undamped.step(params, nullptr, 1) < 1e-10);
  (void)e2;
}

TEST_CASE("the clone-count ratio scales the original-side unit factor") {
  // q() is cloned with the formula's <X> signature: one original grounding,
  // two ground equivalences, so the original side accumulates twice the
  // per-ground weight
  ModelPtr m = parse("domain D = {a, b}\npredicate q()\npredicate p(D)\n1.5 q() v p(X)\n");
  RelaxedModel rm = clone_all(m);
  const Equivalence* q_eq = nullptr;
  for (const Equivalence& eq : rm.equivalences)
    if (rm.base->predicates[eq.original.pred].name == "q") q_eq = &eq;
  REQUIRE(q_eq != nullptr);
  CHECK(q_eq->n == 1);
  CHECK(q_eq->n_prime == 2);

  RelaxedModel weighted = rm;
  for (Equivalence& eq : weighted.equivalences)
    if (eq.id == q_eq->id) eq.w = 0.3;
  CompensationEngine engine(weighted, {}, true);
  Atom q_atom = q_eq->original;
  CHECK(engine.marginal_of(q_atom) == doctest::Approx(sigmoid(2 * 0.3)).epsilon(1e-12));

  // with n = n' the unit factor carries the weight itself
  const Equivalence* p_eq = nullptr;
  for (const Equivalence& eq : rm.equivalences)
    if (rm.base->predicates[eq.original.pred].name == "p") p_eq = &eq;
  REQUIRE(p_eq != nullptr);
  CHECK(p_eq->n == p_eq->n_prime);
  RelaxedModel weighted_p = rm;
  for (Equivalence& eq : weighted_p.equivalences)
    if (eq.id == p_eq->id) eq.w = 0.4;
  CompensationEngine engine_p(weighted_p, {}, true);
  Atom p_a = p_eq->original;
  p_a.args[0] = Term::make_const(0, 0);
  CHECK(engine_p.marginal_of(p_a) == doctest::Approx(sigmoid(0.4)).epsilon(1e-12));
}

TEST_CASE("non-count-normalized equivalences are rejected") {
  ModelPtr m = parse("domain D = {a, b, c}\npredicate s(D)\npredicate t(D, D)\n1.0 s(Y) v t(X, Y)\n");
  RelaxedModel rm = clone_all(m);
  const Equivalence* s_eq = nullptr;
  for (const Equivalence& eq : rm.equivalences)
    if (rm.base->predicates[eq.original.pred].name == "s") s_eq = &eq;
  REQUIRE(s_eq != nullptr);

  // X != a, X != Y admits two x for y = a but only one for y != a
  RelaxedModel bad = rm;
  for (Equivalence& eq : bad.equivalences) {
    if (eq.id != s_eq->id) continue;
    eq.constraint.add_neq("X", Term::make_const(0, 0));
    eq.constraint.add_neq("X", Term::make_var("Y", 0));
  }
  CHECK_THROWS_AS(compute_counts(*bad.base, bad.equivalence(s_eq->id)), NotCountNormalizedError);
  CHECK_THROWS_AS(CompensationEngine(bad, {}, true), NotCountNormalizedError);
}

TEST_CASE("exactness under a disconnecting relaxation") {
  // with only the second occurrence's equivalence relaxed, the model splits
  // into two components and compensation is exact
  RelaxedModel rm = clone_all(two_units());
  rm = recover(rm, eq_of_formula(rm, 1).id);
  CompensationParams params;
  params.damping = 0.5;
  params.tol = 1e-13;
  CompensationEngine engine(rm, {}, true);
  CHECK(engine.run(params).converged);
  GroundModel source = ground(two_units());
  MarginalTable exact = brute_force(source);
  for (size_t i = 0; i < source.atoms.size(); ++i)
    CHECK(engine.marginal_of(source.atoms[i]) == doctest::Approx(exact.prob[i]).epsilon(1e-9));
}

TEST_CASE("sequential and simultaneous schedules reach the same fixed point") {
  ModelPtr model;
  for (const auto& cm : rcrtest::corpus())
    if (cm.name == "smokers_2") model = cm.model;
  RelaxedModel rm = partition_all(clone_all(model), constants_of(*model));
  CompensationParams params;
  params.damping = 0.5;
  params.tol = 1e-12;
  CompensationEngine seq(rm, {}, true);
  params.schedule = Schedule::kSequential;
  CHECK(seq.run(params).converged);
  CompensationEngine sim(rm, {}, true);
  params.schedule = Schedule::kSimultaneous;
  CHECK(sim.run(params).converged);
  for (const Equivalence& eq : rm.equivalences) {
    auto [ws, wps] = seq.weights_of(eq.id);
    auto [wm, wpm] = sim.weights_of(eq.id);
    CHECK(ws == doctest::Approx(wm).epsilon(1e-7));
    CHECK(wps == doctest::Approx(wpm).epsilon(1e-7));
  }
}

TEST_CASE("representative choice does not matter for equiprobable cells") {
  ModelPtr model;
  for (const auto& cm : rcrtest::corpus())
    if (cm.name == "smokers_3") model = cm.model;
  RelaxedModel rm = partition_all(clone_all(model), constants_of(*model));
  CompensationParams params;
  params.damping = 0.5;
  params.tol = 1e-12;
  CompensationEngine engine(rm, {}, true);
  CHECK(engine.run(params).converged);
  // at the fixed point every grounding of a cell matches its representative
  for (const Equivalence& eq : rm.equivalences) {
    auto [pr_orig, pr_clone] = engine.representative_pair(eq.id);
    std::vector<VarDecl> vars = eq.vars();
    for (const auto& tuple : solutions(*rm.base, eq.constraint, vars)) {
      std::vector<std::pair<std::string, ConstId>> sub;
      for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
      CHECK(engine.marginal_of(substitute(eq.original, sub)) ==
            doctest::Approx(pr_orig).epsilon(1e-9));
      CHECK(engine.marginal_of(substitute(eq.clone, sub)) ==
            doctest::Approx(pr_clone).epsilon(1e-9));
    }
  }
}

TEST_CASE("fully relaxed compensation matches the loopy BP oracle") {
  for (const auto& name : {"smokers_2", "chain3", "two_formulas_shared"}) {
    CAPTURE(name);
    ModelPtr model;
    for (const auto& cm : rcrtest::corpus())
      if (cm.name == name) model = cm.model;
    REQUIRE(model);

    RelaxedModel rm = partition_all(clone_all(model), constants_of(*model));
    CompensationParams params;
    params.damping = 0.5;
    params.tol = 1e-12;
    params.max_iters = 2000;
    CompensationEngine engine(rm, {}, true);
    CHECK(engine.run(params).converged);

    GroundModel gm = ground(model);
    BpParams bp_params;
    bp_params.tol = 1e-12;
    bp_params.max_iters = 5000;
    BpResult bp = bp_oracle(gm, bp_params);
    CHECK(bp.converged);
    for (size_t i = 0; i < gm.atoms.size(); ++i)
      CHECK(std::abs(engine.marginal_of(gm.atoms[i]) - bp.beliefs[i]) < 1e-6);
  }
}

TEST_CASE("the doubled hard edge oscillates undamped and is reported honestly") {
  ModelPtr model;
  for (const auto& cm : rcrtest::corpus())
    if (cm.name == "oscillator") model = cm.model;
  REQUIRE(model);
  RelaxedModel rm = partition_all(clone_all(model), constants_of(*model));

  CompensationParams params;
  params.damping = 1.0;  // undamped
  params.schedule = Schedule::kSimultaneous;
  params.max_iters = 300;
  CompensationEngine undamped(rm, {}, true);
  CompensationTrace trace = undamped.run(params);
  CHECK_FALSE(trace.converged);

  // damped, the run either converges or still reports a usable state
  params.damping = 0.5;
  params.max_iters = 1000;
  CompensationEngine damped(rm, {}, true);
  CompensationTrace damped_trace = damped.run(params);
  GroundModel gm = ground(model);
  for (const Atom& atom : gm.atoms) {
    double p = damped.marginal_of(atom);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(damped_trace.iterations >= 1);
}

TEST_CASE("trace rows carry the csv schema") {
  RelaxedModel rm = clone_all(two_units());
  CompensationParams params;
  params.damping = 0.5;
  CompensationEngine engine(rm, {}, true);
  CompensationTrace trace = engine.run(params);
  std::string csv = trace_csv(trace);
  CHECK(csv.rfind("iter,eq_id,w,w_prime,delta,residual\n", 0) == 0);
  CHECK(trace.rows.size() == rm.equivalences.size() * trace.iterations);
  CHECK(trace.rows[0].iter == 1);
}

TEST_CASE("residuals fall below 1e-6 at tolerance 1e-8 across the corpus") {
  for (const auto& [name, model] : rcrtest::corpus()) {
    CAPTURE(name);
    GroundModel gm = ground(model);
    if (gm.atoms.size() > 16) continue;
    RelaxedModel rm = partition_all(clone_all(model), constants_of(*model));
    CompensationParams params;
    params.damping = 0.5;
    params.tol = 1e-8;
    CompensationEngine engine(rm, {}, true);
    CompensationTrace trace = engine.run(params);
    if (!trace.converged) continue;  // non-convergence is a legitimate outcome
    for (const Equivalence& eq : rm.equivalences)
      if (eq.status == Equivalence::Status::kRelaxed)
        CHECK(engine.last_residual(eq.id) < 1e-6);
  }
}

TEST_CASE("run_compensation returns the fixed-point model") {
  CompensationParams params;
  params.damping = 0.5;
  params.tol = 1e-12;
  CompensationOutcome outcome = run_compensation(clone_all(two_units()), params);
  CHECK(outcome.trace.converged);
  bool found = false;
  for (const Equivalence& eq : outcome.model.equivalences)
    if (std::abs(eq.w - 1.5) < 1e-9 && std::abs(eq.w_prime - 1.3) < 1e-9) found = true;
  CHECK(found);
}
