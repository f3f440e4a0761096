#include <doctest.h>

#include <cmath>

#include "rcr/errors.hpp"
#include "rcr/inference.hpp"
#include "test_util.hpp"

using namespace rcr;
using rcrtest::parse;

namespace {

double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_against_oracle(const GroundModel& gm, double tol = 1e-9) {
  rcrtest::EnumOracle oracle = rcrtest::enum_oracle(gm);
  if (!oracle.feasible) {
    CHECK_THROWS_AS(brute_force(gm), NoFeasibleWorldError);
    FactorGraph fg = FactorGraph::from_ground(gm);
    CHECK_THROWS_AS(ve_all_marginals(fg), NoFeasibleWorldError);
    return;
  }
  MarginalTable brute = brute_force(gm);
  CHECK(brute.logZ == doctest::Approx(oracle.logZ).epsilon(tol));
  for (size_t i = 0; i < gm.atoms.size(); ++i)
    CHECK(brute.prob[i] == doctest::Approx(oracle.prob[i]).epsilon(tol));

  FactorGraph fg = FactorGraph::from_ground(gm);
  MarginalTable ve = ve_all_marginals(fg);
  CHECK(ve.logZ == doctest::Approx(brute.logZ).epsilon(tol));
  for (size_t i = 0; i < gm.atoms.size(); ++i)
    CHECK(std::abs(ve.prob[i] - brute.prob[i]) < tol);
}

}  // namespace

TEST_CASE("a zero-weight unit clause has probability one half") {
  GroundModel gm = ground(parse("predicate p()\n0 p()\n"));
  MarginalTable t = brute_force(gm);
  CHECK(t.prob[0] == doctest::Approx(0.5));
}

TEST_CASE("a hard unit clause forces its atom") {
  GroundModel gm = ground(parse("predicate p()\nhard p()\n"));
  MarginalTable t = brute_force(gm);
  CHECK(t.prob[0] == doctest::Approx(1.0));
}

TEST_CASE("brute force agrees with an independent enumeration oracle") {
  for (const auto& [name, model] : rcrtest::corpus()) {
    CAPTURE(name);
    GroundModel gm = ground(model);
    if (gm.atoms.size() > 16) continue;  // keep the dumb oracle fast
    check_against_oracle(gm);
  }
}

TEST_CASE("brute force rejects oversized models") {
  ModelPtr m = parse("domain D = 6\npredicate p(D, D)\n0.1 p(X, Y)\n");
  InferenceLimits limits;
  limits.max_brute_atoms = 20;
  CHECK_THROWS_AS(brute_force(ground(m), limits), CapacityError);
}

TEST_CASE("contradictory hard formulas yield the distinguished error") {
  GroundModel gm = ground(parse("predicate p()\nhard p()\nhard !p()\n"));
  CHECK_THROWS_AS(brute_force(gm), NoFeasibleWorldError);
}

TEST_CASE("disconnected unit clauses have closed-form marginals") {
  GroundModel gm = ground(parse("predicate p()\npredicate q()\n1.3 p()\n-0.4 q()\n"));
  FactorGraph fg = FactorGraph::from_ground(gm);
  MarginalTable t = ve_all_marginals(fg);
  CHECK(t.prob[gm.atom_id(gm.atoms[0])] == doctest::Approx(sigma(1.3)).epsilon(1e-12));
  CHECK(t.prob[1] == doctest::Approx(sigma(-0.4)).epsilon(1e-12));
  CHECK(t.logZ ==
        doctest::Approx(std::log1p(std::exp(1.3)) + std::log1p(std::exp(-0.4))).epsilon(1e-12));
}

TEST_CASE("logZ of independent unit clauses sums log(1+e^w)") {
  std::vector<double> weights = {0.3, -1.7, 2.2, 0.0};
  std::string text;
  for (size_t i = 0; i < weights.size(); ++i) text += "predicate u" + std::to_string(i) + "()\n";
  for (size_t i = 0; i < weights.size(); ++i)
    text += format_double(weights[i]) + " u" + std::to_string(i) + "()\n";
  GroundModel gm = ground(parse(text));
  double expected = 0.0;
  for (double w : weights) expected += std::log1p(std::exp(w));
  CHECK(brute_force(gm).logZ == doctest::Approx(expected).epsilon(1e-12));
  FactorGraph fg = FactorGraph::from_ground(gm);
  CHECK(ve_log_partition(fg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("a hard equivalence copies the unit marginal") {
  GroundModel gm = ground(parse("predicate p()\npredicate q()\nhard p() <=> q()\n0.7 p()\n"));
  FactorGraph fg = FactorGraph::from_ground(gm);
  MarginalTable t = ve_all_marginals(fg);
  CHECK(t.prob[0] == doctest::Approx(sigma(0.7)).epsilon(1e-12));
  CHECK(t.prob[1] == doctest::Approx(sigma(0.7)).epsilon(1e-12));
}

TEST_CASE("variable elimination matches brute force on random models") {
  for (uint64_t seed = 100; seed < 140; ++seed) {
    CAPTURE(seed);
    ModelPtr m = rcrtest::random_model(seed);
    GroundModel gm = ground(m);
    if (gm.atoms.size() > 18) continue;
    rcrtest::EnumOracle oracle = rcrtest::enum_oracle(gm);
    if (!oracle.feasible) continue;
    MarginalTable brute = brute_force(gm);
    FactorGraph fg = FactorGraph::from_ground(gm);
    MarginalTable ve = ve_all_marginals(fg);
    CHECK(ve.logZ == doctest::Approx(brute.logZ).epsilon(1e-9));
    for (size_t i = 0; i < gm.atoms.size(); ++i)
      CHECK(std::abs(ve.prob[i] - brute.prob[i]) < 1e-9);
  }
}

TEST_CASE("marginals are normalized by construction") {
  GroundModel gm = ground(parse(
      "domain D = 2\npredicate p(D)\npredicate q(D)\n1.0 p(X) v q(X)\n0.5 p(X)\n"));
  FactorGraph fg = FactorGraph::from_ground(gm);
  MarginalTable t = ve_all_marginals(fg);
  for (size_t i = 0; i < gm.atoms.size(); ++i) {
    CHECK(t.prob[i] >= 0.0);
    CHECK(t.prob[i] <= 1.0);
  }
}

TEST_CASE("hard formulas are the limit of large finite weights") {
  const char* hard_text =
      "domain D = 2\npredicate p(D)\npredicate q(D)\nhard p(X) => q(X)\n0.8 p(X)\n";
  const char* soft_text =
      "domain D = 2\npredicate p(D)\npredicate q(D)\n30 p(X) => q(X)\n0.8 p(X)\n";
  MarginalTable hard = brute_force(ground(parse(hard_text)));
  MarginalTable soft = brute_force(ground(parse(soft_text)));
  for (size_t i = 0; i < hard.prob.size(); ++i)
    CHECK(std::abs(hard.prob[i] - soft.prob[i]) < 1e-6);
}

TEST_CASE("representative marginals answer batched pairs") {
  GroundModel gm = ground(parse(
      "predicate p()\npredicate q()\npredicate r()\n1.2 p() => q()\n0.4 r()\n"));
  int p = 0, q = 1, r = 2;
  auto pairs = representative_marginals(gm, {{p, r}, {q, q}});
  MarginalTable exact = brute_force(gm);
  CHECK(pairs[0].first == doctest::Approx(exact.prob[p]).epsilon(1e-12));
  CHECK(pairs[0].second == doctest::Approx(exact.prob[r]).epsilon(1e-12));
  // querying the same atom twice is deterministic
  CHECK(pairs[1].first == pairs[1].second);
}

TEST_CASE("elimination width limit raises a capacity error") {
  // a single factor over 12 atoms exceeds a deliberately tiny budget
  std::string text = "domain D = 12\npredicate p(D)\n";
  text += "1.0 p(a)";
  for (char c = 'b'; c < 'a' + 12; ++c) text += std::string(" v p(") + c + ")";
  text += "\n";
  GroundModel gm = ground(parse(text));
  InferenceLimits limits;
  limits.max_factor_entries = 1 << 8;
  CHECK_THROWS_AS(FactorGraph::from_ground(gm, limits), CapacityError);
}

TEST_CASE("an empty model has logZ zero and no marginals") {
  GroundModel gm = ground(parse("domain D = 2\npredicate p(D)\n"));
  MarginalTable t = brute_force(gm);
  CHECK(t.logZ == doctest::Approx(0.0));
  CHECK(t.prob.empty());
}
