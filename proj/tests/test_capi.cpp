#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "rcr.h"

namespace {

const char* kSmokers =
    "domain Person = {a, b}\n"
    "predicate smokes(Person)\n"
    "predicate cancer(Person)\n"
    "predicate friends(Person, Person)\n"
    "1.3 smokes(X) => cancer(X)\n"
    "1.5 smokes(X) ^ friends(X,Y) => smokes(Y)\n";

struct Owned {
  char* s = nullptr;
  ~Owned() { rcr_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

struct Handle {
  rcr_model* m = nullptr;
  ~Handle() { rcr_model_free(m); }
};

}  // namespace

TEST_CASE("parse, print, and free a model") {
  Handle h;
  REQUIRE(rcr_model_parse(kSmokers, &h.m) == RCR_OK);
  Owned text;
  REQUIRE(rcr_model_print(h.m, &text.s) == RCR_OK);
  CHECK(text.str().find("1.3  smokes(X) => cancer(X)") != std::string::npos);

  Handle reparsed;
  CHECK(rcr_model_parse(text.s, &reparsed.m) == RCR_OK);
}

TEST_CASE("parse errors surface a status and a message") {
  Handle h;
  CHECK(rcr_model_parse("domain D = 2\n1.0 p(X)\n", &h.m) == RCR_ERR_PARSE);
  CHECK(std::strlen(rcr_last_error()) > 0);
  CHECK(h.m == nullptr);
}

TEST_CASE("null arguments are rejected") {
  CHECK(rcr_model_parse(nullptr, nullptr) == RCR_ERR_INVALID_ARGUMENT);
  Owned out;
  CHECK(rcr_model_print(nullptr, &out.s) == RCR_ERR_INVALID_ARGUMENT);
  CHECK(rcr_exact_json(nullptr, "ve", &out.s) == RCR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("generated models match parsed ones") {
  Handle gen;
  REQUIRE(rcr_model_generate("smokers", 2, &gen.m) == RCR_OK);
  Owned summary;
  REQUIRE(rcr_ground_summary(gen.m, &summary.s) == RCR_OK);
  CHECK(summary.str().find("\"atoms\": 8") != std::string::npos);
  CHECK(summary.str().find("\"formulas\": 6") != std::string::npos);

  Handle bad;
  CHECK(rcr_model_generate("nope", 2, &bad.m) == RCR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("exact marginals via both engines agree") {
  Handle h;
  REQUIRE(rcr_model_parse(kSmokers, &h.m) == RCR_OK);
  Owned ve, brute;
  REQUIRE(rcr_exact_json(h.m, "ve", &ve.s) == RCR_OK);
  REQUIRE(rcr_exact_json(h.m, "brute", &brute.s) == RCR_OK);
  CHECK(ve.str().find("\"logZ\"") != std::string::npos);
  CHECK(ve.str().find("smokes(a)") != std::string::npos);

  Owned bad;
  CHECK(rcr_exact_json(h.m, "magic", &bad.s) == RCR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capacity surfaces as its own status") {
  Handle h;
  // 26 * 26 = 676 ground atoms, far past the brute-force cap
  REQUIRE(rcr_model_parse("domain D = 26\npredicate p(D, D)\n0.1 p(X, Y)\n", &h.m) == RCR_OK);
  Owned out;
  CHECK(rcr_exact_json(h.m, "brute", &out.s) == RCR_ERR_CAPACITY);
}

TEST_CASE("shatter report lists cells and counts") {
  Handle h;
  REQUIRE(rcr_model_parse(kSmokers, &h.m) == RCR_OK);
  Owned json;
  REQUIRE(rcr_shatter_json(h.m, &json.s) == RCR_OK);
  CHECK(json.str().find("\"equivalences\"") != std::string::npos);
  CHECK(json.str().find("\"count_normalized\": true") != std::string::npos);
  CHECK(json.str().find("\"n_prime\"") != std::string::npos);
}

TEST_CASE("rcr run produces marginals, audit, and trace") {
  Handle h;
  REQUIRE(rcr_model_parse(kSmokers, &h.m) == RCR_OK);
  rcr_run_options opts;
  rcr_run_options_init(&opts);
  opts.recover_fraction = 0.5;
  Owned marginals, audit, trace;
  int converged = -1;
  REQUIRE(rcr_run(h.m, &opts, &marginals.s, &audit.s, &trace.s, &converged) == RCR_OK);
  CHECK(converged == 1);
  CHECK(marginals.str().find("\"converged\": true") != std::string::npos);
  CHECK(marginals.str().find("smokes(a)") != std::string::npos);
  CHECK(marginals.str().find("\"recovered\"") != std::string::npos);
  CHECK(audit.str().find("\"recovered_eq\"") != std::string::npos);
  CHECK(trace.str().rfind("iter,eq_id,w,w_prime,delta,residual\n", 0) == 0);
}

TEST_CASE("identical runs return byte-identical outputs") {
  Handle h;
  REQUIRE(rcr_model_parse(kSmokers, &h.m) == RCR_OK);
  rcr_run_options opts;
  rcr_run_options_init(&opts);
  opts.recover_fraction = 0.5;
  opts.seed = 9;
  Owned m1, a1, t1, m2, a2, t2;
  REQUIRE(rcr_run(h.m, &opts, &m1.s, &a1.s, &t1.s, nullptr) == RCR_OK);
  REQUIRE(rcr_run(h.m, &opts, &m2.s, &a2.s, &t2.s, nullptr) == RCR_OK);
  CHECK(m1.str() == m2.str());
  CHECK(a1.str() == a2.str());
  CHECK(t1.str() == t2.str());
}

TEST_CASE("eval sweep returns the versioned csv") {
  Handle h;
  REQUIRE(rcr_model_generate("smokers", 2, &h.m) == RCR_OK);
  rcr_run_options opts;
  rcr_run_options_init(&opts);
  double grid[] = {0.0, 1.0};
  Owned csv;
  REQUIRE(rcr_eval_sweep(h.m, "smokers", &opts, grid, 2, &csv.s) == RCR_OK);
  CHECK(csv.str().rfind("# rcr sweep v1\n", 0) == 0);
  CHECK(csv.str().find("smokers,2,") != std::string::npos);
}
