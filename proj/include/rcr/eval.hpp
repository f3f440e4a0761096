#pragma once

#include "rcr/recovery.hpp"

namespace rcr {

/// Built-in benchmark generators: "smokers" uses the classic two rules with
/// weights 1.3/1.5; "smokers_drinkers" and "symmetric_smokers" are
/// representative variants with documented default weights (their published
/// definitions live elsewhere and are not reproduced).
Model generate_model(const std::string& name, int size);

struct BpParams {
  int max_iters = 5000;
  double tol = 1e-10;
  double damping = 0.5;
};

struct BpResult {
  std::vector<double> beliefs;  // per ground atom id
  bool converged = false;
  int iterations = 0;
};

/// Loopy sum-product on the factor graph, flooding schedule with damped
/// messages. Kept independent of the compensation machinery so the two can
/// cross-check each other.
BpResult bp_oracle(const GroundModel& gm, const BpParams& params = {},
                   const InferenceLimits& limits = {});

struct KlBreakdown {
  double raw = 0.0;
  std::vector<std::pair<int, double>> per_atom;  // (atom id, contribution)
};

/// Sum of symmetrized Bernoulli KL divergences over the query atoms.
KlBreakdown kl_metrics(const std::vector<double>& approx, const std::vector<double>& exact,
                       const std::vector<int>& queries, double eps = 1e-12);

struct EvalRow {
  std::string model;
  std::string domains;
  double recovered_fraction = 0.0;
  double raw_kl = 0.0;
  double normalized_kl_pct = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  bool failed = false;
  std::string error;
};

/// Runs rcr at every grid fraction, with the 0% run doubling as the
/// normalization baseline. Query atoms are the original non-evidence ground
/// atoms; grid points run concurrently and report in grid order.
std::vector<EvalRow> sweep(const ModelPtr& model, const std::string& model_name,
                           const std::vector<double>& grid, const RcrOptions& base_opts);

std::string sweep_csv(const std::vector<EvalRow>& rows);

}  // namespace rcr
