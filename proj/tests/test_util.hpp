#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rcr/grounding.hpp"
#include "rcr/parser.hpp"

namespace rcrtest {

inline rcr::ModelPtr parse(const std::string& text) {
  return std::make_shared<rcr::Model>(rcr::parse_model(text));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CorpusModel {
  std::string name;
  rcr::ModelPtr model;
};

inline const std::vector<CorpusModel>& corpus() {
  static std::vector<CorpusModel> models = [] {
    std::vector<CorpusModel> out;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(RCR_CORPUS_DIR))
      if (entry.path().extension() == ".mln") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files)
      out.push_back(CorpusModel{path.stem().string(), parse(read_file(path))});
    return out;
  }();
  return models;
}

/// Independent enumeration oracle: walks every world, evaluates each ground
/// formula by recursing over its body, and sums probability mass in linear
/// space with long doubles. Shares no code with the factor-graph engines
/// beyond the ground model itself.
struct EnumOracle {
  double logZ = 0.0;
  std::vector<double> prob;
  bool feasible = true;
};

inline bool oracle_eval(const rcr::BodyExpr& e, const std::vector<int>& atom_ids,
                        const std::vector<bool>& world) {
  using rcr::BodyExpr;
  switch (e.op) {
    case BodyExpr::kAtom: return world[atom_ids[e.atom]];
    case BodyExpr::kNot: return !oracle_eval(e.kids[0], atom_ids, world);
    case BodyExpr::kAnd:
      return oracle_eval(e.kids[0], atom_ids, world) && oracle_eval(e.kids[1], atom_ids, world);
    case BodyExpr::kOr:
      return oracle_eval(e.kids[0], atom_ids, world) || oracle_eval(e.kids[1], atom_ids, world);
    case BodyExpr::kImplies:
      return !oracle_eval(e.kids[0], atom_ids, world) || oracle_eval(e.kids[1], atom_ids, world);
    case BodyExpr::kIff:
      return oracle_eval(e.kids[0], atom_ids, world) == oracle_eval(e.kids[1], atom_ids, world);
  }
  return false;
}

inline EnumOracle enum_oracle(const rcr::GroundModel& gm) {
  size_t n = gm.atoms.size();
  EnumOracle out;
  out.prob.assign(n, 0.0);
  long double total = 0.0L;
  std::vector<long double> mass(n, 0.0L);
  std::vector<bool> world(n, false);
  for (size_t bits = 0; bits < (size_t{1} << n); ++bits) {
    for (size_t i = 0; i < n; ++i) world[i] = (bits >> i) & 1;
    long double weight = 1.0L;
    for (const rcr::GroundFormula& g : gm.formulas) {
      bool sat = oracle_eval(g.body, g.atom_ids, world);
      if (g.weight.hard) {
        if (!sat) {
          weight = 0.0L;
          break;
        }
      } else if (sat) {
        weight *= std::exp(static_cast<long double>(g.weight.value));
      }
    }
    total += weight;
    for (size_t i = 0; i < n; ++i)
      if (world[i]) mass[i] += weight;
  }
  if (total <= 0.0L) {
    out.feasible = false;
    return out;
  }
  out.logZ = static_cast<double>(std::log(total));
  for (size_t i = 0; i < n; ++i) out.prob[i] = static_cast<double>(mass[i] / total);
  return out;
}

/// Random models for property tests: a few predicates over one small domain,
/// random small bodies. Deterministic in the seed.
inline rcr::ModelPtr random_model(uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int n) { return static_cast<int>(rng() % n); };
  int domain_size = 1 + pick(3);
  std::string text = "domain D = " + std::to_string(domain_size) + "\n";
  int num_preds = 1 + pick(3);
  std::vector<std::string> preds;
  for (int p = 0; p < num_preds; ++p) {
    std::string name = "p" + std::to_string(p);
    int arity = pick(3);
    preds.push_back(name);
    text += "predicate " + name + "(";
    for (int i = 0; i < arity; ++i) text += std::string(i ? ", " : "") + "D";
    text += ")\n";
    if (arity == 0) preds.back() += "()";
    if (arity == 1) preds.back() += "(X)";
    if (arity == 2) preds.back() += "(X, Y)";
  }
  int num_formulas = 1 + pick(3);
  const char* connectives[] = {" => ", " v ", " ^ ", " <=> "};
  for (int f = 0; f < num_formulas; ++f) {
    double w = (pick(41) - 20) / 10.0;
    text += rcr::format_double(w);
    text += " ";
    std::string lhs = preds[pick(num_preds)];
    std::string rhs = preds[pick(num_preds)];
    if (pick(4) == 0) lhs = "!" + lhs;
    text += lhs + connectives[pick(4)] + rhs + "\n";
  }
  return parse(text);
}

}  // namespace rcrtest
