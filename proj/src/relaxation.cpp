#include "rcr/relaxation.hpp"

#include <map>
#include <set>

#include "rcr/errors.hpp"

namespace rcr {

const Equivalence& RelaxedModel::equivalence(int id) const {
  for (const Equivalence& eq : equivalences)
    if (eq.id == id) return eq;
  throw Error(ErrorCode::kInvalidArgument, "unknown equivalence id " + std::to_string(id));
}

namespace {

std::pair<long, long> enumerate_counts(const Model& m, const Constraint& c, const Atom& original,
                                       const std::vector<VarDecl>& vars) {
  std::set<Atom, bool (*)(const Atom&, const Atom&)> distinct(
      [](const Atom& a, const Atom& b) {
        if (a.pred != b.pred) return a.pred < b.pred;
        if (a.args != b.args) return a.args < b.args;
        return a.tag < b.tag;
      });
  long n_prime = 0;
  for (const std::vector<ConstId>& tuple : solutions(m, c, vars)) {
    std::vector<std::pair<std::string, ConstId>> sub;
    for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
    distinct.insert(substitute(original, sub));
    ++n_prime;
  }
  return {static_cast<long>(distinct.size()), n_prime};
}

}  // namespace

namespace {

Term rename_term(const Term& t, const std::map<std::string, Term>& sub) {
  if (t.is_const()) return t;
  auto it = sub.find(t.var);
  return it == sub.end() ? t : it->second;
}

Atom rename_atom(const Atom& a, const std::map<std::string, Term>& sub) {
  Atom out = a;
  for (Term& t : out.args) t = rename_term(t, sub);
  for (Term& t : out.tag) t = rename_term(t, sub);
  return out;
}

/// Splits a formula by the equality/constant cases under which two of its
/// same-predicate atoms would denote one ground atom. Within each variant a
/// collision is either forced (the atoms become syntactically identical) or
/// excluded by the variant's constraint, so grounding a variant never maps
/// two distinct atoms of its body onto the same ground atom.
std::vector<WeightedFormula> split_collisions(const Model& m, const WeightedFormula& f) {
  std::set<std::string> colliding_vars;
  std::set<ConstId> colliding_consts;
  for (size_t i = 0; i < f.atoms.size(); ++i) {
    for (size_t j = i + 1; j < f.atoms.size(); ++j) {
      if (f.atoms[i].pred != f.atoms[j].pred) continue;
      bool possible = true;
      std::set<std::string> pair_vars;
      std::set<ConstId> pair_consts;
      for (size_t p = 0; p < f.atoms[i].args.size() && possible; ++p) {
        const Term &a = f.atoms[i].args[p], &b = f.atoms[j].args[p];
        if (a.is_const() && b.is_const()) {
          if (a.constant != b.constant) possible = false;
        } else if (a.is_var() && b.is_var()) {
          if (a.var == b.var) continue;
          if (a.domain != b.domain) {
            possible = false;
          } else {
            pair_vars.insert(a.var);
            pair_vars.insert(b.var);
          }
        } else {
          const Term& var = a.is_var() ? a : b;
          const Term& con = a.is_const() ? a : b;
          pair_vars.insert(var.var);
          pair_consts.insert(con.constant);
        }
      }
      if (!possible || (pair_vars.empty() && pair_consts.empty())) continue;
      colliding_vars.insert(pair_vars.begin(), pair_vars.end());
      colliding_consts.insert(pair_consts.begin(), pair_consts.end());
    }
  }
  if (colliding_vars.empty() && colliding_consts.empty()) return {f};

  std::vector<VarDecl> case_vars;
  std::vector<VarDecl> all_vars;
  for (size_t i = 0; i < f.logvars.size(); ++i) {
    all_vars.push_back(VarDecl{f.logvars[i], f.logvar_domains[i]});
    if (colliding_vars.count(f.logvars[i])) case_vars.push_back(all_vars.back());
  }
  std::vector<ConstId> case_consts(colliding_consts.begin(), colliding_consts.end());

  std::vector<WeightedFormula> variants;
  for (const EqualityCase& c : equality_cases(m, case_vars, case_consts)) {
    Constraint cell = c.to_constraint(m, case_vars, case_consts);
    Constraint combined = f.constraint;
    for (const AtomicConstraint& ac : cell.conjuncts) combined.add(ac);
    if (solutions(m, combined, all_vars).empty()) continue;

    // bound case variables become constants, merged blocks collapse onto the
    // first member of the block
    std::map<std::string, Term> sub;
    for (size_t v = 0; v < case_vars.size(); ++v) {
      if (c.binding[v] >= 0) {
        sub[case_vars[v].name] = Term::make_const(c.binding[v], case_vars[v].domain);
        continue;
      }
      for (size_t u = 0; u < v; ++u) {
        if (c.block[u] == c.block[v] && c.binding[u] < 0) {
          sub[case_vars[v].name] = Term::make_var(case_vars[u].name, case_vars[u].domain);
          break;
        }
      }
    }

    WeightedFormula variant;
    variant.id = f.id;  // the caller renumbers the extra variants
    variant.weight = f.weight;
    variant.atoms.reserve(f.atoms.size());
    for (const Atom& a : f.atoms) variant.atoms.push_back(rename_atom(a, sub));
    variant.body = f.body;
    bool consistent = true;
    for (const AtomicConstraint& ac : combined.conjuncts) {
      Term lhs = rename_term(Term::make_var(ac.var, -1), sub);
      Term rhs = rename_term(ac.rhs, sub);
      if (lhs.is_const() && rhs.is_const()) {
        bool eq = lhs.constant == rhs.constant;
        if (ac.rel == AtomicConstraint::kEq ? !eq : eq) consistent = false;
        continue;
      }
      if (lhs.is_var() && rhs.is_var() && lhs.var == rhs.var) {
        if (ac.rel == AtomicConstraint::kNeq) consistent = false;
        continue;
      }
      AtomicConstraint out;
      out.rel = ac.rel;
      if (lhs.is_var()) {
        out.var = lhs.var;
        out.rhs = rhs;
      } else {
        out.var = rhs.var;
        out.rhs = lhs;
      }
      variant.constraint.add(std::move(out));
    }
    if (!consistent) continue;
    for (size_t i = 0; i < f.logvars.size(); ++i) {
      const std::string& name = f.logvars[i];
      if (sub.count(name)) continue;
      variant.logvars.push_back(name);
      variant.logvar_domains.push_back(f.logvar_domains[i]);
    }
    // the generic variant (identity substitution) keeps the source formula's
    // id, so clone names of collision-free groundings stay stable
    if (sub.empty())
      variants.insert(variants.begin(), std::move(variant));
    else
      variants.push_back(std::move(variant));
  }
  return variants;
}

}  // namespace

RelaxedModel clone_all(const ModelPtr& model) {
  auto base = std::make_shared<Model>(*model);
  RelaxedModel rm;
  rm.source = model;

  // resolve within-formula collisions first, so that grounding a base formula
  // never repeats a clone's original atom
  std::vector<WeightedFormula> formulas;
  std::vector<WeightedFormula> extras;
  int next_id = 0;
  for (const WeightedFormula& f : base->formulas) next_id = std::max(next_id, f.id);
  for (const WeightedFormula& f : base->formulas) {
    std::vector<WeightedFormula> variants = split_collisions(*base, f);
    for (size_t i = 0; i < variants.size(); ++i) {
      if (i == 0) {
        formulas.push_back(std::move(variants[i]));
      } else {
        variants[i].id = ++next_id;
        extras.push_back(std::move(variants[i]));
      }
    }
  }
  formulas.insert(formulas.end(), std::make_move_iterator(extras.begin()),
                  std::make_move_iterator(extras.end()));
  base->formulas = std::move(formulas);

  std::vector<Equivalence> eqs;
  for (WeightedFormula& f : base->formulas) {
    std::map<std::string, int> letters_of_base;  // per-predicate lettering
    std::vector<std::pair<Atom, Atom>> cloned;   // distinct atoms share a clone
    for (Atom& occurrence : f.atoms) {
      Atom source_atom = occurrence;
      bool seen = false;
      for (const auto& [orig, clone] : cloned) {
        if (orig == source_atom) {
          occurrence = clone;
          seen = true;
          break;
        }
      }
      if (seen) continue;

      const Predicate& source_pred = base->predicates[source_atom.pred];
      int occ_index = letters_of_base[source_pred.name]++;

      Predicate clone_pred;
      clone_pred.name = source_pred.name;
      clone_pred.arg_domains = source_pred.arg_domains;
      clone_pred.tag = CloneTag{f.id, occ_index, f.logvars, f.logvar_domains};
      PredId clone_id = base->add_predicate(std::move(clone_pred));

      Atom clone = source_atom;
      clone.pred = clone_id;
      clone.tag.clear();
      for (size_t i = 0; i < f.logvars.size(); ++i)
        clone.tag.push_back(Term::make_var(f.logvars[i], f.logvar_domains[i]));

      Equivalence eq;
      eq.id = static_cast<int>(eqs.size());
      eq.constraint = f.constraint;
      eq.original = source_atom;
      eq.clone = clone;
      eq.status = Equivalence::Status::kRelaxed;
      auto [n, n_prime] = enumerate_counts(*base, eq.constraint, eq.original, eq.vars());
      eq.n = n;
      eq.n_prime = n_prime;
      eqs.push_back(std::move(eq));

      cloned.emplace_back(source_atom, clone);
      occurrence = clone;
    }
  }
  rm.base = std::move(base);
  rm.equivalences = std::move(eqs);
  return rm;
}

RelaxedModel recover(const RelaxedModel& rm, int eq_id) {
  RelaxedModel out = rm;
  for (Equivalence& eq : out.equivalences) {
    if (eq.id != eq_id) continue;
    if (eq.status == Equivalence::Status::kRecovered)
      throw Error(ErrorCode::kInvalidArgument,
                  "equivalence " + std::to_string(eq_id) + " is already recovered");
    eq.status = Equivalence::Status::kRecovered;
    eq.w = 0.0;
    eq.w_prime = 0.0;
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown equivalence id " + std::to_string(eq_id));
}

RelaxedModel relax(const RelaxedModel& rm, int eq_id, double w0, double w0_prime) {
  RelaxedModel out = rm;
  for (Equivalence& eq : out.equivalences) {
    if (eq.id != eq_id) continue;
    if (eq.status == Equivalence::Status::kRelaxed)
      throw Error(ErrorCode::kInvalidArgument,
                  "equivalence " + std::to_string(eq_id) + " is already relaxed");
    eq.status = Equivalence::Status::kRelaxed;
    eq.w = w0;
    eq.w_prime = w0_prime;
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown equivalence id " + std::to_string(eq_id));
}

Model derived_model(const RelaxedModel& rm, const DerivedModelOptions& opts) {
  Model m = *rm.base;
  if (!opts.evidence) m.evidence.clear();
  int next_id = 0;
  for (const WeightedFormula& f : m.formulas) next_id = std::max(next_id, f.id);

  auto add_unit = [&m, &next_id](double weight, const Constraint& c, const Atom& atom,
                                 const std::vector<VarDecl>& vars) {
    WeightedFormula f;
    f.id = ++next_id;
    f.weight = Weight::soft(weight);
    f.constraint = c;
    f.atoms = {atom};
    f.body = BodyExpr::leaf(0);
    for (const VarDecl& v : vars) {
      f.logvars.push_back(v.name);
      f.logvar_domains.push_back(v.domain);
    }
    m.formulas.push_back(std::move(f));
  };

  for (const Equivalence& eq : rm.equivalences) {
    std::vector<VarDecl> vars = eq.vars();
    if (eq.status == Equivalence::Status::kRelaxed) {
      if (!opts.compensations) continue;
      add_unit(eq.w, eq.constraint, eq.original, vars);
      add_unit(eq.w_prime, eq.constraint, eq.clone, vars);
    } else if (opts.recovered) {
      WeightedFormula f;
      f.id = ++next_id;
      f.weight = Weight::hard_weight();
      f.constraint = eq.constraint;
      f.atoms = {eq.original, eq.clone};
      f.body = BodyExpr::node(BodyExpr::kIff, {BodyExpr::leaf(0), BodyExpr::leaf(1)});
      for (const VarDecl& v : vars) {
        f.logvars.push_back(v.name);
        f.logvar_domains.push_back(v.domain);
      }
      m.formulas.push_back(std::move(f));
    }
  }
  return m;
}

std::string to_string(const Model& m, const Equivalence& eq) {
  std::string s;
  if (!eq.constraint.is_trivial()) s += to_string(m, eq.constraint) + ", ";
  s += to_string(m, eq.original) + " <=> " + to_string(m, eq.clone);
  return s;
}

}  // namespace rcr
