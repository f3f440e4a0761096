#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rcr {

using DomainId = int;
using ConstId = int;
using PredId = int;

struct DomainDecl {
  std::string name;
  std::vector<ConstId> constants;  // in declared order
};

struct Constant {
  std::string name;
  DomainId domain = -1;
};

/// Identifies a cloned predicate: source formula, which occurrence of the base
/// predicate inside it (0 = 'a', 1 = 'b', ...), and the logical variables of
/// the source formula.
struct CloneTag {
  int formula_id = 0;
  int occurrence = 0;
  std::vector<std::string> logvars;
  std::vector<DomainId> logvar_domains;

  bool operator==(const CloneTag& o) const {
    return formula_id == o.formula_id && occurrence == o.occurrence && logvars == o.logvars;
  }
};

struct Predicate {
  std::string name;  // base name, without any clone tag
  std::vector<DomainId> arg_domains;
  std::optional<CloneTag> tag;

  bool is_clone() const { return tag.has_value(); }
  int arity() const { return static_cast<int>(arg_domains.size()); }
};

struct Term {
  enum Kind : uint8_t { kConst, kVar };

  Kind kind = kConst;
  ConstId constant = -1;  // valid when kind == kConst
  std::string var;        // valid when kind == kVar
  DomainId domain = -1;

  static Term make_const(ConstId c, DomainId d) {
    Term t;
    t.kind = kConst;
    t.constant = c;
    t.domain = d;
    return t;
  }
  static Term make_var(std::string name, DomainId d) {
    Term t;
    t.kind = kVar;
    t.var = std::move(name);
    t.domain = d;
    return t;
  }

  bool is_const() const { return kind == kConst; }
  bool is_var() const { return kind == kVar; }

  bool operator==(const Term& o) const {
    if (kind != o.kind) return false;
    return kind == kConst ? constant == o.constant : var == o.var;
  }
  bool operator<(const Term& o) const {
    if (kind != o.kind) return kind < o.kind;
    return kind == kConst ? constant < o.constant : var < o.var;
  }
};

/// An atom over a (possibly cloned) predicate. For clone predicates `tag`
/// instantiates the clone's logical-variable signature; grounding a clone atom
/// binds the tag as well, which is what keeps distinct groundings of one
/// formula on distinct clone atoms.
struct Atom {
  PredId pred = -1;
  std::vector<Term> args;
  std::vector<Term> tag;

  bool is_ground() const {
    for (const Term& t : args)
      if (t.is_var()) return false;
    for (const Term& t : tag)
      if (t.is_var()) return false;
    return true;
  }

  bool operator==(const Atom& o) const {
    return pred == o.pred && args == o.args && tag == o.tag;
  }
};

struct AtomHash {
  size_t operator()(const Atom& a) const {
    size_t h = std::hash<int>()(a.pred);
    auto mix = [&h](size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    for (const Term& t : a.args) {
      mix(t.is_const() ? std::hash<int>()(t.constant) : std::hash<std::string>()(t.var));
    }
    for (const Term& t : a.tag) {
      mix(t.is_const() ? std::hash<int>()(t.constant) : std::hash<std::string>()(t.var));
    }
    return h;
  }
};

/// One (in)equality between a variable and a constant or another variable.
/// Variable-variable conjuncts keep their endpoints sorted by name.
struct AtomicConstraint {
  enum Rel : uint8_t { kEq, kNeq };

  Rel rel = kEq;
  std::string var;  // lhs variable name
  Term rhs;         // constant or variable

  bool operator==(const AtomicConstraint& o) const {
    return rel == o.rel && var == o.var && rhs == o.rhs;
  }
  bool operator<(const AtomicConstraint& o) const {
    bool vc = rhs.is_const(), ovc = o.rhs.is_const();
    if (vc != ovc) return vc > ovc;  // var-const conjuncts sort first
    if (var != o.var) return var < o.var;
    if (!(rhs == o.rhs)) return rhs < o.rhs;
    return rel < o.rel;
  }
};

/// Conjunction of atomic (in)equality constraints, kept sorted and deduplicated
/// so that structural equality is set equality. Empty means trivially true.
struct Constraint {
  std::vector<AtomicConstraint> conjuncts;

  static Constraint trivial() { return Constraint{}; }

  bool is_trivial() const { return conjuncts.empty(); }
  void add_eq(const std::string& var, Term rhs);
  void add_neq(const std::string& var, Term rhs);
  void add(AtomicConstraint c);
  void normalize();

  bool operator==(const Constraint& o) const { return conjuncts == o.conjuncts; }
  bool operator<(const Constraint& o) const;
};

struct Weight {
  bool hard = false;
  double value = 0.0;

  static Weight soft(double w) { return Weight{false, w}; }
  static Weight hard_weight() { return Weight{true, 0.0}; }
};

/// Propositional body over atom occurrences. Leaves index into the owning
/// formula's occurrence list, so every syntactic occurrence stays addressable.
struct BodyExpr {
  enum Op : uint8_t { kAtom, kNot, kAnd, kOr, kImplies, kIff };

  Op op = kAtom;
  int atom = -1;
  std::vector<BodyExpr> kids;

  static BodyExpr leaf(int occurrence) {
    BodyExpr e;
    e.op = kAtom;
    e.atom = occurrence;
    return e;
  }
  static BodyExpr node(Op op, std::vector<BodyExpr> kids) {
    BodyExpr e;
    e.op = op;
    e.kids = std::move(kids);
    return e;
  }
};

struct WeightedFormula {
  int id = 0;
  Weight weight;
  Constraint constraint;
  std::vector<Atom> atoms;  // occurrences, left to right
  BodyExpr body;
  std::vector<std::string> logvars;  // first-occurrence order
  std::vector<DomainId> logvar_domains;
};

struct GroundLiteral {
  Atom atom;
  bool value = true;
};

struct Model {
  std::vector<DomainDecl> domains;
  std::vector<Constant> constants;
  std::vector<Predicate> predicates;
  std::vector<WeightedFormula> formulas;
  std::vector<GroundLiteral> evidence;

  int domain_id(std::string_view name) const;
  ConstId constant_id(std::string_view name) const;
  /// Base (non-clone) predicate lookup by name.
  PredId predicate_id(std::string_view name) const;

  DomainId add_domain(const std::string& name);
  ConstId add_constant(const std::string& name, DomainId domain);
  PredId add_predicate(Predicate p);

  const std::vector<ConstId>& domain_constants(DomainId d) const { return domains[d].constants; }
};

using ModelPtr = std::shared_ptr<const Model>;

// ---- printing ----------------------------------------------------------

std::string predicate_name(const Model& m, PredId p);
std::string to_string(const Model& m, const Term& t);
std::string to_string(const Model& m, const Atom& a);
std::string to_string(const Model& m, const Constraint& c);
std::string to_string(const Model& m, const BodyExpr& body, const std::vector<Atom>& atoms);
std::string to_string(const Model& m, const WeightedFormula& f);
/// Renders the whole model in the input text format.
std::string to_text(const Model& m);
std::string format_double(double v);

// ---- operations --------------------------------------------------------

/// All constants explicitly mentioned in formulas, constraints, and evidence
/// (not the declared domain contents). Sorted by id.
std::vector<ConstId> constants_of(const Model& m);

/// One logical variable together with its domain.
struct VarDecl {
  std::string name;
  DomainId domain = -1;
};

/// Enumerates all assignments of `vars` to domain constants that satisfy the
/// constraint; tuples come out lexicographically in declared constant order.
std::vector<std::vector<ConstId>> solutions(const Model& m, const Constraint& c,
                                            const std::vector<VarDecl>& vars);

long count_solutions(const Model& m, const Constraint& c, const std::vector<VarDecl>& vars);

/// Evaluates a constraint under an assignment (variable name -> constant).
bool satisfies(const Constraint& c,
               const std::vector<std::pair<std::string, ConstId>>& assignment);

/// Distinct variables of an atom (args then tag, first-occurrence order).
std::vector<VarDecl> atom_vars(const Atom& a);

/// One case of the constant/equality case analysis over a variable tuple:
/// each variable is either bound to a constant from K or excluded from all of
/// them, and unbound same-domain variables fall into equality blocks.
struct EqualityCase {
  std::vector<ConstId> binding;  // per var; -1 = excluded from every K constant
  std::vector<int> block;        // per var; block ids are domain-pure

  /// Canonical cell constraint: bindings, exclusions for unbound variables,
  /// and the block (in)equalities not already implied by the constant cases.
  Constraint to_constraint(const Model& m, const std::vector<VarDecl>& vars,
                           const std::vector<ConstId>& K) const;
};

/// Enumerates every consistent combination of per-variable constant cases
/// (against K) and domain-pure equality partitions, in deterministic order.
/// The cases partition the set of assignments of `vars`.
std::vector<EqualityCase> equality_cases(const Model& m, const std::vector<VarDecl>& vars,
                                         const std::vector<ConstId>& K);

/// Applies a substitution to a term/atom; unbound variables stay variables.
Term substitute(const Term& t, const std::vector<std::pair<std::string, ConstId>>& sub);
Atom substitute(const Atom& a, const std::vector<std::pair<std::string, ConstId>>& sub);

/// Structural equality of two models, ignoring formatting.
bool structurally_equal(const Model& a, const Model& b);

}  // namespace rcr
