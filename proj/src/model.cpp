#include "rcr/model.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "rcr/errors.hpp"

namespace rcr {

void Constraint::add(AtomicConstraint c) {
  // keep var-var endpoints sorted by name
  if (c.rhs.is_var() && c.rhs.var < c.var) {
    std::string tmp = c.var;
    c.var = c.rhs.var;
    c.rhs.var = tmp;
  }
  conjuncts.push_back(std::move(c));
  normalize();
}

void Constraint::add_eq(const std::string& var, Term rhs) {
  AtomicConstraint c;
  c.rel = AtomicConstraint::kEq;
  c.var = var;
  c.rhs = std::move(rhs);
  add(std::move(c));
}

void Constraint::add_neq(const std::string& var, Term rhs) {
  AtomicConstraint c;
  c.rel = AtomicConstraint::kNeq;
  c.var = var;
  c.rhs = std::move(rhs);
  add(std::move(c));
}

void Constraint::normalize() {
  std::sort(conjuncts.begin(), conjuncts.end());
  conjuncts.erase(std::unique(conjuncts.begin(), conjuncts.end()), conjuncts.end());
}

bool Constraint::operator<(const Constraint& o) const {
  return std::lexicographical_compare(conjuncts.begin(), conjuncts.end(), o.conjuncts.begin(),
                                      o.conjuncts.end());
}

int Model::domain_id(std::string_view name) const {
  for (size_t i = 0; i < domains.size(); ++i)
    if (domains[i].name == name) return static_cast<int>(i);
  return -1;
}

ConstId Model::constant_id(std::string_view name) const {
  for (size_t i = 0; i < constants.size(); ++i)
    if (constants[i].name == name) return static_cast<int>(i);
  return -1;
}

PredId Model::predicate_id(std::string_view name) const {
  for (size_t i = 0; i < predicates.size(); ++i)
    if (!predicates[i].is_clone() && predicates[i].name == name) return static_cast<int>(i);
  return -1;
}

DomainId Model::add_domain(const std::string& name) {
  domains.push_back(DomainDecl{name, {}});
  return static_cast<DomainId>(domains.size() - 1);
}

ConstId Model::add_constant(const std::string& name, DomainId domain) {
  constants.push_back(Constant{name, domain});
  ConstId id = static_cast<ConstId>(constants.size() - 1);
  domains[domain].constants.push_back(id);
  return id;
}

PredId Model::add_predicate(Predicate p) {
  predicates.push_back(std::move(p));
  return static_cast<PredId>(predicates.size() - 1);
}

// ---- printing ----------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string predicate_name(const Model& m, PredId p) {
  const Predicate& pred = m.predicates[p];
  if (!pred.is_clone()) return pred.name;
  const CloneTag& tag = *pred.tag;
  std::string s = pred.name + "_" + std::to_string(tag.formula_id);
  // occurrence 0 -> a, 1 -> b, ...; spills into aa, ab, ... beyond 26
  int occ = tag.occurrence;
  std::string letters;
  do {
    letters.insert(letters.begin(), static_cast<char>('a' + occ % 26));
    occ = occ / 26 - 1;
  } while (occ >= 0);
  s += letters;
  return s;
}

std::string to_string(const Model& m, const Term& t) {
  return t.is_const() ? m.constants[t.constant].name : t.var;
}

std::string to_string(const Model& m, const Atom& a) {
  std::string s = predicate_name(m, a.pred);
  if (!a.tag.empty()) {
    s += "<";
    for (size_t i = 0; i < a.tag.size(); ++i) {
      if (i) s += ",";
      s += to_string(m, a.tag[i]);
    }
    s += ">";
  }
  s += "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ", ";
    s += to_string(m, a.args[i]);
  }
  s += ")";
  return s;
}

std::string to_string(const Model& m, const Constraint& c) {
  std::string s;
  for (size_t i = 0; i < c.conjuncts.size(); ++i) {
    const AtomicConstraint& ac = c.conjuncts[i];
    if (i) s += ", ";
    s += ac.var;
    s += ac.rel == AtomicConstraint::kEq ? " = " : " != ";
    s += to_string(m, ac.rhs);
  }
  return s;
}

namespace {

int precedence(BodyExpr::Op op) {
  switch (op) {
    case BodyExpr::kIff: return 0;
    case BodyExpr::kImplies: return 1;
    case BodyExpr::kOr: return 2;
    case BodyExpr::kAnd: return 3;
    case BodyExpr::kNot: return 4;
    case BodyExpr::kAtom: return 5;
  }
  return 5;
}

void print_body(const Model& m, const BodyExpr& e, const std::vector<Atom>& atoms, int parent_prec,
                std::string& out) {
  int prec = precedence(e.op);
  bool parens = prec < parent_prec;
  if (parens) out += "(";
  switch (e.op) {
    case BodyExpr::kAtom:
      out += to_string(m, atoms[e.atom]);
      break;
    case BodyExpr::kNot:
      out += "!";
      print_body(m, e.kids[0], atoms, prec + 1, out);
      break;
    case BodyExpr::kAnd:
    case BodyExpr::kOr:
    case BodyExpr::kImplies:
    case BodyExpr::kIff: {
      const char* sep = e.op == BodyExpr::kAnd      ? " ^ "
                        : e.op == BodyExpr::kOr     ? " v "
                        : e.op == BodyExpr::kImplies ? " => "
                                                     : " <=> ";
      // => and <=> are right-associative in the grammar
      bool right_assoc = e.op == BodyExpr::kImplies || e.op == BodyExpr::kIff;
      print_body(m, e.kids[0], atoms, right_assoc ? prec + 1 : prec, out);
      out += sep;
      print_body(m, e.kids[1], atoms, right_assoc ? prec : prec + 1, out);
      break;
    }
  }
  if (parens) out += ")";
}

}  // namespace

std::string to_string(const Model& m, const BodyExpr& body, const std::vector<Atom>& atoms) {
  std::string s;
  print_body(m, body, atoms, 0, s);
  return s;
}

std::string to_string(const Model& m, const WeightedFormula& f) {
  std::string s = f.weight.hard ? "hard" : format_double(f.weight.value);
  s += "  ";
  if (!f.constraint.is_trivial()) {
    s += to_string(m, f.constraint);
    s += ", ";
  }
  s += to_string(m, f.body, f.atoms);
  return s;
}

std::string to_text(const Model& m) {
  std::string s;
  for (const DomainDecl& d : m.domains) {
    s += "domain " + d.name + " = {";
    for (size_t i = 0; i < d.constants.size(); ++i) {
      if (i) s += ", ";
      s += m.constants[d.constants[i]].name;
    }
    s += "}\n";
  }
  for (const Predicate& p : m.predicates) {
    if (p.is_clone()) continue;
    s += "predicate " + p.name + "(";
    for (size_t i = 0; i < p.arg_domains.size(); ++i) {
      if (i) s += ", ";
      s += m.domains[p.arg_domains[i]].name;
    }
    s += ")\n";
  }
  for (const WeightedFormula& f : m.formulas) {
    s += to_string(m, f);
    s += "\n";
  }
  for (const GroundLiteral& ev : m.evidence) {
    s += "evidence ";
    if (!ev.value) s += "!";
    s += to_string(m, ev.atom);
    s += "\n";
  }
  return s;
}

// ---- operations --------------------------------------------------------

namespace {

void collect_term_constants(const Term& t, std::set<ConstId>& out) {
  if (t.is_const()) out.insert(t.constant);
}

void collect_atom_constants(const Atom& a, std::set<ConstId>& out) {
  for (const Term& t : a.args) collect_term_constants(t, out);
  for (const Term& t : a.tag) collect_term_constants(t, out);
}

}  // namespace

std::vector<ConstId> constants_of(const Model& m) {
  std::set<ConstId> found;
  for (const WeightedFormula& f : m.formulas) {
    for (const Atom& a : f.atoms) collect_atom_constants(a, found);
    for (const AtomicConstraint& c : f.constraint.conjuncts)
      collect_term_constants(c.rhs, found);
  }
  for (const GroundLiteral& ev : m.evidence) collect_atom_constants(ev.atom, found);
  return std::vector<ConstId>(found.begin(), found.end());
}

bool satisfies(const Constraint& c,
               const std::vector<std::pair<std::string, ConstId>>& assignment) {
  auto lookup = [&assignment](const std::string& var) -> ConstId {
    for (const auto& [name, value] : assignment)
      if (name == var) return value;
    return -1;
  };
  for (const AtomicConstraint& ac : c.conjuncts) {
    ConstId lhs = lookup(ac.var);
    ConstId rhs = ac.rhs.is_const() ? ac.rhs.constant : lookup(ac.rhs.var);
    if (lhs < 0 || rhs < 0)
      throw Error(ErrorCode::kInvalidArgument,
                  "constraint references a variable outside its scope: " + ac.var);
    bool eq = lhs == rhs;
    if (ac.rel == AtomicConstraint::kEq ? !eq : eq) return false;
  }
  return true;
}

std::vector<std::vector<ConstId>> solutions(const Model& m, const Constraint& c,
                                            const std::vector<VarDecl>& vars) {
  std::vector<std::vector<ConstId>> out;
  std::vector<std::pair<std::string, ConstId>> assignment;
  assignment.reserve(vars.size());
  for (const VarDecl& v : vars) assignment.emplace_back(v.name, -1);

  std::vector<ConstId> tuple(vars.size(), -1);
  // odometer over declared constant order; first variable most significant
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == vars.size()) {
      if (satisfies(c, assignment)) out.push_back(tuple);
      return;
    }
    for (ConstId k : m.domains[vars[i].domain].constants) {
      tuple[i] = k;
      assignment[i].second = k;
      rec(i + 1);
    }
    assignment[i].second = -1;
  };
  rec(0);
  return out;
}

long count_solutions(const Model& m, const Constraint& c, const std::vector<VarDecl>& vars) {
  return static_cast<long>(solutions(m, c, vars).size());
}

std::vector<VarDecl> atom_vars(const Atom& a) {
  std::vector<VarDecl> vars;
  auto push = [&vars](const Term& t) {
    if (!t.is_var()) return;
    for (const VarDecl& v : vars)
      if (v.name == t.var) return;
    vars.push_back(VarDecl{t.var, t.domain});
  };
  for (const Term& t : a.args) push(t);
  for (const Term& t : a.tag) push(t);
  return vars;
}

Constraint EqualityCase::to_constraint(const Model& m, const std::vector<VarDecl>& vars,
                                       const std::vector<ConstId>& K) const {
  Constraint cell;
  int n = static_cast<int>(vars.size());
  for (int v = 0; v < n; ++v) {
    if (binding[v] >= 0) {
      cell.add_eq(vars[v].name, Term::make_const(binding[v], vars[v].domain));
    } else {
      for (ConstId k : K)
        if (m.constants[k].domain == vars[v].domain)
          cell.add_neq(vars[v].name, Term::make_const(k, vars[v].domain));
    }
  }
  // pair conjuncts only where the constant cases leave the relation open
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (vars[u].domain != vars[v].domain) continue;
      if (binding[u] >= 0 || binding[v] >= 0) continue;
      if (block[u] == block[v])
        cell.add_eq(vars[u].name, Term::make_var(vars[v].name, vars[v].domain));
      else
        cell.add_neq(vars[u].name, Term::make_var(vars[v].name, vars[v].domain));
    }
  }
  return cell;
}

namespace {

// set partitions in restricted-growth order, blocks limited to one domain
std::vector<std::vector<int>> domain_pure_partitions(const std::vector<VarDecl>& vars) {
  int n = static_cast<int>(vars.size());
  std::vector<std::vector<int>> out;
  std::vector<int> rgs(n, 0);
  std::function<void(int, int)> rec = [&](int i, int max_block) {
    if (i == n) {
      out.push_back(rgs);
      return;
    }
    for (int b = 0; b <= max_block; ++b) {
      bool ok = true;
      for (int j = 0; j < i && ok; ++j)
        if (rgs[j] == b && vars[j].domain != vars[i].domain) ok = false;
      if (!ok) continue;
      rgs[i] = b;
      rec(i + 1, std::max(max_block, b + 1));
    }
  };
  if (n == 0)
    out.push_back({});
  else
    rec(0, 0);
  return out;
}

}  // namespace

std::vector<EqualityCase> equality_cases(const Model& m, const std::vector<VarDecl>& vars,
                                         const std::vector<ConstId>& K) {
  int n = static_cast<int>(vars.size());
  std::vector<std::vector<ConstId>> options(n);
  for (int v = 0; v < n; ++v) {
    for (ConstId k : K)
      if (m.constants[k].domain == vars[v].domain) options[v].push_back(k);
    options[v].push_back(-1);
  }
  std::vector<std::vector<int>> partitions = domain_pure_partitions(vars);

  std::vector<EqualityCase> out;
  std::vector<int> choice(n, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i < n) {
      for (size_t c = 0; c < options[i].size(); ++c) {
        choice[i] = static_cast<int>(c);
        rec(i + 1);
      }
      return;
    }
    std::vector<ConstId> binding(n);
    for (int v = 0; v < n; ++v) binding[v] = options[v][choice[v]];
    for (const std::vector<int>& blocks : partitions) {
      bool consistent = true;
      int num_blocks = blocks.empty() ? 0 : *std::max_element(blocks.begin(), blocks.end()) + 1;
      for (int b = 0; b < num_blocks && consistent; ++b) {
        ConstId bound = -2;
        bool has_unbound = false;
        for (int v = 0; v < n; ++v) {
          if (blocks[v] != b) continue;
          if (binding[v] < 0)
            has_unbound = true;
          else if (bound == -2)
            bound = binding[v];
          else if (bound != binding[v])
            consistent = false;
        }
        // an unbound variable excludes every K constant, so it cannot sit in
        // a block that is pinned to one
        if (bound >= 0 && has_unbound) consistent = false;
      }
      for (int u = 0; u < n && consistent; ++u)
        for (int v = u + 1; v < n && consistent; ++v)
          if (blocks[u] != blocks[v] && vars[u].domain == vars[v].domain &&
              binding[u] >= 0 && binding[u] == binding[v])
            consistent = false;
      if (!consistent) continue;
      out.push_back(EqualityCase{binding, blocks});
    }
  };
  if (n == 0)
    out.push_back(EqualityCase{{}, {}});
  else
    rec(0);
  return out;
}

Term substitute(const Term& t, const std::vector<std::pair<std::string, ConstId>>& sub) {
  if (t.is_const()) return t;
  for (const auto& [name, value] : sub)
    if (name == t.var) return Term::make_const(value, t.domain);
  return t;
}

Atom substitute(const Atom& a, const std::vector<std::pair<std::string, ConstId>>& sub) {
  Atom out = a;
  for (Term& t : out.args) t = substitute(t, sub);
  for (Term& t : out.tag) t = substitute(t, sub);
  return out;
}

namespace {

bool body_equal(const BodyExpr& a, const BodyExpr& b) {
  if (a.op != b.op || a.atom != b.atom || a.kids.size() != b.kids.size()) return false;
  for (size_t i = 0; i < a.kids.size(); ++i)
    if (!body_equal(a.kids[i], b.kids[i])) return false;
  return true;
}

}  // namespace

bool structurally_equal(const Model& a, const Model& b) {
  if (a.domains.size() != b.domains.size() || a.constants.size() != b.constants.size() ||
      a.predicates.size() != b.predicates.size() || a.formulas.size() != b.formulas.size() ||
      a.evidence.size() != b.evidence.size())
    return false;
  for (size_t i = 0; i < a.domains.size(); ++i) {
    if (a.domains[i].name != b.domains[i].name ||
        a.domains[i].constants != b.domains[i].constants)
      return false;
  }
  for (size_t i = 0; i < a.constants.size(); ++i) {
    if (a.constants[i].name != b.constants[i].name ||
        a.constants[i].domain != b.constants[i].domain)
      return false;
  }
  for (size_t i = 0; i < a.predicates.size(); ++i) {
    const Predicate &pa = a.predicates[i], &pb = b.predicates[i];
    if (pa.name != pb.name || pa.arg_domains != pb.arg_domains) return false;
    if (pa.tag.has_value() != pb.tag.has_value()) return false;
    if (pa.tag && !(*pa.tag == *pb.tag)) return false;
  }
  for (size_t i = 0; i < a.formulas.size(); ++i) {
    const WeightedFormula &fa = a.formulas[i], &fb = b.formulas[i];
    if (fa.weight.hard != fb.weight.hard) return false;
    if (!fa.weight.hard && fa.weight.value != fb.weight.value) return false;
    if (!(fa.constraint == fb.constraint)) return false;
    if (fa.atoms.size() != fb.atoms.size()) return false;
    for (size_t j = 0; j < fa.atoms.size(); ++j)
      if (!(fa.atoms[j] == fb.atoms[j])) return false;
    if (!body_equal(fa.body, fb.body)) return false;
  }
  for (size_t i = 0; i < a.evidence.size(); ++i) {
    if (!(a.evidence[i].atom == b.evidence[i].atom) ||
        a.evidence[i].value != b.evidence[i].value)
      return false;
  }
  return true;
}

}  // namespace rcr
