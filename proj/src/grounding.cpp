#include "rcr/grounding.hpp"

#include <cmath>
#include <limits>

#include "rcr/errors.hpp"

namespace rcr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int GroundModel::intern(const Atom& a) {
  auto it = atom_index.find(a);
  if (it != atom_index.end()) return it->second;
  int id = static_cast<int>(atoms.size());
  atoms.push_back(a);
  atom_index.emplace(a, id);
  return id;
}

GroundModel ground(const ModelPtr& m, const GroundLimits& limits) {
  GroundModel gm;
  gm.model = m;
  auto check_capacity = [&gm, &limits]() {
    if (gm.atoms.size() > limits.max_atoms)
      throw CapacityError("ground atom count exceeds the limit of " +
                          std::to_string(limits.max_atoms));
  };

  for (const WeightedFormula& f : m->formulas) {
    std::vector<VarDecl> vars;
    vars.reserve(f.logvars.size());
    for (size_t i = 0; i < f.logvars.size(); ++i)
      vars.push_back(VarDecl{f.logvars[i], f.logvar_domains[i]});
    for (const std::vector<ConstId>& tuple : solutions(*m, f.constraint, vars)) {
      std::vector<std::pair<std::string, ConstId>> sub;
      sub.reserve(vars.size());
      for (size_t i = 0; i < vars.size(); ++i) sub.emplace_back(vars[i].name, tuple[i]);
      GroundFormula g;
      g.weight = f.weight;
      g.body = f.body;
      g.source_formula = f.id;
      g.subst = tuple;
      g.atom_ids.reserve(f.atoms.size());
      for (const Atom& a : f.atoms) g.atom_ids.push_back(gm.intern(substitute(a, sub)));
      check_capacity();
      gm.formulas.push_back(std::move(g));
    }
  }

  for (const GroundLiteral& ev : m->evidence) {
    GroundFormula g;
    g.weight = Weight::hard_weight();
    g.atom_ids.push_back(gm.intern(ev.atom));
    g.body = ev.value ? BodyExpr::leaf(0)
                      : BodyExpr::node(BodyExpr::kNot, {BodyExpr::leaf(0)});
    g.source_formula = -1;
    check_capacity();
    gm.formulas.push_back(std::move(g));
  }
  return gm;
}

bool eval_body(const BodyExpr& body, const std::vector<int>& atom_ids,
               const std::vector<bool>& world) {
  switch (body.op) {
    case BodyExpr::kAtom: return world[atom_ids[body.atom]];
    case BodyExpr::kNot: return !eval_body(body.kids[0], atom_ids, world);
    case BodyExpr::kAnd:
      return eval_body(body.kids[0], atom_ids, world) && eval_body(body.kids[1], atom_ids, world);
    case BodyExpr::kOr:
      return eval_body(body.kids[0], atom_ids, world) || eval_body(body.kids[1], atom_ids, world);
    case BodyExpr::kImplies:
      return !eval_body(body.kids[0], atom_ids, world) || eval_body(body.kids[1], atom_ids, world);
    case BodyExpr::kIff:
      return eval_body(body.kids[0], atom_ids, world) == eval_body(body.kids[1], atom_ids, world);
  }
  return false;
}

double weight_of_world(const GroundModel& gm, const std::vector<bool>& world) {
  if (world.size() != gm.atoms.size())
    throw Error(ErrorCode::kInvalidArgument, "world does not assign every ground atom");
  double logw = 0.0;
  for (const GroundFormula& g : gm.formulas) {
    bool sat = eval_body(g.body, g.atom_ids, world);
    if (g.weight.hard) {
      if (!sat) return kNegInf;
    } else if (sat) {
      logw += g.weight.value;
    }
  }
  return logw;
}

std::optional<SharedAtomWitness> find_shared_atom(const GroundModel& gm) {
  std::vector<int> first_seen(gm.atoms.size(), -1);
  for (size_t fi = 0; fi < gm.formulas.size(); ++fi) {
    const GroundFormula& g = gm.formulas[fi];
    for (int atom : g.atom_ids) {
      int prev = first_seen[atom];
      if (prev >= 0 && prev != static_cast<int>(fi))
        return SharedAtomWitness{atom, prev, static_cast<int>(fi)};
      first_seen[atom] = static_cast<int>(fi);
    }
  }
  return std::nullopt;
}

}  // namespace rcr
