#include "rcr/parser.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <vector>

#include "rcr/errors.hpp"

namespace rcr {

std::string letters_for_index(int index) {
  std::string letters;
  do {
    letters.insert(letters.begin(), static_cast<char>('a' + index % 26));
    index = index / 26 - 1;
  } while (index >= 0);
  return letters;
}

namespace {

struct Token {
  enum Kind {
    kIdent,
    kNumber,
    kLParen,
    kRParen,
    kLBrace,
    kRBrace,
    kComma,
    kEq,
    kNeq,
    kNot,
    kAnd,
    kImplies,
    kIff,
    kEnd,
  };
  Kind kind = kEnd;
  std::string text;
  double number = 0.0;
  int column = 0;
};

class LineLexer {
 public:
  LineLexer(std::string_view line, int line_no) : line_(line), line_no_(line_no) { advance(); }

  const Token& peek() const { return tok_; }
  const Token& peek2() {
    if (!tok2_) {
      size_t save = pos_;
      Token save_tok = tok_;
      advance();
      tok2_ = tok_;
      pos2_ = pos_;
      tok_ = save_tok;
      pos_ = save;
    }
    return *tok2_;
  }

  Token next() {
    Token t = tok_;
    if (tok2_) {
      tok_ = *tok2_;
      pos_ = pos2_;
      tok2_.reset();
    } else {
      advance();
    }
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_no_, tok_.column, message);
  }

  int line_no() const { return line_no_; }

 private:
  void advance() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
    tok_ = Token{};
    tok_.column = static_cast<int>(pos_) + 1;
    if (pos_ >= line_.size()) {
      tok_.kind = Token::kEnd;
      return;
    }
    char c = line_[pos_];
    auto starts_number = [this](size_t p) {
      if (p >= line_.size()) return false;
      char ch = line_[p];
      if (std::isdigit(static_cast<unsigned char>(ch))) return true;
      if ((ch == '-' || ch == '+') && p + 1 < line_.size() &&
          (std::isdigit(static_cast<unsigned char>(line_[p + 1])) || line_[p + 1] == '.'))
        return true;
      if (ch == '.' && p + 1 < line_.size() &&
          std::isdigit(static_cast<unsigned char>(line_[p + 1])))
        return true;
      return false;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < line_.size() &&
             (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::kIdent;
      tok_.text = std::string(line_.substr(start, pos_ - start));
      return;
    }
    if (starts_number(pos_)) {
      size_t start = pos_;
      if (c == '-' || c == '+') ++pos_;
      while (pos_ < line_.size() &&
             (std::isdigit(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '.' ||
              line_[pos_] == 'e' || line_[pos_] == 'E' ||
              ((line_[pos_] == '-' || line_[pos_] == '+') &&
               (line_[pos_ - 1] == 'e' || line_[pos_ - 1] == 'E'))))
        ++pos_;
      std::string_view num = line_.substr(start, pos_ - start);
      double value = 0;
      auto res = std::from_chars(num.data(), num.data() + num.size(), value);
      if (res.ec != std::errc() || res.ptr != num.data() + num.size())
        throw ParseError(line_no_, tok_.column, "malformed number '" + std::string(num) + "'");
      tok_.kind = Token::kNumber;
      tok_.number = value;
      tok_.text = std::string(num);
      return;
    }
    switch (c) {
      case '(': tok_.kind = Token::kLParen; ++pos_; return;
      case ')': tok_.kind = Token::kRParen; ++pos_; return;
      case '{': tok_.kind = Token::kLBrace; ++pos_; return;
      case '}': tok_.kind = Token::kRBrace; ++pos_; return;
      case ',': tok_.kind = Token::kComma; ++pos_; return;
      case '^': tok_.kind = Token::kAnd; ++pos_; return;
      case '!':
        if (pos_ + 1 < line_.size() && line_[pos_ + 1] == '=') {
          tok_.kind = Token::kNeq;
          pos_ += 2;
        } else {
          tok_.kind = Token::kNot;
          ++pos_;
        }
        return;
      case '=':
        if (pos_ + 1 < line_.size() && line_[pos_ + 1] == '>') {
          tok_.kind = Token::kImplies;
          pos_ += 2;
        } else {
          tok_.kind = Token::kEq;
          ++pos_;
        }
        return;
      case '<':
        if (pos_ + 2 < line_.size() && line_[pos_ + 1] == '=' && line_[pos_ + 2] == '>') {
          tok_.kind = Token::kIff;
          pos_ += 3;
        }
        else
          throw ParseError(line_no_, tok_.column, "unexpected '<'");
        return;
      default:
        throw ParseError(line_no_, tok_.column, std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view line_;
  int line_no_;
  size_t pos_ = 0;
  size_t pos2_ = 0;
  Token tok_;
  std::optional<Token> tok2_;
};

bool is_variable_name(const std::string& name) {
  return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
}

class ModelParser {
 public:
  Model parse(std::string_view text) {
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
      size_t eol = text.find('\n', pos);
      std::string_view line =
          eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
      ++line_no;
      if (auto comment = line.find("//"); comment != std::string_view::npos)
        line = line.substr(0, comment);
      parse_line(line, line_no);
      if (eol == std::string_view::npos) break;
      pos = eol + 1;
    }
    return std::move(model_);
  }

 private:
  void parse_line(std::string_view line, int line_no) {
    LineLexer lex(line, line_no);
    if (lex.peek().kind == Token::kEnd) return;
    if (lex.peek().kind == Token::kIdent) {
      const std::string& kw = lex.peek().text;
      if (kw == "domain") {
        lex.next();
        parse_domain(lex);
        return;
      }
      if (kw == "predicate") {
        lex.next();
        parse_predicate(lex);
        return;
      }
      if (kw == "evidence") {
        lex.next();
        parse_evidence(lex);
        return;
      }
      if (kw == "hard") {
        lex.next();
        parse_formula(lex, Weight::hard_weight());
        return;
      }
      lex.fail("expected 'domain', 'predicate', 'evidence', 'hard', or a weight");
    }
    if (lex.peek().kind == Token::kNumber) {
      double w = lex.next().number;
      parse_formula(lex, Weight::soft(w));
      return;
    }
    lex.fail("expected a declaration or weighted formula");
  }

  std::string expect_ident(LineLexer& lex, const char* what) {
    if (lex.peek().kind != Token::kIdent) lex.fail(std::string("expected ") + what);
    return lex.next().text;
  }

  void expect(LineLexer& lex, Token::Kind kind, const char* what) {
    if (lex.peek().kind != kind) lex.fail(std::string("expected ") + what);
    lex.next();
  }

  void expect_end(LineLexer& lex) {
    if (lex.peek().kind != Token::kEnd) lex.fail("trailing input after declaration");
  }

  void add_constant_checked(LineLexer& lex, const std::string& name, DomainId domain) {
    if (is_variable_name(name)) lex.fail("constants must start with a lowercase letter");
    if (model_.constant_id(name) >= 0)
      lex.fail("constant '" + name + "' is already declared in another domain");
    model_.add_constant(name, domain);
  }

  void parse_domain(LineLexer& lex) {
    std::string name = expect_ident(lex, "domain name");
    if (model_.domain_id(name) >= 0) lex.fail("domain '" + name + "' is already declared");
    expect(lex, Token::kEq, "'='");
    DomainId d = model_.add_domain(name);
    if (lex.peek().kind == Token::kNumber) {
      double size = lex.next().number;
      long n = static_cast<long>(size);
      if (n < 1 || static_cast<double>(n) != size) lex.fail("domain size must be a positive integer");
      for (long i = 0; i < n; ++i) add_constant_checked(lex, letters_for_index(static_cast<int>(i)), d);
    } else {
      expect(lex, Token::kLBrace, "'{' or a size");
      while (true) {
        add_constant_checked(lex, expect_ident(lex, "constant"), d);
        if (lex.peek().kind == Token::kComma) {
          lex.next();
          continue;
        }
        break;
      }
      expect(lex, Token::kRBrace, "'}'");
    }
    if (model_.domains[d].constants.empty()) lex.fail("a domain needs at least one constant");
    expect_end(lex);
  }

  void parse_predicate(LineLexer& lex) {
    std::string name = expect_ident(lex, "predicate name");
    if (is_variable_name(name)) lex.fail("predicate names must start with a lowercase letter");
    if (model_.predicate_id(name) >= 0) lex.fail("predicate '" + name + "' is already declared");
    expect(lex, Token::kLParen, "'('");
    Predicate p;
    p.name = name;
    if (lex.peek().kind != Token::kRParen) {
      while (true) {
        std::string dom = expect_ident(lex, "domain name");
        int d = model_.domain_id(dom);
        if (d < 0) lex.fail("undeclared domain '" + dom + "'");
        p.arg_domains.push_back(d);
        if (lex.peek().kind == Token::kComma) {
          lex.next();
          continue;
        }
        break;
      }
    }
    expect(lex, Token::kRParen, "')'");
    expect_end(lex);
    model_.add_predicate(std::move(p));
  }

  // Terms inside an atom; variable domains come from the predicate signature.
  Atom parse_atom(LineLexer& lex, std::map<std::string, DomainId>* var_domains) {
    std::string name = expect_ident(lex, "predicate name");
    PredId pid = model_.predicate_id(name);
    if (pid < 0) lex.fail("undeclared predicate '" + name + "'");
    expect(lex, Token::kLParen, "'('");
    Atom atom;
    atom.pred = pid;
    const Predicate& pred = model_.predicates[pid];
    if (lex.peek().kind != Token::kRParen) {
      while (true) {
        std::string term = expect_ident(lex, "constant or variable");
        size_t pos = atom.args.size();
        if (pos >= pred.arg_domains.size())
          lex.fail("too many arguments for " + name + "/" + std::to_string(pred.arity()));
        DomainId expected = pred.arg_domains[pos];
        if (is_variable_name(term)) {
          if (var_domains) {
            auto [it, inserted] = var_domains->emplace(term, expected);
            if (!inserted && it->second != expected)
              lex.fail("variable " + term + " is used with conflicting domains '" +
                       model_.domains[it->second].name + "' and '" +
                       model_.domains[expected].name + "'");
          }
          atom.args.push_back(Term::make_var(term, expected));
        } else {
          ConstId c = model_.constant_id(term);
          if (c < 0) lex.fail("undeclared constant '" + term + "'");
          if (model_.constants[c].domain != expected)
            lex.fail("constant '" + term + "' does not belong to domain '" +
                     model_.domains[expected].name + "'");
          atom.args.push_back(Term::make_const(c, expected));
        }
        if (lex.peek().kind == Token::kComma) {
          lex.next();
          continue;
        }
        break;
      }
    }
    expect(lex, Token::kRParen, "')'");
    if (atom.args.size() != pred.arg_domains.size())
      lex.fail("predicate " + name + " expects " + std::to_string(pred.arity()) +
               " arguments, got " + std::to_string(atom.args.size()));
    return atom;
  }

  void parse_evidence(LineLexer& lex) {
    GroundLiteral lit;
    if (lex.peek().kind == Token::kNot) {
      lex.next();
      lit.value = false;
    }
    lit.atom = parse_atom(lex, nullptr);
    if (!lit.atom.is_ground()) lex.fail("evidence literals must be ground");
    expect_end(lex);
    model_.evidence.push_back(std::move(lit));
  }

  struct RawConjunct {
    std::string lhs;
    AtomicConstraint::Rel rel;
    std::string rhs;
    int column;
  };

  void parse_formula(LineLexer& lex, Weight weight) {
    // Constraint conjuncts look like `X != Y,` or `X = a,`; an atom can never
    // start with IDENT '=' so two tokens of lookahead disambiguate.
    std::vector<RawConjunct> raw;
    while (lex.peek().kind == Token::kIdent &&
           (lex.peek2().kind == Token::kEq || lex.peek2().kind == Token::kNeq)) {
      RawConjunct rc;
      rc.column = lex.peek().column;
      rc.lhs = lex.next().text;
      rc.rel = lex.next().kind == Token::kEq ? AtomicConstraint::kEq : AtomicConstraint::kNeq;
      rc.rhs = expect_ident(lex, "constant or variable");
      expect(lex, Token::kComma, "',' after constraint");
      raw.push_back(std::move(rc));
    }

    WeightedFormula f;
    f.id = static_cast<int>(model_.formulas.size()) + 1;
    f.weight = weight;
    std::map<std::string, DomainId> var_domains;
    f.body = parse_body(lex, f.atoms, var_domains);
    expect_end(lex);

    for (const auto& [name, dom] : var_domains) {
      f.logvars.push_back(name);
      f.logvar_domains.push_back(dom);
    }
    // reorder to first occurrence in the body
    std::vector<std::string> order;
    for (const Atom& a : f.atoms)
      for (const Term& t : a.args)
        if (t.is_var() && std::find(order.begin(), order.end(), t.var) == order.end())
          order.push_back(t.var);
    std::vector<std::string> lv;
    std::vector<DomainId> lvd;
    for (const std::string& name : order) {
      lv.push_back(name);
      lvd.push_back(var_domains.at(name));
    }
    f.logvars = std::move(lv);
    f.logvar_domains = std::move(lvd);

    for (const RawConjunct& rc : raw) {
      int line_no = lex.line_no();
      auto resolve_var = [&](const std::string& name) -> DomainId {
        auto it = var_domains.find(name);
        if (it == var_domains.end())
          throw ParseError(line_no, rc.column,
                           "constraint variable " + name + " does not occur in the formula");
        return it->second;
      };
      if (!is_variable_name(rc.lhs))
        throw ParseError(line_no, rc.column, "constraint left-hand side must be a variable");
      DomainId lhs_dom = resolve_var(rc.lhs);
      AtomicConstraint ac;
      ac.rel = rc.rel;
      ac.var = rc.lhs;
      if (is_variable_name(rc.rhs)) {
        DomainId rhs_dom = resolve_var(rc.rhs);
        if (rhs_dom != lhs_dom)
          throw ParseError(line_no, rc.column,
                           "constraint compares variables of different domains");
        ac.rhs = Term::make_var(rc.rhs, rhs_dom);
      } else {
        ConstId c = model_.constant_id(rc.rhs);
        if (c < 0) throw ParseError(line_no, rc.column, "undeclared constant '" + rc.rhs + "'");
        if (model_.constants[c].domain != lhs_dom)
          throw ParseError(line_no, rc.column,
                           "constant '" + rc.rhs + "' does not belong to the domain of " + rc.lhs);
        ac.rhs = Term::make_const(c, lhs_dom);
      }
      f.constraint.add(std::move(ac));
    }

    model_.formulas.push_back(std::move(f));
  }

  BodyExpr parse_body(LineLexer& lex, std::vector<Atom>& atoms,
                      std::map<std::string, DomainId>& var_domains) {
    return parse_iff(lex, atoms, var_domains);
  }

  BodyExpr parse_iff(LineLexer& lex, std::vector<Atom>& atoms,
                     std::map<std::string, DomainId>& var_domains) {
    BodyExpr left = parse_implies(lex, atoms, var_domains);
    if (lex.peek().kind == Token::kIff) {
      lex.next();
      BodyExpr right = parse_iff(lex, atoms, var_domains);
      return BodyExpr::node(BodyExpr::kIff, {std::move(left), std::move(right)});
    }
    return left;
  }

  BodyExpr parse_implies(LineLexer& lex, std::vector<Atom>& atoms,
                         std::map<std::string, DomainId>& var_domains) {
    BodyExpr left = parse_or(lex, atoms, var_domains);
    if (lex.peek().kind == Token::kImplies) {
      lex.next();
      BodyExpr right = parse_implies(lex, atoms, var_domains);
      return BodyExpr::node(BodyExpr::kImplies, {std::move(left), std::move(right)});
    }
    return left;
  }

  bool at_or_connective(LineLexer& lex) {
    return lex.peek().kind == Token::kIdent && lex.peek().text == "v" &&
           lex.peek2().kind != Token::kLParen;
  }

  BodyExpr parse_or(LineLexer& lex, std::vector<Atom>& atoms,
                    std::map<std::string, DomainId>& var_domains) {
    BodyExpr left = parse_and(lex, atoms, var_domains);
    while (at_or_connective(lex)) {
      lex.next();
      BodyExpr right = parse_and(lex, atoms, var_domains);
      left = BodyExpr::node(BodyExpr::kOr, {std::move(left), std::move(right)});
    }
    return left;
  }

  BodyExpr parse_and(LineLexer& lex, std::vector<Atom>& atoms,
                     std::map<std::string, DomainId>& var_domains) {
    BodyExpr left = parse_unary(lex, atoms, var_domains);
    while (lex.peek().kind == Token::kAnd) {
      lex.next();
      BodyExpr right = parse_unary(lex, atoms, var_domains);
      left = BodyExpr::node(BodyExpr::kAnd, {std::move(left), std::move(right)});
    }
    return left;
  }

  BodyExpr parse_unary(LineLexer& lex, std::vector<Atom>& atoms,
                       std::map<std::string, DomainId>& var_domains) {
    if (lex.peek().kind == Token::kNot) {
      lex.next();
      BodyExpr inner = parse_unary(lex, atoms, var_domains);
      return BodyExpr::node(BodyExpr::kNot, {std::move(inner)});
    }
    if (lex.peek().kind == Token::kLParen) {
      lex.next();
      BodyExpr inner = parse_body(lex, atoms, var_domains);
      expect(lex, Token::kRParen, "')'");
      return inner;
    }
    if (lex.peek().kind == Token::kIdent) {
      Atom a = parse_atom(lex, &var_domains);
      atoms.push_back(std::move(a));
      return BodyExpr::leaf(static_cast<int>(atoms.size() - 1));
    }
    lex.fail("expected an atom");
  }

  Model model_;
};

}  // namespace

Model parse_model(std::string_view text) {
  ModelParser parser;
  return parser.parse(text);
}

}  // namespace rcr
