#include "spcf/parser.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace spcf {

namespace {

enum class Tok {
  Ident,
  Number,
  LParen,
  RParen,
  Choice,  // "(+)" or "(+ q)"
  Lambda,
  Dot,
  Plus,
  Minus,
  Star,
  Leq,
  Eq,
  Caret,
  Comma,
  KwFix,
  KwIf,
  KwThen,
  KwElse,
  KwLet,
  KwIn,
  KwSample,
  KwScore,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  Rat number;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void error(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  int cur() const { return pos_ < src_.size() ? static_cast<unsigned char>(src_[pos_]) : -1; }

  void advance() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_ws() {
    for (;;) {
      int c = cur();
      if (c == '#') {
        while (cur() != '\n' && cur() != -1) advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        return;
      }
    }
  }

  Rat lex_number() {
    std::string text;
    while (std::isdigit(cur()) || cur() == '.' || cur() == '/') {
      // a '/' only continues the number when followed by a digit
      if (cur() == '/' && !(pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))
        break;
      text.push_back(static_cast<char>(cur()));
      advance();
    }
    auto q = rat_from_string(text);
    if (!q) error("malformed number '" + text + "'");
    return *q;
  }

  void next() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    int c = cur();
    if (c == -1) {
      tok_.kind = Tok::End;
      return;
    }
    if (c == '(') {
      // lookahead for the probabilistic choice operator "(+", else plain paren
      std::size_t save_pos = pos_;
      int save_line = line_, save_col = col_;
      advance();
      skip_ws();
      if (cur() == '+') {
        advance();
        skip_ws();
        Rat q(1, 2);
        if (cur() != ')') {
          q = lex_number();
          skip_ws();
        }
        if (cur() != ')') error("expected ')' closing probabilistic choice");
        advance();
        tok_.kind = Tok::Choice;
        tok_.number = q;
        return;
      }
      pos_ = save_pos;
      line_ = save_line;
      col_ = save_col;
      advance();
      tok_.kind = Tok::LParen;
      return;
    }
    if (std::isdigit(c)) {
      tok_.kind = Tok::Number;
      tok_.number = lex_number();
      return;
    }
    if (std::isalpha(c) || c == '_') {
      std::string id;
      while (std::isalnum(cur()) || cur() == '_' || cur() == '\'') {
        id.push_back(static_cast<char>(cur()));
        advance();
      }
      tok_.text = id;
      if (id == "fix")
        tok_.kind = Tok::KwFix;
      else if (id == "if")
        tok_.kind = Tok::KwIf;
      else if (id == "then")
        tok_.kind = Tok::KwThen;
      else if (id == "else")
        tok_.kind = Tok::KwElse;
      else if (id == "let")
        tok_.kind = Tok::KwLet;
      else if (id == "in")
        tok_.kind = Tok::KwIn;
      else if (id == "sample")
        tok_.kind = Tok::KwSample;
      else if (id == "score")
        tok_.kind = Tok::KwScore;
      else
        tok_.kind = Tok::Ident;
      return;
    }
    switch (c) {
      case ')':
        advance();
        tok_.kind = Tok::RParen;
        return;
      case '\\':
        advance();
        tok_.kind = Tok::Lambda;
        return;
      case '.':
        advance();
        tok_.kind = Tok::Dot;
        return;
      case '+':
        advance();
        tok_.kind = Tok::Plus;
        return;
      case '-':
        advance();
        tok_.kind = Tok::Minus;
        return;
      case '*':
        advance();
        tok_.kind = Tok::Star;
        return;
      case ',':
        advance();
        tok_.kind = Tok::Comma;
        return;
      case '^':
        advance();
        tok_.kind = Tok::Caret;
        return;
      case '=':
        advance();
        tok_.kind = Tok::Eq;
        return;
      case '<':
        advance();
        if (cur() != '=') error("expected '<='");
        advance();
        tok_.kind = Tok::Leq;
        return;
      default:
        error(std::string("unexpected character '") + static_cast<char>(c) + "'");
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// Binding strengths; application binds tightest among the binary forms.
enum Prec { kLow = 0, kChoice = 10, kCompare = 20, kAdd = 30, kMul = 40, kApp = 50 };

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Term parse_program() {
    Term t = parse_term(kLow);
    expect(Tok::End, "end of input");
    return t;
  }

 private:
  [[noreturn]] void error(const std::string& msg) {
    throw ParseError(msg, lex_.peek().line, lex_.peek().col);
  }

  Token expect(Tok kind, const std::string& what) {
    if (lex_.peek().kind != kind) error("expected " + what);
    return lex_.take();
  }

  std::string expect_ident() {
    if (lex_.peek().kind != Tok::Ident) error("expected identifier");
    return lex_.take().text;
  }

  bool starts_atom(Tok k) const {
    switch (k) {
      case Tok::Ident:
      case Tok::Number:
      case Tok::LParen:
      case Tok::KwSample:
      case Tok::KwScore:
        return true;
      default:
        return false;
    }
  }

  Term parse_term(int min_prec) {
    Term lhs = parse_prefix();
    for (;;) {
      Tok k = lex_.peek().kind;
      if (k == Tok::Choice && kChoice >= min_prec) {
        Rat q = lex_.take().number;
        Term rhs = parse_term(kChoice + 1);
        lhs = mk_if(mk_prim(prim_sub(), {mk_sample(), mk_num(q)}), lhs, rhs);
      } else if (k == Tok::Leq && kCompare >= min_prec) {
        lex_.take();
        Term rhs = parse_term(kCompare + 1);
        lhs = mk_prim(prim_sub(), {lhs, rhs});
      } else if ((k == Tok::Plus || k == Tok::Minus) && kAdd >= min_prec) {
        bool plus = lex_.take().kind == Tok::Plus;
        Term rhs = parse_term(kAdd + 1);
        lhs = mk_prim(plus ? prim_add() : prim_sub(), {lhs, rhs});
      } else if (k == Tok::Star && kMul >= min_prec) {
        lex_.take();
        Term rhs = parse_term(kMul + 1);
        if (lhs->tag == Tag::Num) {
          lhs = mk_prim(prim_mulc(lhs->num.lo), {rhs});
        } else if (rhs->tag == Tag::Num) {
          lhs = mk_prim(prim_mulc(rhs->num.lo), {lhs});
        } else {
          error("one side of '*' must be a rational constant");
        }
      } else if (starts_atom(k) && kApp >= min_prec) {
        Term arg = parse_atom();
        lhs = mk_app(lhs, arg);
      } else {
        return lhs;
      }
    }
  }

  Term parse_prefix() {
    switch (lex_.peek().kind) {
      case Tok::KwFix: {
        lex_.take();
        std::string f = expect_ident();
        std::string x = expect_ident();
        expect(Tok::Dot, "'.'");
        return mk_fix(f, x, parse_term(kLow));
      }
      case Tok::Lambda: {
        lex_.take();
        std::string x = expect_ident();
        expect(Tok::Dot, "'.'");
        return mk_lam(x, parse_term(kLow));
      }
      case Tok::KwIf: {
        lex_.take();
        Term g = parse_term(kLow);
        expect(Tok::KwThen, "'then'");
        Term a = parse_term(kLow);
        expect(Tok::KwElse, "'else'");
        Term b = parse_term(kLow);
        return mk_if(g, a, b);
      }
      case Tok::KwLet: {
        lex_.take();
        std::string x = expect_ident();
        expect(Tok::Eq, "'='");
        Term m = parse_term(kLow);
        expect(Tok::KwIn, "'in'");
        Term n = parse_term(kLow);
        return mk_app(mk_lam(x, n), m);
      }
      default:
        return parse_atom();
    }
  }

  std::optional<PrimOp> prim_by_name(const std::string& name) {
    if (name == "neg") return prim_neg();
    if (name == "min") return prim_min();
    if (name == "max") return prim_max();
    if (name == "sig") return prim_sig();
    return std::nullopt;
  }

  Term parse_atom() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Number:
        return mk_num(lex_.take().number);
      case Tok::KwSample:
        lex_.take();
        return mk_sample();
      case Tok::KwScore: {
        lex_.take();
        expect(Tok::LParen, "'('");
        Term m = parse_term(kLow);
        expect(Tok::RParen, "')'");
        return mk_score(m);
      }
      case Tok::LParen: {
        lex_.take();
        if (lex_.peek().kind == Tok::Minus) {
          lex_.take();
          if (lex_.peek().kind != Tok::Number) error("expected number after unary '-'");
          Rat q = -lex_.take().number;
          expect(Tok::RParen, "')'");
          return mk_num(q);
        }
        Term m = parse_term(kLow);
        expect(Tok::RParen, "')'");
        return m;
      }
      case Tok::Ident: {
        Token id = lex_.take();
        if (auto f = prim_by_name(id.text)) {
          expect(Tok::LParen, "'(' after primitive " + id.text);
          std::vector<Term> args;
          args.push_back(parse_term(kLow));
          while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            args.push_back(parse_term(kLow));
          }
          expect(Tok::RParen, "')'");
          if (static_cast<int>(args.size()) != f->arity)
            throw ParseError("primitive " + id.text + " expects " + std::to_string(f->arity) + " argument(s)",
                             id.line, id.col);
          return mk_prim(*f, std::move(args));
        }
        if (lex_.peek().kind == Tok::Caret) {
          lex_.take();
          if (lex_.peek().kind != Tok::Number) error("expected iteration count after '^'");
          Token n = lex_.take();
          if (n.number.get_den() != 1 || n.number < 1) error("iteration count must be a positive integer");
          long k = n.number.get_num().get_si();
          expect(Tok::LParen, "'('");
          Term arg = parse_term(kLow);
          expect(Tok::RParen, "')'");
          Term acc = std::move(arg);
          for (long i = 0; i < k; ++i) acc = mk_app(mk_var(id.text), acc);
          return acc;
        }
        return mk_var(id.text);
      }
      default:
        error("expected a term");
    }
  }

  Lexer lex_;
};

}  // namespace

Term parse(const std::string& source) {
  Parser p(source);
  return p.parse_program();
}

Term parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace spcf
