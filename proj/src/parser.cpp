#include "hpshield/parser.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <vector>

namespace hpshield {

namespace {

enum class Tok {
  Number,
  Ident,
  Plus,
  Minus,
  Star,
  Caret,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Semi,
  Comma,
  Dot,
  Prime,
  Assign,  // :=
  Union,   // ++
  Question,
  Bang,
  Amp,
  Pipe,
  Arrow,  // ->
  Le,
  Lt,
  Eq,
  Gt,
  Ge,
  End,
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Semi: return "';'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Prime: return "'''";
    case Tok::Assign: return "':='";
    case Tok::Union: return "'++'";
    case Tok::Question: return "'?'";
    case Tok::Bang: return "'!'";
    case Tok::Amp: return "'&'";
    case Tok::Pipe: return "'|'";
    case Tok::Arrow: return "'->'";
    case Tok::Le: return "'<='";
    case Tok::Lt: return "'<'";
    case Tok::Eq: return "'='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::End: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind;
  SourceSpan span;
  std::string_view text;
};

struct Alias {
  std::string_view utf8;
  Tok kind;
};

// Unicode spellings of the typeset connectives.
constexpr Alias kAliases[] = {
    {"∪", Tok::Union}, {"∧", Tok::Amp}, {"∨", Tok::Pipe}, {"→", Tok::Arrow},
    {"¬", Tok::Bang},  {"≤", Tok::Le},  {"≥", Tok::Ge},
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Tok k, std::size_t len) {
    out.push_back({k, {i, i + len}, src.substr(i, len)});
    i += len;
  };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < src.size() && is_digit(src[j])) ++j;
      if (j + 1 < src.size() && src[j] == '.' && is_digit(src[j + 1])) {
        ++j;
        while (j < src.size() && is_digit(src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          while (k < src.size() && is_digit(src[k])) ++k;
          j = k;
        }
      }
      push(Tok::Number, j - i);
      continue;
    }
    if (is_alpha(c)) {
      std::size_t j = i;
      while (j < src.size() && (is_alpha(src[j]) || is_digit(src[j]) || src[j] == '_')) ++j;
      push(Tok::Ident, j - i);
      continue;
    }
    auto two = src.substr(i, 2);
    if (two == ":=") { push(Tok::Assign, 2); continue; }
    if (two == "++") { push(Tok::Union, 2); continue; }
    if (two == "->") { push(Tok::Arrow, 2); continue; }
    if (two == "<=") { push(Tok::Le, 2); continue; }
    if (two == ">=") { push(Tok::Ge, 2); continue; }
    bool aliased = false;
    for (const auto& a : kAliases) {
      if (src.substr(i, a.utf8.size()) == a.utf8) {
        push(a.kind, a.utf8.size());
        aliased = true;
        break;
      }
    }
    if (aliased) continue;
    switch (c) {
      case '+': push(Tok::Plus, 1); continue;
      case '-': push(Tok::Minus, 1); continue;
      case '*': push(Tok::Star, 1); continue;
      case '^': push(Tok::Caret, 1); continue;
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case '{': push(Tok::LBrace, 1); continue;
      case '}': push(Tok::RBrace, 1); continue;
      case '[': push(Tok::LBracket, 1); continue;
      case ']': push(Tok::RBracket, 1); continue;
      case ';': push(Tok::Semi, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case '.': push(Tok::Dot, 1); continue;
      case '\'': push(Tok::Prime, 1); continue;
      case '?': push(Tok::Question, 1); continue;
      case '!': push(Tok::Bang, 1); continue;
      case '&': push(Tok::Amp, 1); continue;
      case '|': push(Tok::Pipe, 1); continue;
      case '<': push(Tok::Lt, 1); continue;
      case '=': push(Tok::Eq, 1); continue;
      case '>': push(Tok::Gt, 1); continue;
      default: break;
    }
    // Unknown byte: report the whole UTF-8 sequence it starts.
    std::size_t len = 1;
    auto uc = static_cast<unsigned char>(c);
    if (uc >= 0xF0) len = 4;
    else if (uc >= 0xE0) len = 3;
    else if (uc >= 0xC0) len = 2;
    len = std::min(len, src.size() - i);
    throw ParseError({i, i + len}, "unknown token '" + std::string(src.substr(i, len)) + "'");
  }
  out.push_back({Tok::End, {src.size(), src.size()}, {}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(lex(src)) {}

  Program program_only() {
    Program p = parse_choice();
    expect_end();
    return p;
  }
  Formula formula_only() {
    Formula f = parse_implies();
    expect_end();
    return f;
  }
  Term term_only() {
    Term t = parse_sum();
    expect_end();
    return t;
  }

 private:
  static constexpr int kMaxDepth = 400;

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) p_.fail(p_.peek(), "nesting too deep");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at(Tok k) const { return peek().kind == k; }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.span, msg); }
  const Token& expect(Tok k, const char* context) {
    if (!at(k)) {
      fail(peek(), std::string("expected ") + describe(k) + " " + context + ", found " +
                       describe(peek().kind));
    }
    return advance();
  }
  void expect_end() {
    if (!at(Tok::End)) fail(peek(), std::string("unexpected ") + describe(peek().kind));
  }
  std::string identifier(const char* context) {
    const Token& t = expect(Tok::Ident, context);
    if (is_reserved_word(t.text))
      fail(t, "'" + std::string(t.text) + "' is reserved and cannot name a variable");
    return std::string(t.text);
  }

  static double number_value(const Token& t) {
    double v = 0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (res.ec != std::errc() || !std::isfinite(v))
      throw ParseError(t.span, "number literal out of range");
    return v;
  }

  // ---------------------------------------------------------------- terms

  Term parse_sum() {
    DepthGuard g(*this);
    Term lhs = parse_product();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      bool plus = advance().kind == Tok::Plus;
      Term rhs = parse_product();
      lhs = plus ? lhs + rhs : lhs - rhs;
    }
    return lhs;
  }

  Term parse_product() {
    DepthGuard g(*this);
    Term lhs = parse_unary();
    while (accept(Tok::Star)) lhs = lhs * parse_unary();
    return lhs;
  }

  Term parse_unary() {
    DepthGuard g(*this);
    if (at(Tok::Minus)) {
      // "-<literal>" is a negative constant unless the literal is a power base.
      if (peek(1).kind == Tok::Number && peek(2).kind != Tok::Caret) {
        advance();
        return constant(-number_value(advance()));
      }
      advance();
      return -parse_unary();
    }
    return parse_power();
  }

  Term parse_power() {
    Term base = parse_atom();
    while (at(Tok::Caret)) {
      advance();
      const Token& t = peek();
      if (t.kind != Tok::Number) fail(t, "exponent must be an integer literal >= 1");
      advance();
      unsigned exponent = 0;
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), exponent);
      if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size() || exponent < 1)
        fail(t, "exponent must be an integer literal >= 1");
      base = power(base, exponent);
    }
    return base;
  }

  Term parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: advance(); return constant(number_value(t));
      case Tok::Ident: return var(identifier("in term"));
      case Tok::LParen: {
        advance();
        Term inner = parse_sum();
        expect(Tok::RParen, "to close '('");
        return inner;
      }
      default: fail(t, std::string("expected term, found ") + describe(t.kind));
    }
  }

  // ------------------------------------------------------------- formulas

  Formula parse_implies() {
    DepthGuard g(*this);
    Formula lhs = parse_or();
    if (accept(Tok::Arrow)) return implies(lhs, parse_implies());
    return lhs;
  }

  Formula parse_or() {
    DepthGuard g(*this);
    Formula lhs = parse_and();
    while (accept(Tok::Pipe)) lhs = lhs || parse_and();
    return lhs;
  }

  Formula parse_and() {
    DepthGuard g(*this);
    Formula lhs = parse_unary_formula();
    while (accept(Tok::Amp)) lhs = lhs && parse_unary_formula();
    return lhs;
  }

  Formula parse_unary_formula() {
    DepthGuard g(*this);
    const Token& t = peek();
    if (accept(Tok::Bang)) return !parse_unary_formula();
    if (t.kind == Tok::Ident && (t.text == "forall" || t.text == "exists")) {
      Quantifier q = t.text == "forall" ? Quantifier::Forall : Quantifier::Exists;
      advance();
      std::string v = identifier("after quantifier");
      expect(Tok::Dot, "after quantified variable");
      return quantify(q, std::move(v), parse_unary_formula());
    }
    if (accept(Tok::LBracket)) {
      Program p = parse_choice();
      expect(Tok::RBracket, "to close '['");
      return box(p, parse_unary_formula());
    }
    return parse_atomic_formula();
  }

  Formula parse_atomic_formula() {
    const Token& t = peek();
    if (t.kind == Tok::Ident && t.text == "true") {
      advance();
      return truth(true);
    }
    if (t.kind == Tok::Ident && t.text == "false") {
      advance();
      return truth(false);
    }
    if (t.kind == Tok::LParen) {
      // A parenthesis opens either a term of a comparison or a nested formula.
      std::size_t saved = pos_;
      int saved_depth = depth_;
      try {
        return parse_comparison();
      } catch (const ParseError& as_comparison) {
        pos_ = saved;
        depth_ = saved_depth;
        advance();
        std::optional<Formula> inner;
        try {
          inner = parse_implies();
          expect(Tok::RParen, "to close '('");
        } catch (const ParseError& as_formula) {
          // Report whichever reading got further into the input.
          if (as_comparison.span().start >= as_formula.span().start) throw as_comparison;
          throw;
        }
        return *inner;
      }
    }
    return parse_comparison();
  }

  Formula parse_comparison() {
    Term lhs = parse_sum();
    const Token& op = peek();
    Relation rel;
    switch (op.kind) {
      case Tok::Le: rel = Relation::Le; break;
      case Tok::Lt: rel = Relation::Lt; break;
      case Tok::Eq: rel = Relation::Eq; break;
      case Tok::Gt: rel = Relation::Gt; break;
      case Tok::Ge: rel = Relation::Ge; break;
      default: fail(op, std::string("expected comparison operator, found ") + describe(op.kind));
    }
    advance();
    if (at(Tok::End) || at(Tok::Semi) || at(Tok::RBrace) || at(Tok::RParen) ||
        at(Tok::RBracket) || at(Tok::Union) || at(Tok::Amp) || at(Tok::Pipe))
      fail(op, std::string("comparison ") + describe(op.kind) + " has no right-hand side");
    return compare(lhs, rel, parse_sum());
  }

  // ------------------------------------------------------------- programs

  Program parse_choice() {
    DepthGuard g(*this);
    if (at(Tok::Union)) fail(peek(), "empty choice branch");
    Program lhs = parse_seq();
    if (at(Tok::Union)) {
      advance();
      if (at(Tok::Union) || at(Tok::RBrace) || at(Tok::RBracket) || at(Tok::End))
        fail(peek(), "empty choice branch");
      return choice(lhs, parse_choice());
    }
    return lhs;
  }

  bool ends_sequence() const {
    return at(Tok::RBrace) || at(Tok::RBracket) || at(Tok::Union) || at(Tok::End);
  }

  Program parse_seq() {
    DepthGuard g(*this);
    Program first = parse_statement();
    if (accept(Tok::Semi)) {
      if (ends_sequence()) return first;
      return seq(first, parse_seq());
    }
    return first;
  }

  Program parse_statement() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Question: {
        advance();
        return test(parse_implies());
      }
      case Tok::LBrace: return parse_braced();
      case Tok::Ident: {
        std::string name = identifier("at start of statement");
        expect(Tok::Assign, "in assignment");
        if (accept(Tok::Star)) return assign_any(std::move(name));
        return assign(std::move(name), parse_sum());
      }
      case Tok::Semi: fail(t, "empty statement");
      default: fail(t, std::string("expected statement, found ") + describe(t.kind));
    }
  }

  Program parse_braced() {
    DepthGuard g(*this);
    const Token& open = advance();
    if (peek().kind == Tok::Ident && peek(1).kind == Tok::Prime) return parse_ode_rest(open);
    if (at(Tok::RBrace)) fail(peek(), "empty block");
    Program body = parse_choice();
    expect(Tok::RBrace, "to close '{'");
    if (accept(Tok::Star)) return loop(body);
    return body;
  }

  Program parse_ode_rest(const Token& open) {
    std::vector<OdeEquation> eqs;
    do {
      const Token& name_tok = peek();
      std::string name = identifier("in differential equation");
      expect(Tok::Prime, "after differential variable");
      expect(Tok::Eq, "in differential equation");
      for (const auto& e : eqs) {
        if (e.var == name) fail(name_tok, "variable '" + name + "' has two differential equations");
      }
      eqs.push_back({std::move(name), parse_sum()});
    } while (accept(Tok::Comma));
    Formula domain = truth(true);
    if (accept(Tok::Amp)) domain = parse_implies();
    if (!at(Tok::RBrace))
      fail(peek(), std::string("expected '}' to close differential equation opened at offset ") +
                       std::to_string(open.span.start) + ", found " + describe(peek().kind));
    advance();
    if (at(Tok::Star)) fail(peek(), "a differential equation cannot be repeated with '*'");
    return ode(std::move(eqs), domain);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).program_only(); }
Formula parse_formula(std::string_view text) { return Parser(text).formula_only(); }
Term parse_term(std::string_view text) { return Parser(text).term_only(); }

}  // namespace hpshield
