#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "pepakit/model.hpp"

namespace pepakit {

namespace {

enum class Tok {
  Ident,
  Number,
  Equals,
  Semi,
  LParen,
  RParen,
  Comma,
  Dot,
  Plus,
  Less,
  Greater,
  LBracket,
  RBracket,
  Slash,
  LBrace,
  RBrace,
  Bars,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Equals: return "'='";
    case Tok::Semi: return "';'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Plus: return "'+'";
    case Tok::Less: return "'<'";
    case Tok::Greater: return "'>'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Slash: return "'/'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Bars: return "'||'";
    case Tok::End: return "end of input";
  }
  return "token";
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const SourcePos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      out.push_back({Tok::Ident, std::string(text.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      auto digits = [&] {
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      };
      digits();
      if (j + 1 < text.size() && text[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
        digits();
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          j = k;
          digits();
        }
      }
      out.push_back({Tok::Number, std::string(text.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    Tok kind;
    std::size_t len = 1;
    switch (c) {
      case '=': kind = Tok::Equals; break;
      case ';': kind = Tok::Semi; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case '.': kind = Tok::Dot; break;
      case '+': kind = Tok::Plus; break;
      case '<': kind = Tok::Less; break;
      case '>': kind = Tok::Greater; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case '/': kind = Tok::Slash; break;
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '|':
        if (i + 1 < text.size() && text[i + 1] == '|') {
          kind = Tok::Bars;
          len = 2;
          break;
        }
        [[fallthrough]];
      default:
        throw ModelError(pos, std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, std::string(text.substr(i, len)), pos});
    advance(len);
  }
  out.push_back({Tok::End, "", SourcePos{line, col}});
  return out;
}

// Parsed but unresolved statement: the right-hand side of `X = ...;` is either
// a rate (number / infty / rate alias) or a sequential expression.
struct RawStatement {
  std::string name;
  SourcePos pos;
  SeqPtr body;                    // set for sequential right-hand sides
  std::optional<double> literal;  // set for numeric right-hand sides
  bool infty = false;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  void parse(std::vector<RawStatement>& stmts, SystemPtr& system,
             SourcePos& system_pos) {
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Ident && peek().text == "system") {
        const Token kw = take();
        if (system) throw ModelError(kw.pos, "duplicate system equation");
        system_pos = kw.pos;
        system = parse_system();
        expect(Tok::Semi);
        continue;
      }
      stmts.push_back(parse_statement());
    }
    if (!system) throw ModelError(peek().pos, "missing system equation");
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  Token expect(Tok kind) {
    if (peek().kind != kind) {
      std::string found = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
      throw ModelError(peek().pos,
                       std::string("expected ") + describe(kind) + ", found " + found);
    }
    return take();
  }

  Token expect_ident(const char* what) {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) {
      throw ModelError(peek().pos, std::string("expected ") + what);
    }
    return take();
  }

  static bool is_keyword(std::string_view s) { return s == "system" || s == "infty"; }

  static double number_value(const Token& t) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v))
      throw ModelError(t.pos, "malformed number '" + t.text + "'");
    return v;
  }

  RawStatement parse_statement() {
    const Token name = expect_ident("definition name");
    expect(Tok::Equals);
    RawStatement st;
    st.name = name.text;
    st.pos = name.pos;
    if (peek().kind == Tok::Number) {
      const Token num = take();
      st.literal = number_value(num);
      if (*st.literal <= 0.0)
        throw ModelError(num.pos, "rate must be positive, got " + num.text);
    } else if (peek().kind == Tok::Ident && peek().text == "infty") {
      take();
      st.infty = true;
    } else {
      st.body = parse_choice();
    }
    expect(Tok::Semi);
    return st;
  }

  SeqPtr parse_choice() {
    SeqPtr left = parse_term();
    while (peek().kind == Tok::Plus) {
      const Token plus = take();
      SeqPtr right = parse_term();
      left = std::make_shared<SeqExpr>(SeqExpr{Choice{left, right}, plus.pos});
    }
    return left;
  }

  SeqPtr parse_term() {
    const Token& t = peek();
    if (t.kind == Tok::LParen) {
      if (peek(1).kind == Tok::Ident && peek(2).kind == Tok::Comma) return parse_prefix();
      take();
      SeqPtr inner = parse_choice();
      expect(Tok::RParen);
      return inner;
    }
    const Token name = expect_ident("sequential component");
    return std::make_shared<SeqExpr>(SeqExpr{Const{name.text}, name.pos});
  }

  SeqPtr parse_prefix() {
    const Token open = expect(Tok::LParen);
    const Token action = expect_ident("action type");
    expect(Tok::Comma);
    RateTerm rate;
    const Token r = take();
    if (r.kind == Tok::Number) {
      const double v = number_value(r);
      if (v <= 0.0) throw ModelError(r.pos, "rate must be positive, got " + r.text);
      rate.value = RateValue::finite(v);
    } else if (r.kind == Tok::Ident && r.text == "infty") {
      rate.value = RateValue::passive();
    } else if (r.kind == Tok::Ident && !is_keyword(r.text)) {
      rate.symbol = r.text;
      rate_refs_.push_back({r.text, r.pos});
    } else {
      throw ModelError(r.pos, "expected rate");
    }
    expect(Tok::RParen);
    expect(Tok::Dot);
    SeqPtr next = parse_term();
    return std::make_shared<SeqExpr>(
        SeqExpr{Prefix{action.text, std::move(rate), std::move(next)}, open.pos});
  }

  std::set<std::string> parse_action_list(Tok close) {
    std::set<std::string> actions;
    if (peek().kind == close) {
      take();
      return actions;
    }
    while (true) {
      const Token a = expect_ident("action type");
      actions.insert(a.text);
      if (peek().kind == Tok::Comma) {
        take();
        continue;
      }
      expect(close);
      return actions;
    }
  }

  SystemPtr parse_system() {
    SystemPtr left = parse_hide();
    while (peek().kind == Tok::Less || peek().kind == Tok::Bars) {
      const Token op = take();
      std::set<std::string> actions;
      if (op.kind == Tok::Less) actions = parse_action_list(Tok::Greater);
      SystemPtr right = parse_hide();
      left = std::make_shared<SystemExpr>(
          SystemExpr{Coop{left, std::move(actions), right}, op.pos});
    }
    return left;
  }

  SystemPtr parse_hide() {
    SystemPtr inner = parse_atom();
    while (peek().kind == Tok::Slash) {
      const Token slash = take();
      expect(Tok::LBrace);
      auto actions = parse_action_list(Tok::RBrace);
      inner = std::make_shared<SystemExpr>(SystemExpr{Hide{inner, std::move(actions)}, slash.pos});
    }
    return inner;
  }

  SystemPtr parse_atom() {
    if (peek().kind == Tok::LParen) {
      take();
      SystemPtr inner = parse_system();
      expect(Tok::RParen);
      return inner;
    }
    const Token name = expect_ident("component name");
    std::int64_t count = 1;
    if (peek().kind == Tok::LBracket) {
      take();
      const Token n = expect(Tok::Number);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), v);
      if (ec != std::errc() || ptr != n.text.data() + n.text.size())
        throw ModelError(n.pos, "population must be an integer, got " + n.text);
      if (v < 1) throw ModelError(n.pos, "population must be at least 1, got " + n.text);
      count = v;
      expect(Tok::RBracket);
    }
    return std::make_shared<SystemExpr>(SystemExpr{Group{name.text, count}, name.pos});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;

 public:
  struct Ref {
    std::string name;
    SourcePos pos;
  };
  std::vector<Ref> rate_refs_;
};

// Replace symbolic rates in a sequential expression by their bound values.
SeqPtr resolve_rates(const SeqPtr& e,
                     const std::map<std::string, RateValue, std::less<>>& rates) {
  return std::visit(
      [&](const auto& n) -> SeqPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          Prefix p = n;
          if (!p.rate.symbol.empty()) {
            auto it = rates.find(p.rate.symbol);
            if (it == rates.end()) throw ModelError(e->pos, "undefined rate " + p.rate.symbol);
            p.rate.value = it->second;
          }
          p.next = resolve_rates(n.next, rates);
          return std::make_shared<SeqExpr>(SeqExpr{std::move(p), e->pos});
        } else if constexpr (std::is_same_v<T, Choice>) {
          return std::make_shared<SeqExpr>(
              SeqExpr{Choice{resolve_rates(n.left, rates), resolve_rates(n.right, rates)}, e->pos});
        } else {
          return e;
        }
      },
      e->node);
}

}  // namespace

PepaModel parse_model(std::string_view text) {
  Parser parser(tokenize(text));
  std::vector<RawStatement> stmts;
  SystemPtr system;
  SourcePos system_pos;
  parser.parse(stmts, system, system_pos);

  std::map<std::string, std::size_t, std::less<>> seen;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    if (!seen.emplace(stmts[i].name, i).second)
      throw ModelError(stmts[i].pos, "duplicate definition of " + stmts[i].name);
  }

  // Classify `X = Y;` statements: a rate alias iff Y (transitively) is a rate.
  std::map<std::string, RateValue, std::less<>> rates;
  std::vector<bool> is_rate(stmts.size(), false);
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    if (stmts[i].literal) {
      rates.emplace(stmts[i].name, RateValue::finite(*stmts[i].literal));
      is_rate[i] = true;
    } else if (stmts[i].infty) {
      rates.emplace(stmts[i].name, RateValue::passive());
      is_rate[i] = true;
    }
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      if (is_rate[i]) continue;
      if (const auto* c = std::get_if<Const>(&stmts[i].body->node)) {
        auto it = rates.find(c->name);
        if (it != rates.end()) {
          rates.emplace(stmts[i].name, it->second);
          is_rate[i] = true;
          changed = true;
        }
      }
    }
  }

  for (const auto& ref : parser.rate_refs_) {
    if (!rates.count(ref.name)) throw ModelError(ref.pos, "undefined rate " + ref.name);
  }

  std::vector<RateBinding> bindings;
  std::vector<Definition> defs;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    const auto& st = stmts[i];
    if (is_rate[i]) {
      RateTerm term;
      term.value = rates.at(st.name);
      if (st.body) term.symbol = std::get<Const>(st.body->node).name;
      bindings.push_back({st.name, term, st.pos});
    } else {
      defs.push_back({st.name, resolve_rates(st.body, rates), st.pos});
    }
  }
  return PepaModel(std::move(bindings), std::move(defs), std::move(system));
}

}  // namespace pepakit
