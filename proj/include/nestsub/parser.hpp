#pragma once

#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nestsub/type.hpp"

namespace nestsub {

struct ParseError : std::runtime_error {
  int line, col;
  std::string kind;  // "parse", "duplicate-definition", "unbound-parameter",
                     // "unbound-quantified-variable"

  ParseError(int line_, int col_, const std::string& msg,
             std::string kind_ = "parse")
      : std::runtime_error(std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_),
        kind(std::move(kind_)) {}
};

struct Item {
  enum class Kind { TypeDef, EqType, Check, Decl };
  Kind kind;
  int line = 0, col = 0;

  // TypeDef
  std::string name;
  std::vector<std::string> params;
  TypeRef body;

  // EqType / Check
  TypeRef lhs, rhs;
  bool bidirectional = false;           // eqtype "=" vs "<="
  std::vector<std::string> free_names;  // eqtype seed variables, in order

  // Decl
  std::string raw;
  std::vector<std::string> decl_vars;
  std::vector<TypeRef> types;
};

struct Program {
  std::vector<Item> items;

  std::set<std::string> defined_names() const {
    std::set<std::string> out;
    for (const auto& it : items)
      if (it.kind == Item::Kind::TypeDef) out.insert(it.name);
    return out;
  }
};

namespace detail {

enum class Tok {
  Ident,
  Dollar,
  OneLit,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Colon,
  Comma,
  Dot,
  Equals,
  LessEq,
  Star,
  Lolli,
  PlusBrace,
  AmpBrace,
  Question,
  Bang,
  Turnstile,
  KwType,
  KwEqtype,
  KwCheck,
  KwDecl,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
  size_t offset;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto push = [&](Tok k, std::string text, size_t off) {
    out.push_back({k, std::move(text), line, col, off});
  };
  auto advance = [&](size_t n) {
    for (size_t j = 0; j < n; j++) {
      if (src[i + j] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '%') {  // comment to end of line
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    size_t off = i;
    if (ident_start(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) j++;
      std::string word = src.substr(i, j - i);
      Tok k = Tok::Ident;
      if (word == "type") k = Tok::KwType;
      else if (word == "eqtype") k = Tok::KwEqtype;
      else if (word == "check") k = Tok::KwCheck;
      else if (word == "decl") k = Tok::KwDecl;
      push(k, word, off);
      advance(j - i);
      continue;
    }
    switch (c) {
      case '1':
        if (i + 1 < src.size() && ident_char(src[i + 1]))
          throw ParseError(line, col, "malformed numeric token");
        push(Tok::OneLit, "1", off);
        advance(1);
        continue;
      case '$': push(Tok::Dollar, "$", off); advance(1); continue;
      case '[': push(Tok::LBracket, "[", off); advance(1); continue;
      case ']': push(Tok::RBracket, "]", off); advance(1); continue;
      case '{': push(Tok::LBrace, "{", off); advance(1); continue;
      case '}': push(Tok::RBrace, "}", off); advance(1); continue;
      case '(': push(Tok::LParen, "(", off); advance(1); continue;
      case ')': push(Tok::RParen, ")", off); advance(1); continue;
      case ':': push(Tok::Colon, ":", off); advance(1); continue;
      case ',': push(Tok::Comma, ",", off); advance(1); continue;
      case '.': push(Tok::Dot, ".", off); advance(1); continue;
      case '=': push(Tok::Equals, "=", off); advance(1); continue;
      case '*': push(Tok::Star, "*", off); advance(1); continue;
      case '?': push(Tok::Question, "?", off); advance(1); continue;
      case '!': push(Tok::Bang, "!", off); advance(1); continue;
      case '<':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          push(Tok::LessEq, "<=", off);
          advance(2);
          continue;
        }
        throw ParseError(line, col, "expected '<='");
      case '-':
        if (i + 1 < src.size() && src[i + 1] == 'o') {
          push(Tok::Lolli, "-o", off);
          advance(2);
          continue;
        }
        throw ParseError(line, col, "expected '-o'");
      case '|':
        if (i + 1 < src.size() && src[i + 1] == '-') {
          push(Tok::Turnstile, "|-", off);
          advance(2);
          continue;
        }
        throw ParseError(line, col, "expected '|-'");
      case '+':
        if (i + 1 < src.size() && src[i + 1] == '{') {
          push(Tok::PlusBrace, "+{", off);
          advance(2);
          continue;
        }
        throw ParseError(line, col, "expected '+{'");
      case '&':
        if (i + 1 < src.size() && src[i + 1] == '{') {
          push(Tok::AmpBrace, "&{", off);
          advance(2);
          continue;
        }
        throw ParseError(line, col, "expected '&{'");
      default:
        throw ParseError(line, col,
                         std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", line, col, src.size()});
  return out;
}

class Parser {
 public:
  Parser(const std::string& src, std::set<std::string> params,
         std::set<std::string> vars)
      : src_(src), tokens_(lex(src)), params_(std::move(params)),
        outer_vars_(std::move(vars)) {}

  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_++]; }
  bool at(Tok k) const { return peek().kind == k; }

  Token expect(Tok k, const std::string& what) {
    if (!at(k))
      throw ParseError(peek().line, peek().col,
                       "expected " + what + ", found '" + describe(peek()) + "'");
    return next();
  }

  static std::string describe(const Token& t) {
    return t.kind == Tok::End ? "end of input" : t.text;
  }

  // type := ltype ; ltype := ttype [ "-o" ltype ] ; ttype := atype [ "*" ttype ]
  TypeRef parse_type() {
    TypeRef left = parse_ttype();
    if (at(Tok::Lolli)) {
      next();
      return t_lolli(std::move(left), parse_type());
    }
    return left;
  }

  TypeRef parse_ttype() {
    TypeRef left = parse_atype();
    if (at(Tok::Star)) {
      next();
      return t_tensor(std::move(left), parse_ttype());
    }
    return left;
  }

  TypeRef parse_atype() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::OneLit:
        next();
        return t_one();
      case Tok::LParen: {
        next();
        TypeRef inner = parse_type();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::PlusBrace: {
        next();
        return t_ichoice(parse_branches());
      }
      case Tok::AmpBrace: {
        next();
        return t_echoice(parse_branches());
      }
      case Tok::Question:
      case Tok::Bang: {
        bool exists = t.kind == Tok::Question;
        next();
        Token binder = expect(Tok::Ident, "quantifier variable");
        expect(Tok::Dot, "'.'");
        binders_.push_back(binder.text);
        TypeRef body = parse_type();
        binders_.pop_back();
        return exists ? t_exists(binder.text, std::move(body))
                      : t_forall(binder.text, std::move(body));
      }
      case Tok::Ident: {
        Token id = next();
        std::vector<TypeRef> args;
        while (at(Tok::LBracket)) {
          next();
          args.push_back(parse_type());
          expect(Tok::RBracket, "']'");
        }
        bool is_binder = false;
        for (auto it = binders_.rbegin(); it != binders_.rend(); ++it)
          if (*it == id.text) { is_binder = true; break; }
        if (is_binder || outer_vars_.count(id.text)) {
          if (!args.empty())
            throw ParseError(id.line, id.col,
                             "quantified variable '" + id.text +
                                 "' cannot take arguments");
          return t_quantvar(id.text);
        }
        if (params_.count(id.text)) {
          if (!args.empty())
            throw ParseError(id.line, id.col,
                             "type parameter '" + id.text +
                                 "' cannot be applied to arguments");
          return t_param(id.text);
        }
        return t_named(id.text, std::move(args));
      }
      default:
        throw ParseError(t.line, t.col,
                         "expected a type, found '" + describe(t) + "'");
    }
  }

  std::vector<Branch> parse_branches() {
    std::vector<Branch> out;
    std::set<std::string> labels;
    while (true) {
      Token lt = peek();
      std::string label;
      if (at(Tok::Ident)) label = next().text;
      else if (at(Tok::Dollar)) { next(); label = "$"; }
      else
        throw ParseError(lt.line, lt.col,
                         "expected a branch label, found '" + describe(lt) + "'");
      if (!labels.insert(label).second)
        throw ParseError(lt.line, lt.col,
                         "duplicate label '" + label + "' in choice");
      expect(Tok::Colon, "':'");
      out.emplace_back(label, parse_type());
      if (at(Tok::Comma)) {
        next();
        continue;
      }
      break;
    }
    expect(Tok::RBrace, "'}'");
    return out;
  }

  void set_params(std::set<std::string> p) { params_ = std::move(p); }
  void set_outer_vars(std::set<std::string> v) { outer_vars_ = std::move(v); }

  const std::string& source() const { return src_; }

 private:
  std::string src_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
  std::set<std::string> params_;       // current typedef parameters
  std::set<std::string> outer_vars_;   // decl-bound or caller-supplied vars
  std::vector<std::string> binders_;   // quantifier scope stack
};

// Rewrites provisional nullary names after the set of defined constructors
// is known. Mode decides what an unresolvable bare identifier means.
enum class ResolveMode { TypeDefBody, EqTypeSide, CheckSide, DeclType };

inline TypeRef resolve_names(const TypeRef& t, const std::set<std::string>& defined,
                             ResolveMode mode, int line, int col,
                             std::vector<std::string>& collected,
                             std::set<std::string>& collected_seen) {
  switch (t->tag) {
    case TypeTag::One:
    case TypeTag::Param:
    case TypeTag::QuantVar:
      return t;
    case TypeTag::InternalChoice:
    case TypeTag::ExternalChoice: {
      std::vector<Branch> bs;
      bs.reserve(t->branches.size());
      for (const auto& [label, c] : t->branches)
        bs.emplace_back(label, resolve_names(c, defined, mode, line, col,
                                             collected, collected_seen));
      return t->tag == TypeTag::InternalChoice ? t_ichoice(std::move(bs))
                                               : t_echoice(std::move(bs));
    }
    case TypeTag::Tensor:
      return t_tensor(resolve_names(t->left, defined, mode, line, col,
                                    collected, collected_seen),
                      resolve_names(t->right, defined, mode, line, col,
                                    collected, collected_seen));
    case TypeTag::Lolli:
      return t_lolli(resolve_names(t->left, defined, mode, line, col,
                                   collected, collected_seen),
                     resolve_names(t->right, defined, mode, line, col,
                                   collected, collected_seen));
    case TypeTag::Exists:
      return t_exists(t->name, resolve_names(t->body, defined, mode, line, col,
                                             collected, collected_seen));
    case TypeTag::Forall:
      return t_forall(t->name, resolve_names(t->body, defined, mode, line, col,
                                             collected, collected_seen));
    case TypeTag::Named: {
      if (t->args.empty() && !defined.count(t->name)) {
        switch (mode) {
          case ResolveMode::TypeDefBody:
            throw ParseError(line, col,
                             "'" + t->name +
                                 "' is not a declared parameter or defined type",
                             "unbound-parameter");
          case ResolveMode::EqTypeSide:
            if (collected_seen.insert(t->name).second)
              collected.push_back(t->name);
            return t_quantvar(t->name);
          case ResolveMode::CheckSide:
          case ResolveMode::DeclType:
            throw ParseError(line, col,
                             "unbound variable '" + t->name + "' in query",
                             "unbound-quantified-variable");
        }
      }
      std::vector<TypeRef> as;
      as.reserve(t->args.size());
      for (const auto& a : t->args)
        as.push_back(resolve_names(a, defined, mode, line, col, collected,
                                   collected_seen));
      return t_named(t->name, std::move(as));
    }
  }
  return t;
}

inline Program parse_program_impl(const std::string& src) {
  Parser p(src, {}, {});
  Program prog;
  while (!p.at(Tok::End)) {
    Token head = p.peek();
    Item item;
    item.line = head.line;
    item.col = head.col;
    switch (head.kind) {
      case Tok::KwType: {
        p.next();
        item.kind = Item::Kind::TypeDef;
        item.name = p.expect(Tok::Ident, "type name").text;
        std::set<std::string> param_set;
        while (p.at(Tok::LBracket)) {
          p.next();
          Token pt = p.expect(Tok::Ident, "type parameter");
          if (!param_set.insert(pt.text).second)
            throw ParseError(pt.line, pt.col,
                             "duplicate parameter '" + pt.text + "'");
          item.params.push_back(pt.text);
          p.expect(Tok::RBracket, "']'");
        }
        p.expect(Tok::Equals, "'='");
        p.set_params(param_set);
        item.body = p.parse_type();
        p.set_params({});
        break;
      }
      case Tok::KwEqtype: {
        p.next();
        item.kind = Item::Kind::EqType;
        item.lhs = p.parse_type();
        if (p.at(Tok::LessEq)) {
          p.next();
          item.bidirectional = false;
        } else if (p.at(Tok::Equals)) {
          p.next();
          item.bidirectional = true;
        } else {
          throw ParseError(p.peek().line, p.peek().col,
                           "expected '<=' or '=' in eqtype declaration");
        }
        item.rhs = p.parse_type();
        break;
      }
      case Tok::KwCheck: {
        p.next();
        item.kind = Item::Kind::Check;
        item.lhs = p.parse_type();
        p.expect(Tok::LessEq, "'<='");
        item.rhs = p.parse_type();
        break;
      }
      case Tok::KwDecl: {
        Token start = p.next();
        item.kind = Item::Kind::Decl;
        item.name = p.expect(Tok::Ident, "process name").text;
        std::set<std::string> var_set;
        while (p.at(Tok::LBracket)) {
          p.next();
          Token vt = p.expect(Tok::Ident, "type variable");
          if (!var_set.insert(vt.text).second)
            throw ParseError(vt.line, vt.col,
                             "duplicate type variable '" + vt.text + "'");
          item.decl_vars.push_back(vt.text);
          p.expect(Tok::RBracket, "']'");
        }
        p.expect(Tok::Colon, "':'");
        p.set_outer_vars(var_set);
        while (p.at(Tok::LParen)) {
          p.next();
          p.expect(Tok::Ident, "channel name");
          p.expect(Tok::Colon, "':'");
          item.types.push_back(p.parse_type());
          p.expect(Tok::RParen, "')'");
        }
        p.expect(Tok::Turnstile, "'|-'");
        p.expect(Tok::LParen, "'('");
        p.expect(Tok::Ident, "channel name");
        p.expect(Tok::Colon, "':'");
        item.types.push_back(p.parse_type());
        Token close = p.expect(Tok::RParen, "')'");
        p.set_outer_vars({});
        item.raw = src.substr(start.offset, close.offset + 1 - start.offset);
        break;
      }
      default:
        throw ParseError(head.line, head.col,
                         "expected a declaration, found '" +
                             Parser::describe(head) + "'");
    }
    prog.items.push_back(std::move(item));
  }

  // Name resolution over the whole program.
  std::set<std::string> defined;
  for (const auto& it : prog.items) {
    if (it.kind != Item::Kind::TypeDef) continue;
    if (!defined.insert(it.name).second)
      throw ParseError(it.line, it.col, "type '" + it.name + "' defined twice",
                       "duplicate-definition");
  }
  std::vector<std::string> sink;
  std::set<std::string> sink_seen;
  for (auto& it : prog.items) {
    switch (it.kind) {
      case Item::Kind::TypeDef:
        it.body = resolve_names(it.body, defined, ResolveMode::TypeDefBody,
                                it.line, it.col, sink, sink_seen);
        break;
      case Item::Kind::EqType: {
        std::set<std::string> seen;
        it.lhs = resolve_names(it.lhs, defined, ResolveMode::EqTypeSide,
                               it.line, it.col, it.free_names, seen);
        it.rhs = resolve_names(it.rhs, defined, ResolveMode::EqTypeSide,
                               it.line, it.col, it.free_names, seen);
        break;
      }
      case Item::Kind::Check:
        it.lhs = resolve_names(it.lhs, defined, ResolveMode::CheckSide,
                               it.line, it.col, sink, sink_seen);
        it.rhs = resolve_names(it.rhs, defined, ResolveMode::CheckSide,
                               it.line, it.col, sink, sink_seen);
        break;
      case Item::Kind::Decl:
        for (auto& t : it.types)
          t = resolve_names(t, defined, ResolveMode::DeclType, it.line, it.col,
                            sink, sink_seen);
        break;
    }
  }
  return prog;
}

}  // namespace detail

inline Program parse_program(const std::string& src) {
  return detail::parse_program_impl(src);
}

// Parses a single type. Bare identifiers resolve against the given
// parameter and variable sets; anything else becomes a nullary name.
inline TypeRef parse_type(const std::string& src,
                          const std::set<std::string>& params = {},
                          const std::set<std::string>& vars = {}) {
  detail::Parser p(src, params, vars);
  TypeRef t = p.parse_type();
  p.expect(detail::Tok::End, "end of input");
  return t;
}

}  // namespace nestsub
