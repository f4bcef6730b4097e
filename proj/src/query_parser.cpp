#include "blueprintd/query.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace blueprintd {

std::string_view to_string(CompareOp op) noexcept {
  switch (op) {
  case CompareOp::Eq:
    return "=";
  case CompareOp::NotEq:
    return "<>";
  case CompareOp::Lt:
    return "<";
  case CompareOp::Le:
    return "<=";
  case CompareOp::Gt:
    return ">";
  case CompareOp::Ge:
    return ">=";
  case CompareOp::VectorDistance:
    return "<=>";
  }
  return "?";
}

std::string_view to_string(AggregateFn fn) noexcept {
  switch (fn) {
  case AggregateFn::Count:
    return "COUNT";
  case AggregateFn::Sum:
    return "SUM";
  case AggregateFn::Avg:
    return "AVG";
  case AggregateFn::Min:
    return "MIN";
  case AggregateFn::Max:
    return "MAX";
  }
  return "?";
}

std::size_t LogicalQuery::column_count() const {
  std::size_t n = 0;
  for (const auto& [table, cols] : columns) n += cols.size();
  return n;
}

std::span<const std::string> default_capability_keywords() {
  static const std::vector<std::string> keywords{"<=>"};
  return keywords;
}

namespace {

enum class Tok { Ident, Number, String, Op, Comma, Dot, LParen, RParen, Star, Semicolon, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t pos = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto prev_is_operator = [&] {
    return out.empty() || out.back().kind == Tok::Op || out.back().kind == Tok::Comma ||
           out.back().kind == Tok::LParen;
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < s.size() && is_ident_char(s[i])) ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
    } else if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1])) ||
               (c == '-' && prev_is_operator() && i + 1 < s.size() &&
                (is_digit(s[i + 1]) || s[i + 1] == '.'))) {
      ++i;
      while (i < s.size() && (is_digit(s[i]) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && is_digit(s[j])) {
          i = j;
          while (i < s.size() && is_digit(s[i])) ++i;
        }
      }
      out.push_back({Tok::Number, std::string(s.substr(start, i - start)), start});
    } else if (c == '\'') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            value += '\'';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value += s[i++];
      }
      if (!closed) throw ParseError("unterminated string literal", start);
      out.push_back({Tok::String, std::move(value), start});
    } else if (c == '<' || c == '>' || c == '=' || c == '!') {
      std::string op(1, c);
      ++i;
      if (c == '<' && s.substr(i, 2) == "=>") {
        op = "<=>";
        i += 2;
      } else if (i < s.size() && (s[i] == '=' || (c == '<' && s[i] == '>'))) {
        op += s[i++];
      }
      if (op == "!") throw ParseError("unexpected '!'", start);
      out.push_back({Tok::Op, op, start});
    } else {
      Tok kind;
      switch (c) {
      case ',':
        kind = Tok::Comma;
        break;
      case '.':
        kind = Tok::Dot;
        break;
      case '(':
        kind = Tok::LParen;
        break;
      case ')':
        kind = Tok::RParen;
        break;
      case '*':
        kind = Tok::Star;
        break;
      case ';':
        kind = Tok::Semicolon;
        break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
      }
      out.push_back({kind, std::string(1, c), start});
      ++i;
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

const std::set<std::string>& unsupported_keywords() {
  static const std::set<std::string> kw{"OR",    "ORDER", "HAVING", "JOIN",   "LEFT",  "RIGHT",
                                        "OUTER", "INNER", "UNION",  "LIMIT",  "NOT",   "IN",
                                        "LIKE",  "AS",    "ON",     "EXISTS", "INSERT", "UPDATE",
                                        "DELETE", "DISTINCT", "BETWEEN", "CASE", "WITH"};
  return kw;
}

// Column reference as written, resolved against FROM once it is known.
struct RawColumn {
  std::string qualifier;
  std::string column;
  std::size_t pos = 0;
};

struct RawAggregate {
  AggregateFn fn;
  std::optional<RawColumn> column;
};

struct RawFilter {
  RawColumn column;
  CompareOp op;
  Literal literal;
};

struct RawJoin {
  RawColumn left;
  RawColumn right;
};

class Parser {
public:
  explicit Parser(std::string_view sql) : tokens_(tokenize(sql)) {}

  LogicalQuery parse() {
    expect_keyword("SELECT");
    parse_select_list();
    expect_keyword("FROM");
    parse_from();
    if (peek_keyword("WHERE")) {
      advance();
      parse_where();
    }
    if (peek_keyword("GROUP")) {
      advance();
      expect_keyword("BY");
      do {
        group_by_.push_back(parse_column());
      } while (accept(Tok::Comma));
    }
    accept(Tok::Semicolon);
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    return resolve();
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }

  bool peek_keyword(std::string_view kw) const {
    return peek().kind == Tok::Ident && upper(peek().text) == kw;
  }
  void expect_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) fail("expected " + std::string(kw));
    advance();
  }
  void reject_unsupported(const Token& t) const {
    if (t.kind == Tok::Ident && unsupported_keywords().contains(upper(t.text))) {
      throw ParseError("unsupported keyword " + upper(t.text), t.pos);
    }
  }

  RawColumn parse_column() {
    const Token& first = peek();
    if (first.kind != Tok::Ident) fail("expected column reference");
    reject_unsupported(first);
    advance();
    if (accept(Tok::Dot)) {
      const Token& col = peek();
      if (col.kind != Tok::Ident) fail("expected column name after '.'");
      advance();
      return {first.text, col.text, first.pos};
    }
    return {"", first.text, first.pos};
  }

  std::optional<AggregateFn> aggregate_fn(const Token& t) const {
    if (t.kind != Tok::Ident || peek(1).kind != Tok::LParen) return std::nullopt;
    const std::string u = upper(t.text);
    if (u == "COUNT") return AggregateFn::Count;
    if (u == "SUM") return AggregateFn::Sum;
    if (u == "AVG") return AggregateFn::Avg;
    if (u == "MIN") return AggregateFn::Min;
    if (u == "MAX") return AggregateFn::Max;
    throw ParseError("unsupported function " + u, t.pos);
  }

  void parse_select_list() {
    if (accept(Tok::Star)) {
      select_star_ = true;
      return;
    }
    do {
      if (auto fn = aggregate_fn(peek())) {
        advance();
        advance(); // '('
        RawAggregate agg{*fn, std::nullopt};
        if (accept(Tok::Star)) {
          if (*fn != AggregateFn::Count) fail("only COUNT accepts '*'");
        } else {
          agg.column = parse_column();
        }
        if (!accept(Tok::RParen)) fail("expected ')'");
        aggregates_.push_back(std::move(agg));
      } else {
        projections_.push_back(parse_column());
      }
    } while (accept(Tok::Comma));
  }

  void parse_from() {
    do {
      const Token& t = peek();
      if (t.kind == Tok::LParen) fail("subqueries are not supported");
      if (t.kind != Tok::Ident) fail("expected table name");
      reject_unsupported(t);
      if (std::find(tables_.begin(), tables_.end(), t.text) != tables_.end()) {
        fail("table '" + t.text + "' listed twice");
      }
      tables_.push_back(t.text);
      advance();
      if (peek().kind == Tok::Ident && !peek_keyword("WHERE") && !peek_keyword("GROUP")) {
        reject_unsupported(peek());
        fail("table aliases are not supported");
      }
    } while (accept(Tok::Comma));
  }

  Literal parse_literal() {
    const Token& t = peek();
    if (t.kind == Tok::String) {
      advance();
      return t.text;
    }
    if (t.kind == Tok::Number) {
      double v = 0.0;
      const char* b = t.text.data();
      const char* e = b + t.text.size();
      auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc{} || res.ptr != e) fail("malformed number '" + t.text + "'");
      advance();
      return v;
    }
    fail("expected literal");
  }

  static CompareOp to_op(const std::string& s) {
    if (s == "=") return CompareOp::Eq;
    if (s == "<>" || s == "!=") return CompareOp::NotEq;
    if (s == "<") return CompareOp::Lt;
    if (s == "<=") return CompareOp::Le;
    if (s == ">") return CompareOp::Gt;
    if (s == ">=") return CompareOp::Ge;
    return CompareOp::VectorDistance;
  }

  void parse_where() {
    do {
      if (peek().kind == Tok::LParen) fail("parenthesized predicates are not supported");
      RawColumn lhs = parse_column();
      const Token& op_tok = peek();
      if (op_tok.kind != Tok::Op) fail("expected comparison operator");
      advance();
      const CompareOp op = to_op(op_tok.text);
      if (peek().kind == Tok::Ident) {
        if (op != CompareOp::Eq) fail("only equijoins are supported between columns");
        RawColumn rhs = parse_column();
        joins_.push_back({std::move(lhs), std::move(rhs)});
      } else {
        filters_.push_back({std::move(lhs), op, parse_literal()});
      }
    } while (accept_keyword("AND"));
    if (peek_keyword("OR")) fail("disjunctions are not supported");
  }

  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }

  ColumnRef resolve(const RawColumn& raw) {
    if (raw.qualifier.empty()) {
      if (tables_.size() != 1) {
        throw ParseError("ambiguous unqualified column '" + raw.column + "'", raw.pos);
      }
      return {tables_.front(), raw.column};
    }
    if (std::find(tables_.begin(), tables_.end(), raw.qualifier) == tables_.end()) {
      throw ParseError("column qualifier '" + raw.qualifier + "' is not in FROM", raw.pos);
    }
    return {raw.qualifier, raw.column};
  }

  LogicalQuery resolve() {
    LogicalQuery q;
    q.tables = tables_;
    q.select_star = select_star_;
    std::map<std::string, std::set<std::string>> cols;
    auto note = [&](const ColumnRef& c) { cols[c.table].insert(c.column); };
    for (const auto& p : projections_) {
      q.projections.push_back(resolve(p));
      note(q.projections.back());
    }
    for (const auto& a : aggregates_) {
      Aggregate agg{a.fn, std::nullopt};
      if (a.column) {
        agg.column = resolve(*a.column);
        note(*agg.column);
      }
      q.aggregates.push_back(std::move(agg));
    }
    for (const auto& f : filters_) {
      q.filter_predicates.push_back({resolve(f.column), f.op, f.literal});
      note(q.filter_predicates.back().column);
    }
    for (const auto& j : joins_) {
      JoinPredicate jp{resolve(j.left), resolve(j.right)};
      if (jp.left.table == jp.right.table) {
        throw ParseError("join predicate must reference two distinct tables", j.left.pos);
      }
      note(jp.left);
      note(jp.right);
      q.join_predicates.push_back(std::move(jp));
    }
    for (const auto& g : group_by_) {
      q.group_by.push_back(resolve(g));
      note(q.group_by.back());
    }
    for (auto& [table, set] : cols) q.columns[table] = {set.begin(), set.end()};
    return q;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool select_star_ = false;
  std::vector<RawColumn> projections_;
  std::vector<RawAggregate> aggregates_;
  std::vector<std::string> tables_;
  std::vector<RawFilter> filters_;
  std::vector<RawJoin> joins_;
  std::vector<RawColumn> group_by_;
};

bool is_word(std::string_view kw) {
  return std::all_of(kw.begin(), kw.end(), [](char c) { return is_ident_char(c); });
}

std::vector<std::string> scan_capabilities(std::string_view sql,
                                           std::span<const std::string> keywords) {
  const std::string text = upper(sql);
  std::vector<std::string> found;
  for (const auto& kw : keywords) {
    const std::string needle = upper(kw);
    for (std::size_t at = text.find(needle); at != std::string::npos;
         at = text.find(needle, at + 1)) {
      if (is_word(needle)) {
        const bool left_ok = at == 0 || !is_ident_char(text[at - 1]);
        const std::size_t end = at + needle.size();
        const bool right_ok = end >= text.size() || !is_ident_char(text[end]);
        if (!left_ok || !right_ok) continue;
      }
      found.push_back(kw);
      break;
    }
  }
  return found;
}

std::string render_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string render_literal(const Literal& lit) {
  if (const auto* d = std::get_if<double>(&lit)) return render_number(*d);
  std::string out = "'";
  for (char c : std::get<std::string>(lit)) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

} // namespace

LogicalQuery parse_query(std::string_view sql) {
  return parse_query(sql, default_capability_keywords());
}

LogicalQuery parse_query(std::string_view sql, std::span<const std::string> capability_keywords) {
  LogicalQuery q = Parser(sql).parse();
  q.capability_tokens = scan_capabilities(sql, capability_keywords);
  return q;
}

std::string render_query(const LogicalQuery& q) {
  std::string out = "SELECT ";
  if (q.select_star) {
    out += "*";
  } else {
    bool first = true;
    for (const auto& p : q.projections) {
      if (!first) out += ", ";
      out += p.qualified();
      first = false;
    }
    for (const auto& a : q.aggregates) {
      if (!first) out += ", ";
      out += std::string(to_string(a.fn)) + "(" + (a.column ? a.column->qualified() : "*") + ")";
      first = false;
    }
  }
  out += " FROM ";
  for (std::size_t i = 0; i < q.tables.size(); ++i) {
    if (i) out += ", ";
    out += q.tables[i];
  }
  std::vector<std::string> conjuncts;
  for (const auto& f : q.filter_predicates) {
    conjuncts.push_back(f.column.qualified() + " " + std::string(to_string(f.op)) + " " +
                        render_literal(f.literal));
  }
  for (const auto& j : q.join_predicates) {
    conjuncts.push_back(j.left.qualified() + " = " + j.right.qualified());
  }
  if (!conjuncts.empty()) {
    out += " WHERE ";
    for (std::size_t i = 0; i < conjuncts.size(); ++i) {
      if (i) out += " AND ";
      out += conjuncts[i];
    }
  }
  if (!q.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < q.group_by.size(); ++i) {
      if (i) out += ", ";
      out += q.group_by[i].qualified();
    }
  }
  return out;
}

std::string normalize_sql(std::string_view sql) {
  std::string out;
  bool in_string = false;
  bool pending_space = false;
  for (char c : sql) {
    if (in_string) {
      out += c;
      if (c == '\'') in_string = false;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
    if (c == '\'') in_string = true;
  }
  while (!out.empty() && (out.back() == ';' || out.back() == ' ')) out.pop_back();
  return out;
}

std::string query_id_for(std::string_view sql) {
  return "q" + to_hex(fnv1a(normalize_sql(sql)));
}

} // namespace blueprintd
