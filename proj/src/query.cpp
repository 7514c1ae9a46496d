#include "biodb/query.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "biodb/encoding.hpp"
#include "biodb/errors.hpp"

namespace biodb::query {

namespace {

enum class Tok { ident, number, lparen, rparen, lbracket, rbracket, comma, cmp, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  relalg::Comparator cmp = relalg::Comparator::eq;
  std::uint64_t value = 0;
  std::size_t line = 1, column = 1;
};

std::string token_desc(const Token& t) {
  return t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& msg) {
  throw parse_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": " + msg);
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  char cur() const { return text_[pos_]; }
  bool more() const { return pos_ < text_.size(); }
  void step() {
    if (cur() == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void advance();

  std::string_view text_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
  Token tok_;
};

void Lexer::advance() {
  while (more() && (cur() == ' ' || cur() == '\t' || cur() == '\r' || cur() == '\n')) step();
  tok_ = Token{};
  tok_.line = line_;
  tok_.column = col_;
  if (!more()) {
    tok_.kind = Tok::end;
    return;
  }
  const char c = cur();
  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
    tok_.kind = Tok::ident;
    while (more() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_')) {
      tok_.text += cur();
      step();
    }
    return;
  }
  if (std::isdigit(static_cast<unsigned char>(c))) {
    tok_.kind = Tok::number;
    while (more() && std::isdigit(static_cast<unsigned char>(cur()))) {
      tok_.text += cur();
      step();
    }
    auto [p, ec] = std::from_chars(tok_.text.data(), tok_.text.data() + tok_.text.size(),
                                   tok_.value);
    if (ec != std::errc() || p != tok_.text.data() + tok_.text.size())
      parse_fail(tok_.line, tok_.column, "integer literal '" + tok_.text + "' out of range");
    return;
  }
  auto punct = [&](Tok k) {
    tok_.kind = k;
    tok_.text = c;
    step();
  };
  switch (c) {
    case '(': punct(Tok::lparen); return;
    case ')': punct(Tok::rparen); return;
    case '[': punct(Tok::lbracket); return;
    case ']': punct(Tok::rbracket); return;
    case ',': punct(Tok::comma); return;
    case '=':
      punct(Tok::cmp);
      tok_.cmp = relalg::Comparator::eq;
      return;
    case '<':
    case '>':
      punct(Tok::cmp);
      if (more() && cur() == '=') {
        tok_.text += '=';
        step();
        tok_.cmp = (c == '<') ? relalg::Comparator::le : relalg::Comparator::ge;
      } else {
        tok_.cmp = (c == '<') ? relalg::Comparator::lt : relalg::Comparator::gt;
      }
      return;
    case '!':
      step();
      if (!more() || cur() != '=')
        parse_fail(tok_.line, tok_.column, "expected '=' after '!'");
      step();
      tok_.kind = Tok::cmp;
      tok_.text = "!=";
      tok_.cmp = relalg::Comparator::ne;
      return;
    default:
      parse_fail(tok_.line, tok_.column, std::string("unexpected character '") + c + "'");
  }
}

bool keyword_kind(const std::string& word, NodeKind& out) {
  static const std::pair<const char*, NodeKind> table[] = {
      {"union", NodeKind::union_op},   {"intersect", NodeKind::intersect_op},
      {"diff", NodeKind::diff_op},     {"product", NodeKind::product_op},
      {"join", NodeKind::join_op},     {"divide", NodeKind::divide_op},
      {"select", NodeKind::select_op}, {"project", NodeKind::project_op},
  };
  for (const auto& [kw, kind] : table)
    if (word == kw) {
      out = kind;
      return true;
    }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  std::unique_ptr<Expr> parse() {
    auto e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Tok::end)
      parse_fail(t.line, t.column, "expected end of query, got " + token_desc(t));
    return e;
  }

 private:
  Token expect(Tok k, const char* what) {
    Token t = lex_.take();
    if (t.kind != k)
      parse_fail(t.line, t.column, std::string("expected ") + what + ", got " + token_desc(t));
    return t;
  }

  std::unique_ptr<Expr> expr() {
    Token t = lex_.take();
    if (t.kind != Tok::ident)
      parse_fail(t.line, t.column, "expected relation name or operator, got " + token_desc(t));
    auto node = std::make_unique<Expr>();
    node->line = t.line;
    node->column = t.column;
    if (lex_.peek().kind != Tok::lparen) {
      node->kind = NodeKind::relation;
      node->relation = t.text;
      return node;
    }
    if (!keyword_kind(t.text, node->kind))
      parse_fail(t.line, t.column, "unknown operator '" + t.text + "'");
    lex_.take();  // '('
    switch (node->kind) {
      case NodeKind::union_op:
      case NodeKind::intersect_op:
      case NodeKind::diff_op:
      case NodeKind::product_op:
      case NodeKind::divide_op:
        node->args.push_back(expr());
        expect(Tok::comma, "','");
        node->args.push_back(expr());
        break;
      case NodeKind::select_op: {
        node->args.push_back(expr());
        expect(Tok::comma, "','");
        node->field = expect(Tok::ident, "field name").text;
        node->cmp = expect(Tok::cmp, "comparator").cmp;
        node->constant = expect(Tok::number, "integer").value;
        break;
      }
      case NodeKind::join_op: {
        node->args.push_back(expr());
        expect(Tok::comma, "','");
        node->args.push_back(expr());
        expect(Tok::comma, "','");
        node->field = expect(Tok::ident, "field name").text;
        node->cmp = expect(Tok::cmp, "comparator").cmp;
        Token rhs = lex_.take();
        if (rhs.kind == Tok::ident) {
          node->rhs_is_field = true;
          node->rhs_field = rhs.text;
        } else if (rhs.kind == Tok::number) {
          node->constant = rhs.value;
        } else {
          parse_fail(rhs.line, rhs.column,
                     "expected field name or integer, got " + token_desc(rhs));
        }
        break;
      }
      case NodeKind::project_op: {
        node->args.push_back(expr());
        expect(Tok::comma, "','");
        expect(Tok::lbracket, "'['");
        node->columns.push_back(expect(Tok::ident, "column name").text);
        while (lex_.peek().kind == Tok::comma) {
          lex_.take();
          node->columns.push_back(expect(Tok::ident, "column name").text);
        }
        expect(Tok::rbracket, "']'");
        break;
      }
      case NodeKind::relation:
        break;
    }
    expect(Tok::rparen, "')'");
    return node;
  }

  Lexer lex_;
};

void print_to(const Expr& e, std::ostream& os) {
  if (e.kind == NodeKind::relation) {
    os << e.relation;
    return;
  }
  os << node_keyword(e.kind) << '(';
  print_to(*e.args[0], os);
  switch (e.kind) {
    case NodeKind::select_op:
      os << ", " << e.field << ' ' << relalg::comparator_symbol(e.cmp) << ' ' << e.constant;
      break;
    case NodeKind::project_op:
      os << ", [";
      for (std::size_t i = 0; i < e.columns.size(); ++i)
        os << (i ? ", " : "") << e.columns[i];
      os << ']';
      break;
    case NodeKind::join_op:
      os << ", ";
      print_to(*e.args[1], os);
      os << ", " << e.field << ' ' << relalg::comparator_symbol(e.cmp) << ' ';
      if (e.rhs_is_field)
        os << e.rhs_field;
      else
        os << e.constant;
      break;
    default:
      os << ", ";
      print_to(*e.args[1], os);
      break;
  }
  os << ')';
}

[[noreturn]] void type_fail(const Expr& e, const std::string& msg) {
  throw schema_error("line " + std::to_string(e.line) + ", column " + std::to_string(e.column) +
                     ": " + msg);
}

std::string layout_string(const Schema& s) {
  std::ostringstream os;
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    os << (k > 1 ? ", " : "") << s.fields[k - 1].name << ':' << s.width(k);
  return os.str();
}

bool same_layout(const Schema& a, const Schema& b) {
  if (a.field_count() != b.field_count()) return false;
  for (std::size_t k = 1; k <= a.field_count(); ++k)
    if (a.width(k) != b.width(k)) return false;
  return true;
}

std::size_t resolve_field(const Schema& s, const Expr& e, const std::string& name) {
  if (auto idx = s.field_index(name)) return *idx;
  type_fail(e, "unknown field '" + name + "' (have " + layout_string(s) + ")");
}

void check_constant_fits(const Expr& e, const Schema& s, std::size_t field,
                         std::uint64_t constant) {
  const unsigned width = static_cast<unsigned>(s.width(field));
  if (width < 64 && constant >= (std::uint64_t(1) << width))
    type_fail(e, "constant " + std::to_string(constant) + " does not fit field '" +
                     s.fields[field - 1].name + "' of width " + std::to_string(width));
}

// Join predicates name bare fields: the left side searches the left
// operand first, the right side the right operand first.
relalg::JoinSpec make_join_spec(const Expr& e, const Schema& l, const Schema& r,
                                const Schema& joined) {
  relalg::JoinSpec spec;
  spec.theta = e.cmp;
  if (auto idx = l.field_index(e.field))
    spec.field = *idx;
  else if (auto ridx = r.field_index(e.field))
    spec.field = l.field_count() + *ridx;
  else
    type_fail(e, "unknown field '" + e.field + "' in join operands");
  if (e.rhs_is_field) {
    spec.rhs_is_field = true;
    if (auto ridx = r.field_index(e.rhs_field))
      spec.rhs_field = l.field_count() + *ridx;
    else if (auto idx = l.field_index(e.rhs_field))
      spec.rhs_field = *idx;
    else
      type_fail(e, "unknown field '" + e.rhs_field + "' in join operands");
    if (joined.width(spec.field) != joined.width(spec.rhs_field))
      type_fail(e, "join fields '" + e.field + "' and '" + e.rhs_field +
                       "' have different widths");
  } else {
    spec.rhs_is_field = false;
    spec.rhs_const = e.constant;
    check_constant_fits(e, joined, spec.field, e.constant);
  }
  return spec;
}

std::vector<std::size_t> resolve_columns(const Expr& e, const Schema& s) {
  std::vector<std::size_t> cols;
  for (const auto& name : e.columns) {
    std::size_t idx = resolve_field(s, e, name);
    for (std::size_t seen : cols)
      if (seen == idx) type_fail(e, "duplicate column '" + name + "'");
    cols.push_back(idx);
  }
  return cols;
}

void check_divide(const Expr& e, const Schema& l, const Schema& r) {
  if (r.field_count() >= l.field_count())
    type_fail(e, "divisor must have fewer fields than the dividend");
  const std::size_t w = l.field_count() - r.field_count();
  for (std::size_t k = 1; k <= r.field_count(); ++k)
    if (r.width(k) != l.width(w + k))
      type_fail(e, "divisor field widths must match the dividend's trailing fields (" +
                       layout_string(l) + " vs " + layout_string(r) + ")");
}

std::vector<std::size_t> head_columns(std::size_t w) {
  std::vector<std::size_t> head(w);
  for (std::size_t k = 0; k < w; ++k) head[k] = k + 1;
  return head;
}

struct ExecNode {
  Schema schema;
  std::vector<Row> rows;
  Tube tube;
  CatalogEntry* origin = nullptr;  // set when tube is a catalog tube
};

class Evaluator {
 public:
  Evaluator(TubeMachine& m, Catalog& cat) : m_(m), cat_(cat) {}

  ExecNode exec(const Expr& e);
  std::vector<NodeReport> reports;

 private:
  static void write_back(ExecNode& node, Tube restored) {
    if (node.origin) node.origin->tube = restored;
  }

  // Base relations run straight off their catalog tubes; intermediate
  // results are materialized rows, re-loaded into a fresh tube for the
  // consuming operator.
  Tube operand_tube(const ExecNode& node, const std::string& label) {
    if (node.origin) return node.tube;
    Tube t = m_.make_tube(label + ".in");
    load_relation(m_, t, node.rows, node.schema);
    return t;
  }

  TubeMachine& m_;
  Catalog& cat_;
};

ExecNode Evaluator::exec(const Expr& e) {
  if (e.kind == NodeKind::relation) {
    CatalogEntry* ent = cat_.find(e.relation);
    if (!ent) type_fail(e, "unknown relation '" + e.relation + "'");
    NodeReport rep;
    rep.label = e.relation;
    rep.out_rows = ent->rows.size();
    reports.push_back(std::move(rep));
    return ExecNode{ent->schema, ent->rows, ent->tube, ent};
  }

  ExecNode left = exec(*e.args[0]);
  ExecNode right = e.args.size() > 1 ? exec(*e.args[1]) : ExecNode{};

  const OpCounts before = m_.counts();
  NodeReport rep;
  rep.seq_begin = m_.next_seq();
  rep.label = node_keyword(e.kind);
  ExecNode node;
  try {
    switch (e.kind) {
      case NodeKind::union_op:
      case NodeKind::intersect_op:
      case NodeKind::diff_op:
      case NodeKind::product_op: {
        Tube x = operand_tube(left, rep.label);
        Tube y = operand_tube(right, rep.label);
        if (x == y) {
          // Same catalog tube on both sides; the programs need two
          // physically distinct inputs, so the right side gets a copy.
          y = m_.make_tube(m_.name(x) + ".copy");
          load_relation(m_, y, right.rows, right.schema);
        }
        rep.p = left.rows.size();
        rep.q = right.rows.size();
        if (e.kind == NodeKind::product_op) {
          rep.sigma = right.schema.total_bits();
          relalg::ProgramParams params = relalg::params_for_right(right.rows);
          params.p = left.rows.size();
          auto [work, keep] = m_.amplify(x, "prod.left.work", "prod.left.keep");
          x = m_.merge({x, keep}, m_.name(x));
          relalg::product_two_relations(m_, work, y, left.schema, right.schema, params,
                                        &rep.cost);
          node.tube = work;
          node.schema = concat_schemas(left.schema, right.schema);
          rep.predicted = relalg::predicted_product(rep.q, rep.sigma);
          rep.has_predicted = true;
          rep.predicted_bound = true;  // one append per bit at most fires
        } else {
          rep.sigma = left.schema.total_bits();
          node.schema = left.schema;
          node.schema.name = rep.label;
          node.schema.key_prefix = 0;
          if (e.kind == NodeKind::union_op) {
            relalg::ProgramParams params = relalg::params_for_left(left.rows);
            node.tube = relalg::union_prog(m_, x, y, left.schema, params, &rep.cost);
            rep.predicted = relalg::predicted_union(rep.p, rep.sigma);
          } else if (e.kind == NodeKind::intersect_op) {
            relalg::ProgramParams params = relalg::params_for_left(left.rows);
            node.tube = relalg::intersection_prog(m_, x, y, left.schema, params, &rep.cost);
            rep.predicted = relalg::predicted_intersection(rep.p, rep.sigma);
          } else {
            relalg::ProgramParams params = relalg::params_for_right(right.rows);
            node.tube = relalg::difference_prog(m_, x, y, left.schema, params, &rep.cost);
            rep.predicted = relalg::predicted_difference_bound(rep.q, rep.sigma);
            rep.predicted_bound = true;  // discard fires per right row found
          }
          rep.has_predicted = true;
        }
        write_back(left, x);
        if (!(left.tube == right.tube)) write_back(right, y);
        break;
      }
      case NodeKind::select_op: {
        const std::size_t field = resolve_field(left.schema, e, e.field);
        check_constant_fits(e, left.schema, field, e.constant);
        rep.p = left.rows.size();
        rep.sigma = left.schema.width(field);
        rep.detail = e.field + std::string(" ") + relalg::comparator_symbol(e.cmp) + " " +
                     std::to_string(e.constant);
        Tube x = operand_tube(left, rep.label);
        relalg::SelectionResult sel =
            relalg::selection_prog(m_, x, field, e.constant, left.schema, &rep.cost);
        write_back(left, x);
        node.tube = sel.pick(e.cmp);
        node.schema = left.schema;
        rep.predicted = relalg::predicted_selection(static_cast<unsigned>(rep.sigma));
        rep.has_predicted = true;
        break;
      }
      case NodeKind::project_op: {
        const std::vector<std::size_t> cols = resolve_columns(e, left.schema);
        node.schema = project_schema(left.schema, cols);
        rep.p = left.rows.size();
        rep.sigma = node.schema.total_bits();
        rep.detail = "[";
        for (std::size_t i = 0; i < e.columns.size(); ++i)
          rep.detail += (i ? ", " : "") + e.columns[i];
        rep.detail += "]";
        relalg::ProgramParams params;
        params.m = left.rows.size();
        params.c = cols.size();
        params.source_rows = left.rows;
        Tube x = operand_tube(left, rep.label);
        node.tube = relalg::projection_prog(m_, x, left.schema, cols, params, &rep.cost);
        write_back(left, x);
        break;
      }
      case NodeKind::join_op: {
        node.schema = concat_schemas(left.schema, right.schema);
        const relalg::JoinSpec spec =
            make_join_spec(e, left.schema, right.schema, node.schema);
        rep.p = left.rows.size();
        rep.q = right.rows.size();
        rep.sigma = node.schema.total_bits();
        rep.detail = e.field + std::string(" ") + relalg::comparator_symbol(e.cmp) + " " +
                     (e.rhs_is_field ? e.rhs_field : std::to_string(e.constant));
        relalg::JoinResult jr = relalg::theta_join_prog(m_, left.rows, right.rows,
                                                        left.schema, right.schema, spec,
                                                        &rep.cost);
        node.tube = jr.out;
        break;
      }
      case NodeKind::divide_op: {
        check_divide(e, left.schema, right.schema);
        rep.p = left.rows.size();
        rep.q = right.rows.size();
        rep.sigma = left.schema.total_bits();
        relalg::DivisionResult dr = relalg::division_prog(m_, left.rows, right.rows,
                                                          left.schema, right.schema,
                                                          &rep.cost);
        node.tube = dr.out;
        const std::size_t w = left.schema.field_count() - right.schema.field_count();
        node.schema = project_schema(left.schema, head_columns(w));
        break;
      }
      default:
        type_fail(e, "unexpected node");
    }
  } catch (const machine_fault& f) {
    std::ostringstream os;
    os << "in " << node_keyword(e.kind) << " (line " << e.line << ", column " << e.column
       << "): " << f.what();
    throw machine_fault(os.str());
  }

  node.rows = decode_tube(m_, node.tube, node.schema);
  rep.out_rows = node.rows.size();
  rep.seq_end = m_.next_seq();
  // Anything the evaluator itself issued (copies, re-loads) lands in
  // overhead so the node totals still sum to the machine counters.
  rep.cost.overhead += (m_.counts() - before) - rep.cost.total();
  reports.push_back(std::move(rep));
  return node;
}

}  // namespace

const char* node_keyword(NodeKind k) {
  switch (k) {
    case NodeKind::relation: return "";
    case NodeKind::union_op: return "union";
    case NodeKind::intersect_op: return "intersect";
    case NodeKind::diff_op: return "diff";
    case NodeKind::product_op: return "product";
    case NodeKind::join_op: return "join";
    case NodeKind::divide_op: return "divide";
    case NodeKind::select_op: return "select";
    case NodeKind::project_op: return "project";
  }
  return "";
}

std::unique_ptr<Expr> parse_query(std::string_view text) { return Parser(text).parse(); }

std::string print_query(const Expr& e) {
  std::ostringstream os;
  print_to(e, os);
  return os.str();
}

void Catalog::add(std::string name, Schema schema, std::vector<Row> rows, Tube tube) {
  entries_[std::move(name)] = CatalogEntry{std::move(schema), std::move(rows), tube};
}

CatalogEntry* Catalog::find(std::string_view name) {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const CatalogEntry* Catalog::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

relalg::JoinSpec resolve_join_spec(const Expr& e, const Schema& left, const Schema& right) {
  return make_join_spec(e, left, right, concat_schemas(left, right));
}

std::vector<std::size_t> resolve_project_columns(const Expr& e, const Schema& input) {
  return resolve_columns(e, input);
}

Schema output_schema(const Expr& e, const Catalog& cat) {
  switch (e.kind) {
    case NodeKind::relation: {
      const CatalogEntry* ent = cat.find(e.relation);
      if (!ent) type_fail(e, "unknown relation '" + e.relation + "'");
      return ent->schema;
    }
    case NodeKind::union_op:
    case NodeKind::intersect_op:
    case NodeKind::diff_op: {
      Schema l = output_schema(*e.args[0], cat);
      Schema r = output_schema(*e.args[1], cat);
      if (!same_layout(l, r))
        type_fail(e, std::string(node_keyword(e.kind)) + ": operand layouts differ (" +
                         layout_string(l) + " vs " + layout_string(r) + ")");
      l.name = node_keyword(e.kind);
      l.key_prefix = 0;
      return l;
    }
    case NodeKind::product_op:
      return concat_schemas(output_schema(*e.args[0], cat), output_schema(*e.args[1], cat));
    case NodeKind::join_op: {
      Schema l = output_schema(*e.args[0], cat);
      Schema r = output_schema(*e.args[1], cat);
      Schema joined = concat_schemas(l, r);
      make_join_spec(e, l, r, joined);
      return joined;
    }
    case NodeKind::divide_op: {
      Schema l = output_schema(*e.args[0], cat);
      Schema r = output_schema(*e.args[1], cat);
      check_divide(e, l, r);
      return project_schema(l, head_columns(l.field_count() - r.field_count()));
    }
    case NodeKind::select_op: {
      Schema l = output_schema(*e.args[0], cat);
      const std::size_t field = resolve_field(l, e, e.field);
      check_constant_fits(e, l, field, e.constant);
      return l;
    }
    case NodeKind::project_op: {
      Schema l = output_schema(*e.args[0], cat);
      return project_schema(l, resolve_columns(e, l));
    }
  }
  type_fail(e, "unexpected node");
}

RunResult run(TubeMachine& m, const Expr& e, Catalog& cat) {
  output_schema(e, cat);  // full name and layout validation up front
  Evaluator ev(m, cat);
  ExecNode top = ev.exec(e);
  return RunResult{std::move(top.schema), std::move(top.rows), top.tube,
                   std::move(ev.reports)};
}

}  // namespace biodb::query
