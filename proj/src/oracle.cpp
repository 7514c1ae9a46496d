#include "biodb/oracle.hpp"

#include <algorithm>

namespace biodb::oracle {

bool eval_cmp(std::uint64_t lhs, Cmp cmp, std::uint64_t rhs) {
  switch (cmp) {
    case Cmp::eq: return lhs == rhs;
    case Cmp::gt: return lhs > rhs;
    case Cmp::lt: return lhs < rhs;
    case Cmp::ne: return lhs != rhs;
    case Cmp::ge: return lhs >= rhs;
    case Cmp::le: return lhs <= rhs;
  }
  return false;
}

namespace {

void require_same_layout(const Relation& a, const Relation& b, const char* op) {
  if (a.schema.field_count() != b.schema.field_count())
    throw schema_error(std::string(op) + ": field counts differ");
  for (std::size_t k = 1; k <= a.schema.field_count(); ++k)
    if (a.schema.width(k) != b.schema.width(k))
      throw schema_error(std::string(op) + ": field " + std::to_string(k) + " widths differ");
}

}  // namespace

Relation make_relation(Schema s, const std::vector<Row>& rows) {
  s.validate();
  Relation r{std::move(s), {}};
  for (const Row& row : rows) {
    require_fits(r.schema, row);
    r.rows.insert(row);
  }
  return r;
}

Relation union_(const Relation& a, const Relation& b) {
  require_same_layout(a, b, "union");
  Relation out{a.schema, a.rows};
  out.rows.insert(b.rows.begin(), b.rows.end());
  return out;
}

Relation intersect(const Relation& a, const Relation& b) {
  require_same_layout(a, b, "intersect");
  Relation out{a.schema, {}};
  for (const Row& r : a.rows)
    if (b.rows.count(r)) out.rows.insert(r);
  return out;
}

Relation difference(const Relation& a, const Relation& b) {
  require_same_layout(a, b, "difference");
  Relation out{a.schema, {}};
  for (const Row& r : a.rows)
    if (!b.rows.count(r)) out.rows.insert(r);
  return out;
}

Relation product(const Relation& a, const Relation& b) {
  Relation out{concat_schemas(a.schema, b.schema), {}};
  for (const Row& x : a.rows)
    for (const Row& y : b.rows) {
      Row joined = x;
      joined.insert(joined.end(), y.begin(), y.end());
      out.rows.insert(std::move(joined));
    }
  return out;
}

Relation select_const(const Relation& r, std::size_t field, Cmp cmp, std::uint64_t constant) {
  if (field < 1 || field > r.schema.field_count())
    throw schema_error("select: field index out of range");
  if (constant >= (std::uint64_t(1) << r.schema.width(field)))
    throw schema_error("select: constant overflows field width");
  Relation out{r.schema, {}};
  for (const Row& row : r.rows)
    if (eval_cmp(row[field - 1], cmp, constant)) out.rows.insert(row);
  return out;
}

Relation select_field(const Relation& r, std::size_t f1, Cmp cmp, std::size_t f2) {
  if (f1 < 1 || f1 > r.schema.field_count() || f2 < 1 || f2 > r.schema.field_count())
    throw schema_error("select: field index out of range");
  Relation out{r.schema, {}};
  for (const Row& row : r.rows)
    if (eval_cmp(row[f1 - 1], cmp, row[f2 - 1])) out.rows.insert(row);
  return out;
}

Relation project(const Relation& r, const std::vector<std::size_t>& cols) {
  Relation out{project_schema(r.schema, cols), {}};
  for (const Row& row : r.rows) {
    Row p;
    p.reserve(cols.size());
    for (std::size_t k : cols) p.push_back(row[k - 1]);
    out.rows.insert(std::move(p));
  }
  return out;
}

Relation theta_join_const(const Relation& a, const Relation& b, std::size_t field, Cmp cmp,
                          std::uint64_t constant) {
  return select_const(product(a, b), field, cmp, constant);
}

Relation theta_join_field(const Relation& a, const Relation& b, std::size_t f1, Cmp cmp,
                          std::size_t f2) {
  return select_field(product(a, b), f1, cmp, f2);
}

Relation divide(const Relation& dividend, const Relation& divisor, std::size_t quotient_width) {
  const std::size_t w = quotient_width;
  const std::size_t n = dividend.schema.field_count();
  if (w < 1 || w >= n) throw schema_error("divide: quotient width out of range");
  if (divisor.schema.field_count() != n - w)
    throw schema_error("divide: divisor field count must match the dividend's tail");
  for (std::size_t k = 1; k <= n - w; ++k)
    if (divisor.schema.width(k) != dividend.schema.width(w + k))
      throw schema_error("divide: divisor field widths must match the dividend's tail");

  std::vector<std::size_t> head(w);
  for (std::size_t k = 0; k < w; ++k) head[k] = k + 1;
  Relation candidates = project(dividend, head);
  Relation out{candidates.schema, {}};
  for (const Row& a : candidates.rows) {
    bool all = true;
    for (const Row& b : divisor.rows) {
      Row full = a;
      full.insert(full.end(), b.begin(), b.end());
      if (!dividend.rows.count(full)) {
        all = false;
        break;
      }
    }
    if (all) out.rows.insert(a);
  }
  return out;
}

Relation divide_by_expression(const Relation& dividend, const Relation& divisor,
                              std::size_t quotient_width) {
  std::vector<std::size_t> head(quotient_width);
  for (std::size_t k = 0; k < quotient_width; ++k) head[k] = k + 1;
  Relation pa = project(dividend, head);
  Relation shortfall = project(difference(product(pa, divisor), dividend), head);
  return difference(pa, shortfall);
}

}  // namespace biodb::oracle
