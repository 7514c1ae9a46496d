#pragma once

#include <set>
#include <vector>

#include "biodb/schema.hpp"

namespace biodb::oracle {

enum class Cmp { eq, gt, lt, ne, ge, le };

bool eval_cmp(std::uint64_t lhs, Cmp cmp, std::uint64_t rhs);

// Set-semantics reference engine the tube programs are checked against.
struct Relation {
  Schema schema;
  std::set<Row> rows;
};

Relation make_relation(Schema s, const std::vector<Row>& rows);

Relation union_(const Relation& a, const Relation& b);
Relation intersect(const Relation& a, const Relation& b);
Relation difference(const Relation& a, const Relation& b);
Relation product(const Relation& a, const Relation& b);
Relation select_const(const Relation& r, std::size_t field, Cmp cmp, std::uint64_t constant);
Relation select_field(const Relation& r, std::size_t f1, Cmp cmp, std::size_t f2);
Relation project(const Relation& r, const std::vector<std::size_t>& cols);
Relation theta_join_const(const Relation& a, const Relation& b, std::size_t field, Cmp cmp,
                          std::uint64_t constant);
Relation theta_join_field(const Relation& a, const Relation& b, std::size_t f1, Cmp cmp,
                          std::size_t f2);

// Maximal quotient: the largest q over the first `quotient_width` columns
// with q x divisor contained in dividend.
Relation divide(const Relation& dividend, const Relation& divisor, std::size_t quotient_width);

// Same value computed through projection, product and two differences;
// used as an independent cross-check of divide.
Relation divide_by_expression(const Relation& dividend, const Relation& divisor,
                              std::size_t quotient_width);

}  // namespace biodb::oracle
