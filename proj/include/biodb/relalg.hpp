#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biodb/encoding.hpp"
#include "biodb/schema.hpp"
#include "biodb/tube_machine.hpp"

namespace biodb::relalg {

enum class Comparator { eq, gt, lt, ne, ge, le };

const char* comparator_symbol(Comparator c);
bool eval_comparator(std::uint64_t lhs, Comparator c, std::uint64_t rhs);

// Host-side knowledge driving a compiled program: loop bounds and the
// probe bit values come from here, never from tube contents.
struct ProgramParams {
  std::size_t p = 0;  // left relation cardinality
  std::size_t q = 0;  // right relation cardinality
  std::size_t m = 0;  // projection input cardinality
  std::size_t c = 0;  // projected column count
  std::size_t w = 0;  // quotient column count
  std::size_t z = 0;  // divisor column count
  std::vector<Row> source_rows;  // rows whose bits feed the probes
};

ProgramParams params_for_left(const std::vector<Row>& rows);
ProgramParams params_for_right(const std::vector<Row>& rows);

// Instructions demanded by the written procedure (core) versus the extra
// splitting/merging the compiler adds to realize product cardinality.
struct ProgramCost {
  OpCounts core;
  OpCounts overhead;
  OpCounts total() const { return core + overhead; }
  ProgramCost& operator+=(const ProgramCost& o) {
    core += o.core;
    overhead += o.overhead;
    return *this;
  }
};

// X union Y. Loops over X's p rows peeling X-duplicates out of a copy of Y.
// Exact cost: amplify 2, merge p*S + p + 3, extract p*S, discard p,
// with S the schema bit count.
Tube union_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                const ProgramParams& params, ProgramCost* cost = nullptr);

// X intersect Y. Exact cost: amplify 1, merge p*S + 2p + 1, extract p*S,
// discard 1.
Tube intersection_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                       const ProgramParams& params, ProgramCost* cost = nullptr);

// X minus Y, looping over Y's q rows. Cost bounds: amplify 2,
// merge 2q*S + 2q + 3 (always attained), extract 2q*S, detect q,
// discard <= q with equality when every Y row also occurs in X.
Tube difference_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                     const ProgramParams& params, ProgramCost* cost = nullptr);

struct JudgePartition {
  Tube gt, eq, lt;
};

// Compares every accepted strand against the single candidate strand,
// MSB-first over the projected schema. Exact cost per call over S' bits:
// amplify 1, merge 4*S' + 1, extract 2*S', detect S'. Both inputs are
// restored; the partition tubes are scratch.
JudgePartition judge_distinct(TubeMachine& m, Tube& accepted, Tube& candidate,
                              const Schema& projected, ProgramCost* cost = nullptr);

// Duplicate-eliminating projection onto cols (1-based schema indices).
// Appends <= m * S_cols, discards <= one per duplicate candidate.
Tube projection_prog(TubeMachine& m, Tube& t0, const Schema& s,
                     const std::vector<std::size_t>& cols, const ProgramParams& params,
                     ProgramCost* cost = nullptr);

struct SelectionResult {
  Tube gt, eq, lt, ne, ge, le;
  Tube pick(Comparator c) const;
};

// Partitions rows by comparing field D against the constant E, yielding
// all six comparator tubes at once. Exact cost over L = width(D):
// amplify 7, merge 4L + 5, extract 2L, append L, detect L.
SelectionResult selection_prog(TubeMachine& m, Tube& t0, std::size_t field,
                               std::uint64_t constant, const Schema& s,
                               ProgramCost* cost = nullptr);

// Field-against-field variant used for join predicates on two columns;
// both fields must have equal width.
SelectionResult selection_field_field(TubeMachine& m, Tube& t0, std::size_t f1, std::size_t f2,
                                      const Schema& s, ProgramCost* cost = nullptr);

// Extends every strand of t51 with the right relation's bits so t51
// decodes, under the concatenated schema, to R1 x R2. t52 is restored.
// Core cost: extract q*S2, merge q*S2, detect 2q*S2, append <= 2q*S2.
// The q-way split of t51 adds q-1 amplifies and q-1 merges of overhead.
void product_two_relations(TubeMachine& m, Tube& t51, Tube& t52, const Schema& left,
                           const Schema& right, const ProgramParams& params,
                           ProgramCost* cost = nullptr);

struct JoinSpec {
  std::size_t field = 1;  // 1-based index into the concatenated schema
  Comparator theta = Comparator::eq;
  bool rhs_is_field = false;
  std::size_t rhs_field = 1;
  std::uint64_t rhs_const = 0;
};

struct JoinResult {
  Tube out;
  Tube left;   // loaded left relation, restored
  Tube right;  // loaded right relation, restored
};

// Loads both relations, copies them, runs product then selection on the
// copies and pours the requested comparator tube into the output.
JoinResult theta_join_prog(TubeMachine& m, const std::vector<Row>& r1,
                           const std::vector<Row>& r2, const Schema& s1, const Schema& s2,
                           const JoinSpec& spec, ProgramCost* cost = nullptr);

struct DivisionResult {
  Tube out;
  Tube dividend;  // loaded dividend, restored
  Tube divisor;   // loaded divisor, restored
};

// dividend(w + z columns) / divisor(z columns), composed from projection,
// product and difference; the quotient is the first w columns.
DivisionResult division_prog(TubeMachine& m, const std::vector<Row>& dividend,
                             const std::vector<Row>& divisor, const Schema& s_dividend,
                             const Schema& s_divisor, ProgramCost* cost = nullptr);

// Post-procedure cost statements evaluated to integers.
OpCounts predicted_union(std::size_t p, std::size_t sigma);
OpCounts predicted_intersection(std::size_t p, std::size_t sigma);
OpCounts predicted_difference_bound(std::size_t q, std::size_t sigma);
OpCounts predicted_selection(unsigned width);
OpCounts predicted_product(std::size_t q, std::size_t sigma_right);
OpCounts predicted_judge(std::size_t sigma_cols);

}  // namespace biodb::relalg
