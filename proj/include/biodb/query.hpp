#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "biodb/relalg.hpp"
#include "biodb/schema.hpp"
#include "biodb/tube_machine.hpp"

namespace biodb::query {

enum class NodeKind {
  relation,
  union_op,
  intersect_op,
  diff_op,
  product_op,
  join_op,
  divide_op,
  select_op,
  project_op,
};

// Operator keyword, or the empty string for relation references.
const char* node_keyword(NodeKind k);

struct Expr {
  NodeKind kind = NodeKind::relation;
  std::size_t line = 1, column = 1;

  std::string relation;                     // kind == relation
  std::vector<std::unique_ptr<Expr>> args;  // operand expressions

  std::string field;  // select predicate / join left-hand field
  relalg::Comparator cmp = relalg::Comparator::eq;
  bool rhs_is_field = false;  // join right-hand side form
  std::string rhs_field;
  std::uint64_t constant = 0;        // select / join constant
  std::vector<std::string> columns;  // project column list
};

// Grammar:
//   query   := expr
//   expr    := name | op '(' args ')'
//   op      := union | intersect | diff | product | join | divide
//            | select | project
//   args    := expr ',' expr                          (binary set ops)
//            | expr ',' name cmp uint                 (select)
//            | expr ',' expr ',' name cmp rhs         (join)
//            | expr ',' '[' name {',' name} ']'       (project)
//   rhs     := name | uint
//   cmp     := '=' | '!=' | '<' | '<=' | '>' | '>='
// Operator words are contextual: an identifier is an operator only when
// followed by '('. Errors are parse_error carrying line and column.
std::unique_ptr<Expr> parse_query(std::string_view text);

// Canonical rendering; parsing it back yields the same tree.
std::string print_query(const Expr& e);

struct CatalogEntry {
  Schema schema;
  std::vector<Row> rows;
  Tube tube;  // loaded base tube, kept restored across queries
};

class Catalog {
 public:
  void add(std::string name, Schema schema, std::vector<Row> rows, Tube tube);
  CatalogEntry* find(std::string_view name);
  const CatalogEntry* find(std::string_view name) const;
  const std::map<std::string, CatalogEntry, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, CatalogEntry, std::less<>> entries_;
};

// Output schema of the tree, after resolving relation and field names and
// checking operand layouts and constant ranges. Field names in product
// and join results resolve first match wins; join predicates search the
// left operand first for the left field and the right operand first for
// the right. Throws schema_error prefixed with the node's position.
Schema output_schema(const Expr& e, const Catalog& cat);

// Name resolution used by the evaluator, exposed so reference engines can
// interpret the same tree identically. Both throw schema_error.
relalg::JoinSpec resolve_join_spec(const Expr& e, const Schema& left, const Schema& right);
std::vector<std::size_t> resolve_project_columns(const Expr& e, const Schema& input);

// Machine work attributed to one operator node, children excluded.
// cost.overhead additionally absorbs glue the evaluator itself issued
// (defensive copies, re-loads), so summing total() over all reports gives
// exactly the machine counter delta of the whole run.
struct NodeReport {
  std::string label;   // operator keyword or relation name
  std::string detail;  // predicate or column list, empty otherwise
  std::size_t p = 0, q = 0;
  std::size_t sigma = 0;  // bit count the cost statement is quoted over
  relalg::ProgramCost cost;
  OpCounts predicted;  // meaningful only when has_predicted
  bool has_predicted = false;
  bool predicted_bound = false;  // prediction is an upper bound (difference)
  std::size_t out_rows = 0;
  std::uint64_t seq_begin = 0, seq_end = 0;  // this node's own trace slice
};

struct RunResult {
  Schema schema;
  std::vector<Row> rows;
  Tube tube;                        // holds exactly rows, one strand each
  std::vector<NodeReport> reports;  // postorder
};

// Evaluates the tree bottom-up on the machine. Base relations are used
// through their catalog tubes and every operator restores its inputs, so
// one relation may appear on both sides of an operator. Machine faults
// are rethrown prefixed with the operator path they surfaced under.
RunResult run(TubeMachine& m, const Expr& e, Catalog& cat);

}  // namespace biodb::query
