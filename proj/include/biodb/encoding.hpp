#pragma once

#include <map>
#include <string>
#include <vector>

#include "biodb/schema.hpp"
#include "biodb/tube_machine.hpp"

namespace biodb {

// One 15-base value sequence per (field, bit, value) triple.
struct SequenceLibrary {
  std::map<BitBlock, std::string> table;

  void set(const BitBlock& b, std::string seq) { table[b] = std::move(seq); }
  bool contains(const BitBlock& b) const { return table.count(b) != 0; }
  const std::string& get(const BitBlock& b) const;
  std::size_t size() const { return table.size(); }
};

// Library file: one line per entry, `k,j,value,SEQUENCE`.
SequenceLibrary parse_library_text(std::string_view text);
std::string format_library(const SequenceLibrary& lib);

// Appends the row's blocks onto t80, field-major, bit 1 (MSB) first.
// t80 must be empty beforehand; afterwards it holds exactly one strand.
void insert_record(TubeMachine& m, Tube t80, const Row& row, const Schema& s);

// One insert_record per row, each poured into t0 with one merge.
void load_relation(TubeMachine& m, Tube& t0, const std::vector<Row>& rows, const Schema& s);

// Inverse of insert_record. Blocks may arrive in any order but must cover
// every (field, bit) pair of the schema exactly once.
Row decode_strand(const Strand& strand, const Schema& s);

// read_all + decode, multiplicities expanded.
std::vector<Row> decode_tube(const TubeMachine& m, Tube t, const Schema& s);

// Order-strict check: blocks grouped by ascending field, bits 1..L_k in order.
bool is_full_encoding(const Strand& strand, const Schema& s);

// Loads rows one at a time, comparing each new row's key prefix against
// everything accepted so far before admitting it. On a duplicate key the
// load stops with duplicate_key_error and t0 still holds the rows accepted
// before the fault.
void primary_key_load(TubeMachine& m, Tube& t0, const std::vector<Row>& rows, const Schema& s);

// Concatenation of the 15-base value sequences of the strand's blocks.
std::string render_strand(const Strand& strand, const SequenceLibrary& lib);

}  // namespace biodb
