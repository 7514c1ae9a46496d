#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "biodb/encoding.hpp"
#include "biodb/schema.hpp"
#include "biodb/tube_machine.hpp"

using namespace biodb;

namespace {

Schema two_by_eight() {
  Schema s;
  s.name = "r";
  s.fields = {{"a", 8}, {"b", 8}};
  return s;
}

SequenceLibrary synthetic_library(const Schema& s) {
  SequenceLibrary lib;
  char base[] = {'A', 'C', 'T'};
  std::size_t i = 0;
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    for (std::size_t j = 1; j <= s.width(k); ++j)
      for (unsigned v = 0; v <= 1; ++v) {
        std::string seq(15, base[i % 3]);
        seq[i % 15] = base[(i + 1) % 3];
        lib.set(BitBlock(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j), v),
                seq);
        ++i;
      }
  return lib;
}

}  // namespace

TEST_CASE("inserting row (2,3) under a 2x8-bit schema yields the golden strand") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t80 = m.make_tube("t80");
  insert_record(m, t80, Row{2, 3}, s);
  const Strand strand = m.read(t80);

  REQUIRE(strand.size() == 16);
  // Field 1 holds 2: bits 00000010 most significant first.
  const unsigned f1[] = {0, 0, 0, 0, 0, 0, 1, 0};
  // Field 2 holds 3: bits 00000011.
  const unsigned f2[] = {0, 0, 0, 0, 0, 0, 1, 1};
  for (unsigned j = 1; j <= 8; ++j) {
    CHECK(strand.blocks()[j - 1] == BitBlock(1, j, f1[j - 1]));
    CHECK(strand.blocks()[8 + j - 1] == BitBlock(2, j, f2[j - 1]));
  }
  CHECK(is_full_encoding(strand, s));
  CHECK(decode_strand(strand, s) == Row{2, 3});

  const std::string dna = render_strand(strand, synthetic_library(s));
  CHECK(dna.size() == 240);
}

TEST_CASE("render concatenates per-block sequences in strand order") {
  const Schema s = two_by_eight();
  const SequenceLibrary lib = synthetic_library(s);
  Strand one({BitBlock(1, 1, 0)});
  CHECK(render_strand(one, lib) == lib.get(BitBlock(1, 1, 0)));

  Strand two({BitBlock(2, 8, 1), BitBlock(1, 4, 0)});
  CHECK(render_strand(two, lib) ==
        lib.get(BitBlock(2, 8, 1)) + lib.get(BitBlock(1, 4, 0)));
  CHECK(render_strand(Strand{}, lib).empty());

  SequenceLibrary partial;
  partial.set(BitBlock(1, 1, 0), lib.get(BitBlock(1, 1, 0)));
  CHECK_THROWS_AS(render_strand(two, partial), schema_error);
}

TEST_CASE("insert_record requires an empty assembly tube") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t80 = m.make_tube("t80");
  insert_record(m, t80, Row{1, 1}, s);
  CHECK_THROWS_AS(insert_record(m, t80, Row{2, 2}, s), machine_fault);
}

TEST_CASE("rows must fit their field widths") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t80 = m.make_tube("t80");
  CHECK_THROWS_AS(insert_record(m, t80, Row{256, 0}, s), schema_error);
  CHECK_THROWS_AS(insert_record(m, t80, Row{1}, s), schema_error);
  CHECK(row_fits(s, Row{255, 255}));
  CHECK(!row_fits(s, Row{255, 256}));
}

TEST_CASE("load_relation keeps one strand per row and decode_tube inverts it") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  const std::vector<Row> rows = {{5, 9}, {1, 2}, {200, 17}};
  load_relation(m, t0, rows, s);
  CHECK(m.strand_count(t0) == 3);

  std::vector<Row> decoded = decode_tube(m, t0, s);
  std::vector<Row> expect = rows;
  std::sort(expect.begin(), expect.end());
  std::sort(decoded.begin(), decoded.end());
  CHECK(decoded == expect);
}

TEST_CASE("decode_tube expands multiplicities") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  load_relation(m, t0, {{7, 7}, {7, 7}}, s);
  CHECK(decode_tube(m, t0, s) == std::vector<Row>{{7, 7}, {7, 7}});
}

TEST_CASE("decode_strand rejects malformed strands") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t80 = m.make_tube("t80");
  insert_record(m, t80, Row{2, 3}, s);
  const Strand good = m.read(t80);

  Strand foreign = good;
  foreign.push_tail(BitBlock(3, 1, 0));
  CHECK_THROWS_AS(decode_strand(foreign, s), schema_error);

  Strand bad_bit = good;
  bad_bit.push_tail(BitBlock(1, 9, 0));
  CHECK_THROWS_AS(decode_strand(bad_bit, s), schema_error);

  std::vector<BitBlock> dup(good.blocks());
  dup[8] = BitBlock(1, 1, 0);  // field 1 bit 1 twice, field 2 bit 1 missing
  CHECK_THROWS_AS(decode_strand(Strand(dup), s), schema_error);

  std::vector<BitBlock> shuffled(good.blocks());
  std::swap(shuffled.front(), shuffled.back());
  CHECK(decode_strand(Strand(shuffled), s) == Row{2, 3});
  CHECK(!is_full_encoding(Strand(shuffled), s));
}

TEST_CASE("schema text parses and formats back") {
  const char* text =
      "relation employee; fields num:8, age:8; key 1;\n"
      "relation toy; fields x:3, y:5;\n";
  auto schemas = parse_schema_text(text);
  REQUIRE(schemas.size() == 2);
  CHECK(schemas[0].name == "employee");
  CHECK(schemas[0].key_prefix == 1);
  CHECK(schemas[0].width(1) == 8);
  CHECK(schemas[1].key_prefix == 0);
  CHECK(schemas[1].width(2) == 5);

  auto again = parse_schema_text(format_schema(schemas[0]) + "\n" + format_schema(schemas[1]));
  REQUIRE(again.size() == 2);
  CHECK(again[0].name == schemas[0].name);
  CHECK(again[0].fields.size() == schemas[0].fields.size());
  CHECK(again[1].width(1) == 3);
}

TEST_CASE("schema validation rejects bad declarations") {
  CHECK_THROWS_AS(parse_schema_text("relation r; fields a:0;"), schema_error);
  CHECK_THROWS_AS(parse_schema_text("relation r; fields a:64;"), schema_error);
  CHECK_THROWS_AS(parse_schema_text("relation r; fields a:4; key 2;"), schema_error);
  CHECK_THROWS_AS(parse_schema_text("relation r;"), schema_error);
  CHECK_THROWS_AS(parse_schema_text("fields a:4;"), schema_error);
}

TEST_CASE("csv loads and round-trips") {
  const Schema s = two_by_eight();
  const std::vector<Row> rows = {{1, 2}, {3, 4}};
  const std::string text = format_csv(s, rows);
  CHECK(text == "a,b\n1,2\n3,4\n");
  CHECK(parse_csv(s, text) == rows);
  CHECK(parse_csv(s, "a,b\r\n1,2\r\n\r\n3,4\r\n") == rows);
}

TEST_CASE("csv rejects bad headers and oversized values") {
  const Schema s = two_by_eight();
  CHECK_THROWS_AS(parse_csv(s, "a,c\n1,2\n"), schema_error);
  CHECK_THROWS_AS(parse_csv(s, "a\n1\n"), schema_error);
  CHECK_THROWS_AS(parse_csv(s, "a,b\n1\n"), schema_error);
  CHECK_THROWS_AS(parse_csv(s, "a,b\n1,256\n"), schema_error);
  CHECK_THROWS_AS(parse_csv(s, "a,b\n1,x\n"), schema_error);
}

TEST_CASE("library text round-trips") {
  const Schema s = two_by_eight();
  const SequenceLibrary lib = synthetic_library(s);
  SequenceLibrary again = parse_library_text(format_library(lib));
  CHECK(again.table == lib.table);
  CHECK_THROWS_AS(again.get(BitBlock(9, 1, 0)), schema_error);
}

TEST_CASE("primary key load accepts unique keys and preserves order independence") {
  Schema s = two_by_eight();
  s.key_prefix = 1;
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  primary_key_load(m, t0, {{1, 10}, {2, 10}, {3, 10}}, s);
  std::vector<Row> decoded = decode_tube(m, t0, s);
  std::sort(decoded.begin(), decoded.end());
  CHECK(decoded == std::vector<Row>{{1, 10}, {2, 10}, {3, 10}});
}

TEST_CASE("primary key load rejects a duplicated key and keeps the accepted prefix") {
  Schema s = two_by_eight();
  s.key_prefix = 1;
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  CHECK_THROWS_WITH_AS(primary_key_load(m, t0, {{1, 10}, {2, 11}, {1, 12}}, s),
                       doctest::Contains("duplicate key in row 3"), duplicate_key_error);
  std::vector<Row> decoded = decode_tube(m, t0, s);
  std::sort(decoded.begin(), decoded.end());
  CHECK(decoded == std::vector<Row>{{1, 10}, {2, 11}});
}

TEST_CASE("rows differing only outside the key still collide") {
  Schema s = two_by_eight();
  s.key_prefix = 1;
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  CHECK_THROWS_AS(primary_key_load(m, t0, {{5, 1}, {5, 2}}, s), duplicate_key_error);
}

TEST_CASE("two-field keys compare the whole prefix") {
  Schema s = two_by_eight();
  s.fields.push_back({"c", 4});
  s.key_prefix = 2;
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  primary_key_load(m, t0, {{1, 1, 5}, {1, 2, 5}, {2, 1, 5}}, s);
  CHECK(m.strand_count(t0) == 3);
  CHECK_THROWS_AS(primary_key_load(m, t0, {{1, 2, 9}}, s), duplicate_key_error);
}

TEST_CASE("primary key load demands a key declaration") {
  const Schema s = two_by_eight();
  TubeMachine m;
  Tube t0 = m.make_tube("r");
  CHECK_THROWS_AS(primary_key_load(m, t0, {{1, 1}}, s), schema_error);
}
