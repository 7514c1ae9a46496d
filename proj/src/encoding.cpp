#include "biodb/encoding.hpp"

#include <charconv>
#include <sstream>

namespace biodb {

const std::string& SequenceLibrary::get(const BitBlock& b) const {
  auto it = table.find(b);
  if (it == table.end())
    throw schema_error("sequence library has no entry for block " + to_string(b));
  return it->second;
}

SequenceLibrary parse_library_text(std::string_view text) {
  SequenceLibrary lib;
  std::size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    unsigned parts[3] = {0, 0, 0};
    std::size_t cell = 0, pos = 0;
    for (; cell < 3; ++cell) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string_view::npos)
        throw io_error("library line " + std::to_string(line_no) + ": expected k,j,value,SEQ");
      auto sub = line.substr(pos, comma - pos);
      auto [p, ec] = std::from_chars(sub.data(), sub.data() + sub.size(), parts[cell]);
      if (ec != std::errc() || p != sub.data() + sub.size())
        throw io_error("library line " + std::to_string(line_no) + ": bad number '" +
                       std::string(sub) + "'");
      pos = comma + 1;
    }
    lib.set(BitBlock(parts[0], parts[1], parts[2]), std::string(line.substr(pos)));
  }
  return lib;
}

std::string format_library(const SequenceLibrary& lib) {
  std::ostringstream os;
  for (const auto& [b, seq] : lib.table)
    os << b.field << ',' << b.bit << ',' << unsigned(b.value) << ',' << seq << '\n';
  return os.str();
}

void insert_record(TubeMachine& m, Tube t80, const Row& row, const Schema& s) {
  require_fits(s, row);
  if (!m.is_empty(t80))
    throw machine_fault("insert_record: target tube '" + m.name(t80) + "' is not empty");
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    for (std::size_t j = 1; j <= s.width(k); ++j)
      m.append(t80, BitBlock(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j),
                             row_bit(s, row, k, j)));
}

void load_relation(TubeMachine& m, Tube& t0, const std::vector<Row>& rows, const Schema& s) {
  Tube t80 = m.make_tube(m.name(t0) + ".in");
  for (const Row& row : rows) {
    insert_record(m, t80, row, s);
    Tube merged = m.merge({t0, t80}, m.name(t0));
    t0 = merged;  // t80 was emptied by the merge and is reused
  }
}

Row decode_strand(const Strand& strand, const Schema& s) {
  if (strand.size() != s.total_bits())
    throw schema_error("decode: strand has " + std::to_string(strand.size()) +
                       " blocks, schema '" + s.name + "' expects " +
                       std::to_string(s.total_bits()));
  Row row(s.field_count(), 0);
  std::vector<std::vector<bool>> seen(s.field_count());
  for (std::size_t k = 0; k < s.field_count(); ++k) seen[k].assign(s.fields[k].width, false);
  for (const auto& b : strand.blocks()) {
    if (b.field < 1 || b.field > s.field_count())
      throw schema_error("decode: foreign field index " + std::to_string(b.field));
    const unsigned w = s.fields[b.field - 1].width;
    if (b.bit < 1 || b.bit > w)
      throw schema_error("decode: bit index " + std::to_string(b.bit) +
                         " out of range for field " + std::to_string(b.field));
    if (seen[b.field - 1][b.bit - 1])
      throw schema_error("decode: duplicated block (" + std::to_string(b.field) + "," +
                         std::to_string(b.bit) + ")");
    seen[b.field - 1][b.bit - 1] = true;
    if (b.value) row[b.field - 1] |= std::uint64_t(1) << (w - b.bit);
  }
  // block count matched and no duplicates, so coverage is complete
  return row;
}

std::vector<Row> decode_tube(const TubeMachine& m, Tube t, const Schema& s) {
  std::vector<Row> rows;
  for (const auto& [strand, n] : m.read_all(t)) {
    Row r = decode_strand(strand, s);
    for (std::uint64_t i = 0; i < n; ++i) rows.push_back(r);
  }
  return rows;
}

bool is_full_encoding(const Strand& strand, const Schema& s) {
  if (strand.size() != s.total_bits()) return false;
  std::size_t pos = 0;
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    for (std::size_t j = 1; j <= s.width(k); ++j) {
      const BitBlock& b = strand.blocks()[pos++];
      if (b.field != k || b.bit != j) return false;
    }
  return true;
}

void primary_key_load(TubeMachine& m, Tube& t0, const std::vector<Row>& rows, const Schema& s) {
  if (s.key_prefix < 1)
    throw schema_error("primary_key_load: schema '" + s.name + "' declares no key");
  std::size_t scratch = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    require_fits(s, row);
    if (!m.detect(t0)) {
      Tube t80 = m.make_tube(m.name(t0) + ".in" + std::to_string(++scratch));
      insert_record(m, t80, row, s);
      t0 = m.merge({t0, t80}, m.name(t0));
      continue;
    }
    // Build the candidate, then peel t0 bit by bit over the key prefix:
    // survivors match the candidate's key so far, the rest pile up aside.
    Tube cand = m.make_tube("cand" + std::to_string(++scratch));
    insert_record(m, cand, row, s);
    Tube aside = m.make_tube("keyrest" + std::to_string(scratch));
    for (std::size_t k = 1; k <= s.key_prefix; ++k)
      for (std::size_t j = 1; j <= s.width(k); ++j) {
        BitBlock probe(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j),
                       row_bit(s, row, k, j));
        auto [cand_on, cand_off] = m.extract(cand, probe);
        auto [t0_on, t0_off] = m.extract(t0, probe);
        Tube match, differ;
        if (m.detect(cand_on)) {  // always: the candidate carries its own bits
          match = t0_on;
          differ = t0_off;
          cand = m.merge({m.make_tube("cand"), cand_on}, "cand");
        } else {
          match = t0_off;
          differ = t0_on;
          cand = m.merge({m.make_tube("cand"), cand_off}, "cand");
        }
        t0 = m.merge({m.make_tube("accepted"), match}, "accepted");
        aside = m.merge({aside, differ});
      }
    if (!m.detect(t0)) {
      Tube t80 = m.make_tube("fresh" + std::to_string(scratch));
      insert_record(m, t80, row, s);
      t0 = m.merge({t0, t80, aside}, "accepted");
    } else {
      // Duplicate key: reassemble what was accepted so far, then stop.
      t0 = m.merge({t0, aside}, "accepted");
      std::ostringstream os;
      os << "duplicate key in row " << (i + 1) << " of '" << s.name << "' (";
      for (std::size_t k = 0; k < s.key_prefix; ++k) {
        if (k) os << ',';
        os << row[k];
      }
      os << ")";
      throw duplicate_key_error(os.str());
    }
  }
}

std::string render_strand(const Strand& strand, const SequenceLibrary& lib) {
  std::string out;
  out.reserve(strand.size() * 15);
  for (const auto& b : strand.blocks()) out += lib.get(b);
  return out;
}

}  // namespace biodb
