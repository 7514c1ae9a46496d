#include "biodb/schema.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace biodb {

std::size_t Schema::total_bits() const {
  std::size_t total = 0;
  for (const auto& f : fields) total += f.width;
  return total;
}

std::optional<std::size_t> Schema::field_index(std::string_view field_name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == field_name) return i + 1;
  return std::nullopt;
}

void Schema::validate() const {
  if (fields.empty()) throw schema_error("schema '" + name + "': needs at least one field");
  for (const auto& f : fields) {
    if (f.width < 1 || f.width > 63)
      throw schema_error("schema '" + name + "': field '" + f.name +
                         "' width out of range [1,63]");
    if (f.name.empty()) throw schema_error("schema '" + name + "': unnamed field");
  }
  if (key_prefix > fields.size())
    throw schema_error("schema '" + name + "': key prefix exceeds field count");
}

bool row_fits(const Schema& s, const Row& r) {
  if (r.size() != s.fields.size()) return false;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] >= (std::uint64_t(1) << s.fields[i].width)) return false;
  return true;
}

void require_fits(const Schema& s, const Row& r) {
  if (r.size() != s.fields.size())
    throw schema_error("row has " + std::to_string(r.size()) + " values, schema '" + s.name +
                       "' has " + std::to_string(s.fields.size()) + " fields");
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] >= (std::uint64_t(1) << s.fields[i].width))
      throw schema_error("value " + std::to_string(r[i]) + " overflows field '" +
                         s.fields[i].name + "' of width " +
                         std::to_string(s.fields[i].width));
}

unsigned row_bit(const Schema& s, const Row& r, std::size_t k, std::size_t j) {
  const unsigned w = s.width(k);
  return static_cast<unsigned>((r.at(k - 1) >> (w - j)) & 1u);
}

Schema concat_schemas(const Schema& a, const Schema& b) {
  Schema out;
  out.name = a.name + "_x_" + b.name;
  out.fields = a.fields;
  out.fields.insert(out.fields.end(), b.fields.begin(), b.fields.end());
  out.key_prefix = 0;
  return out;
}

Schema project_schema(const Schema& s, const std::vector<std::size_t>& cols) {
  Schema out;
  out.name = s.name + "_proj";
  for (std::size_t k : cols) {
    if (k < 1 || k > s.fields.size())
      throw schema_error("projection column " + std::to_string(k) + " out of range for '" +
                         s.name + "'");
    out.fields.push_back(s.fields[k - 1]);
  }
  out.key_prefix = 0;
  out.validate();
  return out;
}

namespace {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string word() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
  std::uint64_t number(const char* what) {
    skip_ws();
    std::uint64_t value = 0;
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
    if (ec != std::errc() || p == text.data() + pos)
      throw schema_error(std::string("expected unsigned number for ") + what);
    pos = static_cast<std::size_t>(p - text.data());
    return value;
  }
};

}  // namespace

std::vector<Schema> parse_schema_text(std::string_view text) {
  std::vector<Schema> out;
  Cursor c{text};
  while (!c.done()) {
    if (c.word() != "relation") throw schema_error("schema text: expected 'relation'");
    Schema s;
    s.name = c.word();
    if (s.name.empty()) throw schema_error("schema text: missing relation name");
    if (!c.eat(';')) throw schema_error("schema '" + s.name + "': expected ';' after name");
    if (c.word() != "fields") throw schema_error("schema '" + s.name + "': expected 'fields'");
    do {
      Field f;
      f.name = c.word();
      if (f.name.empty()) throw schema_error("schema '" + s.name + "': missing field name");
      if (!c.eat(':')) throw schema_error("schema '" + s.name + "': expected ':' after field");
      f.width = static_cast<unsigned>(c.number("field width"));
      s.fields.push_back(f);
    } while (c.eat(','));
    if (!c.eat(';')) throw schema_error("schema '" + s.name + "': expected ';' after fields");
    c.skip_ws();
    std::size_t mark = c.pos;
    std::string kw = c.word();
    if (kw == "key") {
      s.key_prefix = static_cast<std::size_t>(c.number("key prefix"));
      c.eat(';');
    } else {
      c.pos = mark;  // next stanza (or end)
    }
    s.validate();
    out.push_back(std::move(s));
  }
  if (out.empty()) throw schema_error("schema text: no relations declared");
  return out;
}

std::string format_schema(const Schema& s) {
  std::ostringstream os;
  os << "relation " << s.name << "; fields ";
  for (std::size_t i = 0; i < s.fields.size(); ++i) {
    if (i) os << ", ";
    os << s.fields[i].name << ':' << s.fields[i].width;
  }
  os << "; key " << s.key_prefix << ";";
  return os.str();
}

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string cell(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    // trim surrounding spaces
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front())))
      cell.erase(cell.begin());
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.pop_back();
    cells.push_back(std::move(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::vector<Row> parse_csv(const Schema& s, std::string_view text) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool saw_header = false;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto cells = split_line(line);
    if (!saw_header) {
      if (cells.size() != s.fields.size())
        throw schema_error("csv header for '" + s.name + "' has " +
                           std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(s.fields.size()));
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] != s.fields[i].name)
          throw schema_error("csv header column '" + cells[i] + "' does not match field '" +
                             s.fields[i].name + "'");
      saw_header = true;
      continue;
    }
    if (cells.size() != s.fields.size())
      throw schema_error("csv line " + std::to_string(line_no) + ": expected " +
                         std::to_string(s.fields.size()) + " values");
    Row r;
    for (const auto& cell : cells) {
      std::uint64_t value = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || p != cell.data() + cell.size())
        throw schema_error("csv line " + std::to_string(line_no) + ": bad unsigned value '" +
                           cell + "'");
      r.push_back(value);
    }
    require_fits(s, r);
    rows.push_back(std::move(r));
  }
  if (!saw_header) throw schema_error("csv for '" + s.name + "': missing header row");
  return rows;
}

std::string format_csv(const Schema& s, const std::vector<Row>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.fields.size(); ++i) {
    if (i) os << ',';
    os << s.fields[i].name;
  }
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      os << r[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace biodb
