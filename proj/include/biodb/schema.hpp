#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biodb/errors.hpp"

namespace biodb {

using Row = std::vector<std::uint64_t>;

struct Field {
  std::string name;
  unsigned width = 1;  // bits
};

struct Schema {
  std::string name;
  std::vector<Field> fields;
  std::size_t key_prefix = 0;  // first key_prefix fields form the key; 0 = keyless

  std::size_t field_count() const { return fields.size(); }
  unsigned width(std::size_t k) const { return fields.at(k - 1).width; }  // 1-based
  std::size_t total_bits() const;
  std::optional<std::size_t> field_index(std::string_view field_name) const;  // 1-based

  void validate() const;  // throws schema_error
};

bool row_fits(const Schema& s, const Row& r);
void require_fits(const Schema& s, const Row& r);  // throws schema_error

// MSB-first: bit 1 is the most significant of field k's width(k) bits.
unsigned row_bit(const Schema& s, const Row& r, std::size_t k, std::size_t j);

Schema concat_schemas(const Schema& a, const Schema& b);
Schema project_schema(const Schema& s, const std::vector<std::size_t>& cols);

// Schema text: one or more stanzas of
//   relation <name>; fields <name>:<width>, ...; key <d>;
// The key clause is optional and defaults to 0.
std::vector<Schema> parse_schema_text(std::string_view text);
std::string format_schema(const Schema& s);

// CSV: header row matching the schema's field names, comma separated,
// no quoting, unsigned decimal values.
std::vector<Row> parse_csv(const Schema& s, std::string_view text);
std::string format_csv(const Schema& s, const std::vector<Row>& rows);

}  // namespace biodb
