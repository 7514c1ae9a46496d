#pragma once

#include <stdexcept>

namespace biodb {

// Raised when a tube instruction is used against the machine's rules
// (consumed handle, extract on a discarded tube, read on an empty one,
// merge of zero sources). The message names the failing instruction index.
struct machine_fault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schema/value violations: width overflow, malformed strand, bad field.
struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query text rejected; message carries line:column and expected tokens.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sequence generation or thermodynamic table failure.
struct design_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keyed load rejected a row list whose key projection has duplicates.
struct duplicate_key_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace biodb
