#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace biodb {

// One (field, bit, value) unit of an encoded record. Indices are 1-based
// and bit 1 is the most significant bit of its field. Record position is
// deliberately not part of the identity: probing for (k, j, v) hits every
// record whose k-th field has bit value v at position j.
struct BitBlock {
  std::uint32_t field = 1;
  std::uint32_t bit = 1;
  std::uint8_t value = 0;

  BitBlock() = default;
  BitBlock(std::uint32_t field_index, std::uint32_t bit_index, unsigned bit_value)
      : field(field_index), bit(bit_index), value(static_cast<std::uint8_t>(bit_value)) {
    if (field_index < 1 || bit_index < 1)
      throw std::invalid_argument("BitBlock: field and bit indices are 1-based");
    if (bit_value > 1)
      throw std::invalid_argument("BitBlock: bit value must be 0 or 1");
  }

  auto operator<=>(const BitBlock&) const = default;
};

std::string to_string(const BitBlock& b);

// Ordered block list; a full record strand carries one block per schema bit,
// fields ascending. Strands compare lexicographically over their blocks,
// which is the canonical order used by read and read_all.
class Strand {
 public:
  Strand() = default;
  explicit Strand(std::vector<BitBlock> blocks) : blocks_(std::move(blocks)) {}

  void push_tail(const BitBlock& b) { blocks_.push_back(b); }
  void push_head(const BitBlock& b) { blocks_.insert(blocks_.begin(), b); }

  bool contains(const BitBlock& b) const {
    for (const auto& x : blocks_)
      if (x == b) return true;
    return false;
  }

  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const std::vector<BitBlock>& blocks() const { return blocks_; }

  bool operator==(const Strand& o) const { return blocks_ == o.blocks_; }
  std::strong_ordering operator<=>(const Strand& o) const {
    return std::lexicographical_compare_three_way(
        blocks_.begin(), blocks_.end(), o.blocks_.begin(), o.blocks_.end());
  }

 private:
  std::vector<BitBlock> blocks_;
};

std::string to_string(const Strand& s);

}  // namespace biodb
