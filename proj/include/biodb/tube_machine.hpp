#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "biodb/block.hpp"
#include "biodb/errors.hpp"

namespace biodb {

enum class Opcode { extract, merge, detect, discard, amplify, append, append_head, read };

const char* opcode_name(Opcode op);

// Per-opcode instruction counters. A merge of arity z counts as z - 1
// binary merges; every other instruction counts once.
struct OpCounts {
  std::uint64_t extract = 0;
  std::uint64_t merge = 0;
  std::uint64_t detect = 0;
  std::uint64_t discard = 0;
  std::uint64_t amplify = 0;
  std::uint64_t append = 0;
  std::uint64_t append_head = 0;
  std::uint64_t read = 0;

  std::uint64_t& at(Opcode op);
  std::uint64_t at(Opcode op) const;
  std::uint64_t total() const;

  OpCounts& operator+=(const OpCounts& o);
  OpCounts& operator-=(const OpCounts& o);
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  friend OpCounts operator-(OpCounts a, const OpCounts& b) { return a -= b; }
  bool operator==(const OpCounts&) const = default;
};

// True when every counter of a is <= the matching counter of b.
bool all_leq(const OpCounts& a, const OpCounts& b);

struct TraceEntry {
  std::uint64_t seq = 0;  // 1-based instruction index
  Opcode op = Opcode::detect;
  std::vector<std::string> tubes;
  std::optional<BitBlock> block;

  // <seq>\t<opcode>\t<tube-names>\t<probe-or-block-or-empty>
  std::string format() const;
};

struct CostReport {
  OpCounts counts;
  std::vector<TraceEntry> trace;
};

// Handle to a tube owned by a TubeMachine. Extraction consumes its input
// tube: the old handle becomes dead and later use is a machine fault.
class Tube {
 public:
  Tube() = default;
  bool valid() const { return id_ != npos; }
  bool operator==(const Tube&) const = default;

 private:
  friend class TubeMachine;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  explicit Tube(std::size_t id) : id_(id) {}
  std::size_t id_ = npos;
};

using StrandMultiset = std::map<Strand, std::uint64_t>;

// Deterministic multiset-of-strands machine with eight counted
// instructions. Contents, counters and trace evolve identically for
// identical instruction sequences.
class TubeMachine {
 public:
  // Tube creation is free bookkeeping, not a counted instruction.
  Tube make_tube(std::string name);

  // Splits src by probe containment; src is consumed.
  std::pair<Tube, Tube> extract(Tube src, const BitBlock& probe,
                                std::string plus_name = "", std::string minus_name = "");

  // Pours all sources into a fresh tube; sources are left empty.
  Tube merge(const std::vector<Tube>& sources, std::string name = "");
  Tube merge2(Tube a, Tube b, std::string name = "") { return merge({a, b}, std::move(name)); }

  bool detect(Tube t);
  void discard(Tube t);

  // Two copies of src; src is left empty.
  std::pair<Tube, Tube> amplify(Tube src, std::string first_name = "",
                                std::string second_name = "");

  // Extends every strand; an empty (or discarded) tube gains one fresh
  // single-block strand, which is what seeds record assembly.
  void append(Tube t, const BitBlock& b);
  void append_head(Tube t, const BitBlock& b);

  // Canonically least strand; faults on an empty tube.
  Strand read(Tube t);

  // Uncounted plumbing: all distinct strands in canonical order with
  // multiplicities. Used for decoding results.
  std::vector<std::pair<Strand, std::uint64_t>> read_all(Tube t) const;

  // Uncounted inspection.
  std::uint64_t strand_count(Tube t) const;   // total multiplicity
  std::uint64_t block_count(Tube t) const;    // blocks across all strands
  bool is_empty(Tube t) const;
  const std::string& name(Tube t) const;

  const OpCounts& counts() const { return counts_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  CostReport report() const { return CostReport{counts_, trace_}; }
  std::uint64_t next_seq() const { return trace_.size() + 1; }

  void dump_trace(std::ostream& os) const;
  void dump_counters(std::ostream& os) const;  // flat key -> integer JSON

 private:
  enum class State { live, consumed, discarded };
  struct Rec {
    std::string name;
    State state = State::live;
    StrandMultiset contents;
  };

  Rec& rec(Tube t, Opcode op);
  const Rec& rec(Tube t) const;
  Rec& writable(Tube t, Opcode op);  // live or discarded; revives on use
  [[noreturn]] void fault(Opcode op, const std::string& what) const;
  void log(Opcode op, std::vector<std::string> tubes,
           std::optional<BitBlock> block = std::nullopt);

  std::vector<Rec> tubes_;
  OpCounts counts_;
  std::vector<TraceEntry> trace_;
};

}  // namespace biodb
