#include "biodb/tube_machine.hpp"

#include <limits>
#include <ostream>
#include <sstream>

namespace biodb {

std::string to_string(const BitBlock& b) {
  std::ostringstream os;
  os << '(' << b.field << ',' << b.bit << ',' << unsigned(b.value) << ')';
  return os.str();
}

std::string to_string(const Strand& s) {
  std::string out;
  for (const auto& b : s.blocks()) out += to_string(b);
  return out;
}

const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::extract: return "extract";
    case Opcode::merge: return "merge";
    case Opcode::detect: return "detect";
    case Opcode::discard: return "discard";
    case Opcode::amplify: return "amplify";
    case Opcode::append: return "append";
    case Opcode::append_head: return "append_head";
    case Opcode::read: return "read";
  }
  return "?";
}

std::uint64_t& OpCounts::at(Opcode op) {
  switch (op) {
    case Opcode::extract: return extract;
    case Opcode::merge: return merge;
    case Opcode::detect: return detect;
    case Opcode::discard: return discard;
    case Opcode::amplify: return amplify;
    case Opcode::append: return append;
    case Opcode::append_head: return append_head;
    case Opcode::read: return read;
  }
  throw std::logic_error("OpCounts::at: bad opcode");
}

std::uint64_t OpCounts::at(Opcode op) const {
  return const_cast<OpCounts*>(this)->at(op);
}

std::uint64_t OpCounts::total() const {
  return extract + merge + detect + discard + amplify + append + append_head + read;
}

OpCounts& OpCounts::operator+=(const OpCounts& o) {
  extract += o.extract;
  merge += o.merge;
  detect += o.detect;
  discard += o.discard;
  amplify += o.amplify;
  append += o.append;
  append_head += o.append_head;
  read += o.read;
  return *this;
}

OpCounts& OpCounts::operator-=(const OpCounts& o) {
  extract -= o.extract;
  merge -= o.merge;
  detect -= o.detect;
  discard -= o.discard;
  amplify -= o.amplify;
  append -= o.append;
  append_head -= o.append_head;
  read -= o.read;
  return *this;
}

bool all_leq(const OpCounts& a, const OpCounts& b) {
  return a.extract <= b.extract && a.merge <= b.merge && a.detect <= b.detect &&
         a.discard <= b.discard && a.amplify <= b.amplify && a.append <= b.append &&
         a.append_head <= b.append_head && a.read <= b.read;
}

std::string TraceEntry::format() const {
  std::string line = std::to_string(seq);
  line += '\t';
  line += opcode_name(op);
  line += '\t';
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    if (i) line += ',';
    line += tubes[i];
  }
  line += '\t';
  if (block) line += to_string(*block);
  return line;
}

Tube TubeMachine::make_tube(std::string name) {
  tubes_.push_back(Rec{std::move(name), State::live, {}});
  return Tube(tubes_.size() - 1);
}

void TubeMachine::fault(Opcode op, const std::string& what) const {
  throw machine_fault("instruction " + std::to_string(next_seq()) + ": " +
                      opcode_name(op) + " " + what);
}

TubeMachine::Rec& TubeMachine::rec(Tube t, Opcode op) {
  if (!t.valid() || t.id_ >= tubes_.size()) fault(op, "on an unknown tube handle");
  Rec& r = tubes_[t.id_];
  if (r.state == State::consumed) fault(op, "on consumed tube '" + r.name + "'");
  return r;
}

const TubeMachine::Rec& TubeMachine::rec(Tube t) const {
  if (!t.valid() || t.id_ >= tubes_.size())
    throw machine_fault("inspection of an unknown tube handle");
  const Rec& r = tubes_[t.id_];
  if (r.state == State::consumed)
    throw machine_fault("inspection of consumed tube '" + r.name + "'");
  return r;
}

TubeMachine::Rec& TubeMachine::writable(Tube t, Opcode op) {
  Rec& r = rec(t, op);
  return r;
}

void TubeMachine::log(Opcode op, std::vector<std::string> tubes, std::optional<BitBlock> block) {
  counts_.at(op) += 1;
  trace_.push_back(TraceEntry{trace_.size() + 1, op, std::move(tubes), std::move(block)});
}

std::pair<Tube, Tube> TubeMachine::extract(Tube src, const BitBlock& probe,
                                           std::string plus_name, std::string minus_name) {
  Rec& r = rec(src, Opcode::extract);
  if (r.state == State::discarded) fault(Opcode::extract, "on discarded tube '" + r.name + "'");
  if (plus_name.empty()) plus_name = r.name + "+";
  if (minus_name.empty()) minus_name = r.name + "-";

  StrandMultiset plus, minus;
  for (auto& [strand, n] : r.contents) {
    (strand.contains(probe) ? plus : minus).emplace(strand, n);
  }
  r.contents.clear();
  r.state = State::consumed;

  Tube tp = make_tube(std::move(plus_name));
  Tube tm = make_tube(std::move(minus_name));
  tubes_[tp.id_].contents = std::move(plus);
  tubes_[tm.id_].contents = std::move(minus);
  log(Opcode::extract, {tubes_[src.id_].name, tubes_[tp.id_].name, tubes_[tm.id_].name}, probe);
  return {tp, tm};
}

Tube TubeMachine::merge(const std::vector<Tube>& sources, std::string name) {
  if (sources.empty()) fault(Opcode::merge, "of zero sources");
  for (Tube s : sources) {
    Rec& r = rec(s, Opcode::merge);
    (void)r;
  }
  if (name.empty()) name = tubes_[sources[0].id_].name;

  Tube out = make_tube(std::move(name));
  Rec& ro = tubes_[out.id_];
  {
    Rec& r0 = tubes_[sources[0].id_];
    ro.contents = std::move(r0.contents);
    r0.contents.clear();
    r0.state = State::live;
  }
  for (std::size_t i = 1; i < sources.size(); ++i) {
    Rec& ri = tubes_[sources[i].id_];
    for (auto& [strand, n] : ri.contents) {
      std::uint64_t& slot = ro.contents[strand];
      if (n > std::numeric_limits<std::uint64_t>::max() - slot)
        fault(Opcode::merge, "overflows strand multiplicity");
      slot += n;
    }
    ri.contents.clear();
    ri.state = State::live;
    log(Opcode::merge, {tubes_[sources[i - 1].id_].name, ri.name, ro.name});
  }
  return out;
}

bool TubeMachine::detect(Tube t) {
  Rec& r = rec(t, Opcode::detect);
  log(Opcode::detect, {r.name});
  return !r.contents.empty();
}

void TubeMachine::discard(Tube t) {
  Rec& r = rec(t, Opcode::discard);
  r.contents.clear();
  r.state = State::discarded;
  log(Opcode::discard, {r.name});
}

std::pair<Tube, Tube> TubeMachine::amplify(Tube src, std::string first_name,
                                           std::string second_name) {
  Rec& r = rec(src, Opcode::amplify);
  if (r.state == State::discarded) fault(Opcode::amplify, "on discarded tube '" + r.name + "'");
  if (first_name.empty()) first_name = r.name + ".1";
  if (second_name.empty()) second_name = r.name + ".2";

  StrandMultiset copy = r.contents;
  Tube a = make_tube(std::move(first_name));
  Tube b = make_tube(std::move(second_name));
  tubes_[a.id_].contents = copy;
  tubes_[b.id_].contents = std::move(copy);
  Rec& rs = tubes_[src.id_];
  rs.contents.clear();
  log(Opcode::amplify, {rs.name, tubes_[a.id_].name, tubes_[b.id_].name});
  return {a, b};
}

void TubeMachine::append(Tube t, const BitBlock& b) {
  Rec& r = rec(t, Opcode::append);
  if (r.contents.empty()) {
    Strand s;
    s.push_tail(b);
    r.contents.emplace(std::move(s), 1);
  } else {
    StrandMultiset next;
    for (auto& [strand, n] : r.contents) {
      Strand s = strand;
      s.push_tail(b);
      next[std::move(s)] += n;
    }
    r.contents = std::move(next);
  }
  r.state = State::live;
  log(Opcode::append, {r.name}, b);
}

void TubeMachine::append_head(Tube t, const BitBlock& b) {
  Rec& r = rec(t, Opcode::append_head);
  if (r.contents.empty()) {
    Strand s;
    s.push_head(b);
    r.contents.emplace(std::move(s), 1);
  } else {
    StrandMultiset next;
    for (auto& [strand, n] : r.contents) {
      Strand s = strand;
      s.push_head(b);
      next[std::move(s)] += n;
    }
    r.contents = std::move(next);
  }
  r.state = State::live;
  log(Opcode::append_head, {r.name}, b);
}

Strand TubeMachine::read(Tube t) {
  Rec& r = rec(t, Opcode::read);
  if (r.state == State::discarded) fault(Opcode::read, "on discarded tube '" + r.name + "'");
  if (r.contents.empty()) fault(Opcode::read, "on empty tube '" + r.name + "'");
  log(Opcode::read, {r.name});
  return r.contents.begin()->first;
}

std::vector<std::pair<Strand, std::uint64_t>> TubeMachine::read_all(Tube t) const {
  const Rec& r = rec(t);
  std::vector<std::pair<Strand, std::uint64_t>> out;
  out.reserve(r.contents.size());
  for (const auto& [strand, n] : r.contents) out.emplace_back(strand, n);
  return out;
}

std::uint64_t TubeMachine::strand_count(Tube t) const {
  const Rec& r = rec(t);
  std::uint64_t total = 0;
  for (const auto& [strand, n] : r.contents) total += n;
  return total;
}

std::uint64_t TubeMachine::block_count(Tube t) const {
  const Rec& r = rec(t);
  std::uint64_t total = 0;
  for (const auto& [strand, n] : r.contents) total += n * strand.size();
  return total;
}

bool TubeMachine::is_empty(Tube t) const { return rec(t).contents.empty(); }

const std::string& TubeMachine::name(Tube t) const { return rec(t).name; }

void TubeMachine::dump_trace(std::ostream& os) const {
  for (const auto& e : trace_) os << e.format() << '\n';
}

void TubeMachine::dump_counters(std::ostream& os) const {
  os << "{\n";
  const Opcode ops[] = {Opcode::extract, Opcode::merge,  Opcode::detect,
                        Opcode::discard, Opcode::amplify, Opcode::append,
                        Opcode::append_head, Opcode::read};
  for (std::size_t i = 0; i < 8; ++i) {
    os << "  \"" << opcode_name(ops[i]) << "\": " << counts_.at(ops[i]);
    os << (i + 1 < 8 ? ",\n" : "\n");
  }
  os << "}\n";
}

}  // namespace biodb
