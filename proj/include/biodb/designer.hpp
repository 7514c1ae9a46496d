#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "biodb/encoding.hpp"
#include "biodb/schema.hpp"

namespace biodb::designer {

// Dinucleotide-step thermodynamic table. dH in kcal/mol, dS in
// cal/(mol*K), dG at 37C in kcal/mol; duplex values are additive over the
// 14 steps of a 15-base sequence.
struct NNParams {
  struct Entry {
    double dh = 0, ds = 0, dg = 0;
  };
  std::map<std::string, Entry> table;  // key: two bases over {A,C,G,T}

  bool complete() const;  // all 16 steps present
  const Entry& step(char a, char b) const;

  // Unified duplex parameters from SantaLucia, PNAS 95:1460 (1998).
  static NNParams santalucia_unified();
};

// File format: one line per step, `XY,dH,dS,dG`.
NNParams parse_nn_text(std::string_view text);
std::string format_nn(const NNParams& p);

struct ConstraintConfig {
  std::string alphabet = "ACT";
  unsigned max_homopolymer = 5;
  unsigned max_unintended_match = 11;  // no complementary run of 12+ off-site
  unsigned max_self_complement = 6;
  double melt_uniformity_band = 8.0;  // max spread of per-probe duplex dG
  unsigned retry_budget = 10000;      // candidate draws per entry
  unsigned max_restarts = 25;         // whole-library restarts
  NNParams nn = NNParams::santalucia_unified();
};

struct ConstraintReport {
  struct Check {
    std::string name;
    bool pass = true;
    std::string detail;  // first violator: entry, offset, sequence
  };
  std::vector<Check> checks;
  bool all_pass() const;
  const Check* find(std::string_view name) const;
};

// Draws one 15-base sequence per (field, bit, value) triple of the schema,
// rejection-sampling against every constraint. Deterministic for a given
// seed; throws design_error naming the stuck constraint when the retry
// budget and restarts are exhausted.
SequenceLibrary generate_library(const Schema& s, const ConstraintConfig& cfg,
                                 std::uint64_t seed);

// Validates an existing library against the same constraints.
ConstraintReport check_constraints(const SequenceLibrary& lib, const ConstraintConfig& cfg);

struct MishybHistogram {
  std::array<std::uint64_t, 16> counts{};  // counts[k]: pairs with longest run k
  std::uint64_t pairs_evaluated() const;
};

// For every probe and every ungapped alignment of it against the given
// rendered strands, records the longest exact complementary run. The
// alignment where a probe sits on its own block is excluded. A probe
// bound to the complement of entry e matches a window exactly where the
// window's bases equal e's, so runs are computed positionally.
MishybHistogram mishyb_histogram(const SequenceLibrary& lib,
                                 const std::vector<std::string>& strands);

struct ThermoStats {
  double mean_h = 0, sd_h = 0;
  double mean_s = 0, sd_s = 0;
  double mean_g = 0, sd_g = 0;
  std::size_t entries = 0;
};

// Duplex enthalpy/entropy/free energy per probe (sums of step values) and
// their mean and population standard deviation across the library.
ThermoStats thermo_stats(const SequenceLibrary& lib, const NNParams& params);

// Sum of step dG over a single sequence (the per-probe duplex value).
double duplex_dg(const std::string& seq, const NNParams& params);

// Longest positional match run between two equal-length windows.
unsigned match_run(std::string_view a, std::string_view b);

}  // namespace biodb::designer
