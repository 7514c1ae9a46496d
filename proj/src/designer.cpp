#include "biodb/designer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace biodb::designer {

namespace {

constexpr std::size_t kSeqLen = 15;

char wc_complement(char b) {
  switch (b) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
  }
  return '?';
}

bool wc_pair(char a, char b) { return wc_complement(a) == b; }

std::string block_label(const BitBlock& b) {
  std::ostringstream os;
  os << '(' << b.field << ',' << b.bit << ',' << unsigned(b.value) << ')';
  return os.str();
}

unsigned longest_homopolymer(const std::string& s) {
  unsigned best = 0, run = 0;
  char last = 0;
  for (char c : s) {
    run = (c == last) ? run + 1 : 1;
    last = c;
    best = std::max(best, run);
  }
  return best;
}

// Longest stacked intramolecular pairing: s[i+r] pairs s[j-r] for r = 0..
unsigned longest_self_complement(const std::string& s) {
  unsigned best = 0;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      unsigned run = 0;
      while (i + run < j - run && wc_pair(s[i + run], s[j - run])) ++run;
      best = std::max(best, run);
    }
  return best;
}

// Longest off-site probe/strand run over any window of the concatenation
// a+b, excluding the two block-aligned windows that equal the probe's own
// entry. Covers every window any rendered strand can expose.
unsigned longest_cross_run(std::string_view probe_entry, std::string_view a, std::string_view b,
                           unsigned cap) {
  auto at = [&](std::size_t i) { return i < a.size() ? a[i] : b[i - a.size()]; };
  unsigned best = 0;
  for (std::size_t o = 0; o + kSeqLen <= a.size() + b.size(); ++o) {
    if (o == 0 && a == probe_entry) continue;  // intended site
    if (o == a.size() && b == probe_entry) continue;
    unsigned run = 0;
    for (std::size_t i = 0; i < kSeqLen; ++i) {
      run = (probe_entry[i] == at(o + i)) ? run + 1 : 0;
      best = std::max(best, run);
    }
    if (best > cap) return best;
  }
  return best;
}

struct LibState {
  std::vector<std::string> seqs;
  double g_min = 0, g_max = 0;
};

// Constraint screen for one candidate against everything accepted so far.
// Returns the empty string on success, else the violated constraint name.
// Exactly the combinations check_constraints would add when the candidate
// joins the library: the candidate as a probe against every ordered pair,
// and every accepted probe against pairs with the candidate on either side.
std::string screen(const std::string& cand, const LibState& st, const ConstraintConfig& cfg) {
  if (longest_homopolymer(cand) > cfg.max_homopolymer) return "homopolymer";
  if (longest_self_complement(cand) > cfg.max_self_complement) return "self_complement";
  for (const auto& s : st.seqs)
    if (s == cand) return "distinctness";
  const unsigned cap = cfg.max_unintended_match;
  auto hot = [&](std::string_view probe, std::string_view a, std::string_view b) {
    return longest_cross_run(probe, a, b, cap) > cap;
  };
  for (const auto& a : st.seqs)
    for (const auto& b : st.seqs)
      if (hot(cand, a, b)) return "unintended_match";
  for (const auto& s : st.seqs) {
    if (hot(cand, s, cand) || hot(cand, cand, s)) return "unintended_match";
    for (const auto& other : st.seqs)
      if (hot(s, other, cand) || hot(s, cand, other)) return "unintended_match";
    if (hot(s, cand, cand)) return "unintended_match";
  }
  if (hot(cand, cand, cand)) return "unintended_match";
  const double g = duplex_dg(cand, cfg.nn);
  const double lo = st.seqs.empty() ? g : std::min(st.g_min, g);
  const double hi = st.seqs.empty() ? g : std::max(st.g_max, g);
  if (hi - lo > cfg.melt_uniformity_band) return "melt_uniformity";
  return "";
}

}  // namespace

unsigned match_run(std::string_view a, std::string_view b) {
  unsigned best = 0, run = 0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    run = (a[i] == b[i]) ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

bool NNParams::complete() const {
  static const char* bases = "ACGT";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      std::string key{bases[i], bases[j]};
      if (!table.count(key)) return false;
    }
  return true;
}

const NNParams::Entry& NNParams::step(char a, char b) const {
  auto it = table.find(std::string{a, b});
  if (it == table.end())
    throw design_error(std::string("thermodynamic table missing step ") + a + b);
  return it->second;
}

NNParams NNParams::santalucia_unified() {
  // Ten duplex-unique values; each step shares its reverse complement's.
  struct Raw {
    const char* step;
    double dh, ds, dg;
  };
  static const Raw raw[] = {
      {"AA", -7.9, -22.2, -1.00}, {"AT", -7.2, -20.4, -0.88}, {"TA", -7.2, -21.3, -0.58},
      {"CA", -8.5, -22.7, -1.45}, {"GT", -8.4, -22.4, -1.44}, {"CT", -7.8, -21.0, -1.28},
      {"GA", -8.2, -22.2, -1.30}, {"CG", -10.6, -27.2, -2.17}, {"GC", -9.8, -24.4, -2.24},
      {"GG", -8.0, -19.9, -1.84},
  };
  NNParams p;
  for (const Raw& r : raw) {
    p.table[r.step] = Entry{r.dh, r.ds, r.dg};
    std::string rc{wc_complement(r.step[1]), wc_complement(r.step[0])};
    p.table[rc] = Entry{r.dh, r.ds, r.dg};
  }
  return p;
}

NNParams parse_nn_text(std::string_view text) {
  NNParams p;
  std::size_t start = 0, line_no = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::istringstream is{std::string(line)};
    std::string step;
    if (!std::getline(is, step, ',') || step.size() != 2 ||
        std::string_view("ACGT").find(step[0]) == std::string_view::npos ||
        std::string_view("ACGT").find(step[1]) == std::string_view::npos)
      throw io_error("nn params line " + std::to_string(line_no) + ": expected XY,dH,dS,dG");
    NNParams::Entry e;
    char comma;
    if (!(is >> e.dh >> comma >> e.ds >> comma >> e.dg))
      throw io_error("nn params line " + std::to_string(line_no) + ": bad numbers");
    p.table[step] = e;
  }
  return p;
}

std::string format_nn(const NNParams& p) {
  std::ostringstream os;
  for (const auto& [step, e] : p.table)
    os << step << ',' << e.dh << ',' << e.ds << ',' << e.dg << '\n';
  return os.str();
}

double duplex_dg(const std::string& seq, const NNParams& params) {
  double g = 0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) g += params.step(seq[i], seq[i + 1]).dg;
  return g;
}

bool ConstraintReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const ConstraintReport::Check* ConstraintReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

SequenceLibrary generate_library(const Schema& s, const ConstraintConfig& cfg,
                                 std::uint64_t seed) {
  s.validate();
  if (cfg.alphabet.empty()) throw design_error("generation exhausted; constraint: alphabet");
  if (!cfg.nn.complete()) throw design_error("thermodynamic table incomplete");
  std::vector<BitBlock> keys;
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    for (std::size_t j = 1; j <= s.width(k); ++j)
      for (unsigned v = 0; v <= 1; ++v)
        keys.emplace_back(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j), v);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.alphabet.size() - 1);
  std::string stuck = "distinctness";
  for (unsigned attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    LibState st;
    bool restart = false;
    for (std::size_t e = 0; e < keys.size() && !restart; ++e) {
      bool accepted = false;
      for (unsigned t = 0; t < cfg.retry_budget; ++t) {
        std::string cand(kSeqLen, 'A');
        for (auto& ch : cand) ch = cfg.alphabet[pick(rng)];
        std::string why = screen(cand, st, cfg);
        if (why.empty()) {
          const double g = duplex_dg(cand, cfg.nn);
          if (st.seqs.empty()) {
            st.g_min = st.g_max = g;
          } else {
            st.g_min = std::min(st.g_min, g);
            st.g_max = std::max(st.g_max, g);
          }
          st.seqs.push_back(std::move(cand));
          accepted = true;
          break;
        }
        stuck = why;
      }
      if (!accepted) restart = true;
    }
    if (!restart) {
      SequenceLibrary lib;
      for (std::size_t e = 0; e < keys.size(); ++e) lib.set(keys[e], st.seqs[e]);
      return lib;
    }
  }
  throw design_error("generation exhausted; constraint: " + stuck);
}

ConstraintReport check_constraints(const SequenceLibrary& lib, const ConstraintConfig& cfg) {
  ConstraintReport rep;
  auto add = [&rep](std::string name, bool pass, std::string detail) {
    rep.checks.push_back({std::move(name), pass, std::move(detail)});
  };

  {
    std::string detail;
    for (const auto& [b, s] : lib.table)
      if (s.size() != kSeqLen) {
        detail = "entry " + block_label(b) + " has length " + std::to_string(s.size());
        break;
      }
    add("length", detail.empty(), detail);
  }
  {
    std::string detail;
    for (const auto& [b, s] : lib.table) {
      std::size_t off = s.find_first_not_of(cfg.alphabet);
      if (off != std::string::npos) {
        detail = "entry " + block_label(b) + " offset " + std::to_string(off) + " in " + s;
        break;
      }
    }
    add("alphabet", detail.empty(), detail);
  }
  {
    std::string detail;
    for (const auto& [b, s] : lib.table)
      if (unsigned run = longest_homopolymer(s); run > cfg.max_homopolymer) {
        detail = "entry " + block_label(b) + " run " + std::to_string(run) + " in " + s;
        break;
      }
    add("homopolymer", detail.empty(), detail);
  }
  {
    std::string detail;
    std::map<std::string, BitBlock> seen;
    for (const auto& [b, s] : lib.table) {
      auto [it, fresh] = seen.emplace(s, b);
      if (!fresh) {
        detail = "entries " + block_label(it->second) + " and " + block_label(b) +
                 " share sequence " + s;
        break;
      }
    }
    add("distinctness", detail.empty(), detail);
  }
  {
    std::string detail;
    for (const auto& [b, s] : lib.table)
      if (unsigned run = longest_self_complement(s); run > cfg.max_self_complement) {
        detail = "entry " + block_label(b) + " run " + std::to_string(run) + " in " + s;
        break;
      }
    add("self_complement", detail.empty(), detail);
  }
  {
    std::string detail;
    for (const auto& [pb, probe] : lib.table) {
      if (probe.size() != kSeqLen) continue;  // reported by the length check
      for (const auto& [ab, a] : lib.table) {
        if (a.size() != kSeqLen) continue;
        for (const auto& [bb, bseq] : lib.table) {
          if (bseq.size() != kSeqLen) continue;
          unsigned run = longest_cross_run(probe, a, bseq, cfg.max_unintended_match);
          if (run > cfg.max_unintended_match) {
            detail = "probe " + block_label(pb) + " matches " + block_label(ab) + "+" +
                     block_label(bb) + " with run " + std::to_string(run);
            break;
          }
        }
        if (!detail.empty()) break;
      }
      if (!detail.empty()) break;
    }
    add("unintended_match", detail.empty(), detail);
  }
  {
    std::string detail;
    if (!lib.table.empty()) {
      double lo = 0, hi = 0;
      bool first = true;
      for (const auto& [b, s] : lib.table) {
        double g = duplex_dg(s, cfg.nn);
        lo = first ? g : std::min(lo, g);
        hi = first ? g : std::max(hi, g);
        first = false;
      }
      if (hi - lo > cfg.melt_uniformity_band) {
        std::ostringstream os;
        os << "dG spread " << (hi - lo) << " exceeds band " << cfg.melt_uniformity_band;
        detail = os.str();
      }
    }
    add("melt_uniformity", detail.empty(), detail);
  }
  return rep;
}

std::uint64_t MishybHistogram::pairs_evaluated() const {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

MishybHistogram mishyb_histogram(const SequenceLibrary& lib,
                                 const std::vector<std::string>& strands) {
  MishybHistogram h;
  for (const auto& [b, entry] : lib.table) {
    for (const auto& strand : strands) {
      if (strand.size() < kSeqLen) continue;
      for (std::size_t o = 0; o + kSeqLen <= strand.size(); ++o) {
        std::string_view window(strand.data() + o, kSeqLen);
        // A block-aligned window equal to the entry is the probe's own
        // site (entries are distinct, so equality identifies the block).
        if (o % kSeqLen == 0 && window == entry) continue;
        unsigned run = match_run(entry, window);
        h.counts[std::min<unsigned>(run, 15)] += 1;
      }
    }
  }
  return h;
}

ThermoStats thermo_stats(const SequenceLibrary& lib, const NNParams& params) {
  if (!params.complete()) throw design_error("thermodynamic table incomplete");
  ThermoStats st;
  st.entries = lib.table.size();
  if (st.entries == 0) return st;
  std::vector<double> hs, ss, gs;
  for (const auto& [b, seq] : lib.table) {
    double h = 0, s = 0, g = 0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const auto& e = params.step(seq[i], seq[i + 1]);
      h += e.dh;
      s += e.ds;
      g += e.dg;
    }
    hs.push_back(h);
    ss.push_back(s);
    gs.push_back(g);
  }
  auto mean_sd = [](const std::vector<double>& xs, double& mean, double& sd) {
    double sum = 0;
    for (double x : xs) sum += x;
    mean = sum / double(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / double(xs.size()));
  };
  mean_sd(hs, st.mean_h, st.sd_h);
  mean_sd(ss, st.mean_s, st.sd_s);
  mean_sd(gs, st.mean_g, st.sd_g);
  return st;
}

}  // namespace biodb::designer
