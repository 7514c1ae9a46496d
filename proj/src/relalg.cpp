#include "biodb/relalg.hpp"

#include <algorithm>

namespace biodb::relalg {

const char* comparator_symbol(Comparator c) {
  switch (c) {
    case Comparator::eq: return "=";
    case Comparator::gt: return ">";
    case Comparator::lt: return "<";
    case Comparator::ne: return "!=";
    case Comparator::ge: return ">=";
    case Comparator::le: return "<=";
  }
  return "?";
}

bool eval_comparator(std::uint64_t lhs, Comparator c, std::uint64_t rhs) {
  switch (c) {
    case Comparator::eq: return lhs == rhs;
    case Comparator::gt: return lhs > rhs;
    case Comparator::lt: return lhs < rhs;
    case Comparator::ne: return lhs != rhs;
    case Comparator::ge: return lhs >= rhs;
    case Comparator::le: return lhs <= rhs;
  }
  return false;
}

ProgramParams params_for_left(const std::vector<Row>& rows) {
  ProgramParams p;
  p.p = rows.size();
  p.source_rows = rows;
  return p;
}

ProgramParams params_for_right(const std::vector<Row>& rows) {
  ProgramParams p;
  p.q = rows.size();
  p.source_rows = rows;
  return p;
}

Tube SelectionResult::pick(Comparator c) const {
  switch (c) {
    case Comparator::eq: return eq;
    case Comparator::gt: return gt;
    case Comparator::lt: return lt;
    case Comparator::ne: return ne;
    case Comparator::ge: return ge;
    case Comparator::le: return le;
  }
  return eq;
}

namespace {

// Counter delta helper; programs report core = delta - overhead.
struct CostScope {
  TubeMachine& m;
  OpCounts start;
  explicit CostScope(TubeMachine& machine) : m(machine), start(machine.counts()) {}
  OpCounts delta() const { return m.counts() - start; }
};

void finish(ProgramCost* cost, const CostScope& scope, const OpCounts& overhead = {}) {
  if (!cost) return;
  cost->overhead += overhead;
  cost->core += scope.delta() - overhead;
}

BitBlock block_of(const Schema& s, const Row& row, std::size_t k, std::size_t j) {
  return BitBlock(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j),
                  row_bit(s, row, k, j));
}

// Pour src into a fresh tube: one counted merge, mirroring the written
// procedures' habit of pouring into an already-consumed name.
Tube repot(TubeMachine& m, Tube src, const std::string& name) {
  return m.merge({m.make_tube(name), src}, name);
}

}  // namespace

Tube union_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                const ProgramParams& params, ProgramCost* cost) {
  CostScope scope(m);
  auto [x_keep, x_half] = m.amplify(x);
  auto [y_keep, y_work] = m.amplify(y);
  x = m.merge({x, x_keep}, m.name(x));
  y = m.merge({y, y_keep}, m.name(y));
  Tube y_rest = m.make_tube("y.rest");
  for (std::size_t i = 0; i < params.p; ++i) {
    const Row& row = params.source_rows[i];
    for (std::size_t k = 1; k <= s.field_count(); ++k)
      for (std::size_t j = 1; j <= s.width(k); ++j) {
        auto [match, differ] = m.extract(y_work, block_of(s, row, k, j), "y.match", "y.differ");
        y_work = match;
        y_rest = m.merge({y_rest, differ}, "y.rest");
      }
    m.discard(y_work);  // drops the Y copies of this X row
    y_work = m.merge({y_work, y_rest}, "y.work");
  }
  Tube out = m.merge({x_half, y_work}, "union.out");
  finish(cost, scope);
  return out;
}

Tube intersection_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                       const ProgramParams& params, ProgramCost* cost) {
  (void)x;  // probes come from the host-side row list, not the left tube
  CostScope scope(m);
  auto [y_keep, y_work] = m.amplify(y);
  y = m.merge({y, y_keep}, m.name(y));
  Tube out = m.make_tube("inter.out");
  Tube y_rest = m.make_tube("y.rest");
  for (std::size_t i = 0; i < params.p; ++i) {
    const Row& row = params.source_rows[i];
    for (std::size_t k = 1; k <= s.field_count(); ++k)
      for (std::size_t j = 1; j <= s.width(k); ++j) {
        auto [match, differ] = m.extract(y_work, block_of(s, row, k, j), "y.match", "y.differ");
        y_work = match;
        y_rest = m.merge({y_rest, differ}, "y.rest");
      }
    out = m.merge({out, y_work}, "inter.out");
    y_work = m.merge({y_work, y_rest}, "y.work");
  }
  m.discard(y_work);
  finish(cost, scope);
  return out;
}

Tube difference_prog(TubeMachine& m, Tube& x, Tube& y, const Schema& s,
                     const ProgramParams& params, ProgramCost* cost) {
  CostScope scope(m);
  auto [x_keep, x_work] = m.amplify(x);
  auto [y_keep, y_work] = m.amplify(y);
  x = m.merge({x, x_keep}, m.name(x));
  y = m.merge({y, y_keep}, m.name(y));
  Tube x_rest = m.make_tube("x.rest");
  Tube y_rest = m.make_tube("y.rest");
  for (std::size_t i = 0; i < params.q; ++i) {
    const Row& row = params.source_rows[i];
    for (std::size_t k = 1; k <= s.field_count(); ++k)
      for (std::size_t j = 1; j <= s.width(k); ++j) {
        const BitBlock probe = block_of(s, row, k, j);
        auto [xm, xd] = m.extract(x_work, probe, "x.match", "x.differ");
        x_work = xm;
        x_rest = m.merge({x_rest, xd}, "x.rest");
        auto [ym, yd] = m.extract(y_work, probe, "y.match", "y.differ");
        y_work = ym;
        y_rest = m.merge({y_rest, yd}, "y.rest");
      }
    // The detect asks whether this Y row is present in X; only then is
    // there anything to remove.
    if (m.detect(x_work)) m.discard(x_work);
    x_work = m.merge({x_work, x_rest}, "x.work");
    y_work = m.merge({y_work, y_rest}, "y.work");
  }
  Tube out = m.merge({m.make_tube("diff.out"), x_work}, "diff.out");
  finish(cost, scope);
  return out;
}

JudgePartition judge_distinct(TubeMachine& m, Tube& accepted, Tube& candidate,
                              const Schema& projected, ProgramCost* cost) {
  CostScope scope(m);
  auto [keep, work] = m.amplify(accepted);
  accepted = m.merge({accepted, keep}, m.name(accepted));
  Tube gt = m.make_tube("judge.gt");
  Tube lt = m.make_tube("judge.lt");
  Tube eq_step = m.make_tube("judge.eq");
  for (std::size_t k = 1; k <= projected.field_count(); ++k)
    for (std::size_t j = 1; j <= projected.width(k); ++j) {
      const BitBlock probe(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j), 1);
      auto [cand_on, cand_off] = m.extract(candidate, probe, "cand.on", "cand.off");
      auto [acc_on, acc_off] = m.extract(work, probe, "acc.on", "acc.off");
      if (m.detect(cand_on)) {  // candidate bit is 1
        eq_step = m.merge({eq_step, acc_on}, "judge.eq");
        lt = m.merge({lt, acc_off}, "judge.lt");
        candidate = repot(m, cand_on, "cand");
      } else {  // candidate bit is 0
        gt = m.merge({gt, acc_on}, "judge.gt");
        eq_step = m.merge({eq_step, acc_off}, "judge.eq");
        candidate = repot(m, cand_off, "cand");
      }
      work = repot(m, eq_step, "judge.work");
    }
  finish(cost, scope);
  return JudgePartition{gt, work, lt};
}

Tube projection_prog(TubeMachine& m, Tube& t0, const Schema& s,
                     const std::vector<std::size_t>& cols, const ProgramParams& params,
                     ProgramCost* cost) {
  const Schema projected = project_schema(s, cols);
  CostScope scope(m);
  ProgramCost judged{};
  auto [keep, work] = m.amplify(t0);
  t0 = m.merge({t0, keep}, m.name(t0));
  Tube out = m.make_tube("proj.out");
  Tube cand = m.make_tube("proj.cand");
  Tube work_rest = m.make_tube("work.rest");
  for (std::size_t i = 0; i < params.m; ++i) {
    const Row& row = params.source_rows[i];
    for (std::size_t d = 0; d < cols.size(); ++d) {
      const std::size_t k = cols[d];
      for (std::size_t j = 1; j <= s.width(k); ++j) {
        auto [match, differ] = m.extract(work, block_of(s, row, k, j), "work.match", "work.differ");
        work = match;
        work_rest = m.merge({work_rest, differ}, "work.rest");
      }
      if (m.detect(work)) {
        // Candidate blocks carry the projected field numbering so the
        // output decodes under the projected schema.
        for (std::size_t j = 1; j <= s.width(k); ++j)
          m.append(cand, BitBlock(static_cast<std::uint32_t>(d + 1),
                                  static_cast<std::uint32_t>(j), row_bit(s, row, k, j)));
      }
      work = m.merge({work, work_rest}, "work");
    }
    if (m.detect(cand)) {
      if (m.detect(out)) {
        JudgePartition part = judge_distinct(m, out, cand, projected, &judged);
        if (!m.detect(part.eq)) {
          out = m.merge({out, cand}, "proj.out");
        } else {
          m.discard(cand);
        }
        // part.gt / part.eq / part.lt hold a spent copy of the accepted
        // set; they are scratch and simply abandoned.
      } else {
        out = m.merge({out, cand}, "proj.out");
      }
    }
  }
  finish(cost, scope);
  return out;
}

namespace {

SelectionResult selection_tail(TubeMachine& m, Tube gt, Tube eq, Tube lt) {
  auto [gt_out, gt_dup] = m.amplify(gt, "sel.gt", "sel.gt'");
  auto [eq_out, eq_dup] = m.amplify(eq, "sel.eq", "sel.eq'");
  auto [lt_out, lt_dup] = m.amplify(lt, "sel.lt", "sel.lt'");
  auto [gt_a, gt_b] = m.amplify(gt_dup, "sel.gt.a", "sel.gt.b");
  auto [eq_a, eq_b] = m.amplify(eq_dup, "sel.eq.a", "sel.eq.b");
  auto [lt_a, lt_b] = m.amplify(lt_dup, "sel.lt.a", "sel.lt.b");
  Tube ge = m.merge({gt_a, eq_a}, "sel.ge");
  Tube le = m.merge({lt_a, eq_b}, "sel.le");
  Tube ne = m.merge({gt_b, lt_b}, "sel.ne");
  return SelectionResult{gt_out, eq_out, lt_out, ne, ge, le};
}

}  // namespace

SelectionResult selection_prog(TubeMachine& m, Tube& t0, std::size_t field,
                               std::uint64_t constant, const Schema& s, ProgramCost* cost) {
  if (field < 1 || field > s.field_count())
    throw schema_error("selection: field index out of range");
  const unsigned width = s.width(field);
  if (constant >= (std::uint64_t(1) << width))
    throw schema_error("selection: constant " + std::to_string(constant) +
                       " overflows field width " + std::to_string(width));
  CostScope scope(m);
  auto [keep, work] = m.amplify(t0);
  t0 = m.merge({t0, keep}, m.name(t0));
  // The constant is materialized as a strand so its bits are read back by
  // detect, the same way a stored row would be.
  Tube cst = m.make_tube("sel.const");
  for (unsigned j = 1; j <= width; ++j)
    m.append(cst, BitBlock(static_cast<std::uint32_t>(field), j,
                           static_cast<unsigned>((constant >> (width - j)) & 1u)));
  Tube gt = m.make_tube("sel.gt.acc");
  Tube lt = m.make_tube("sel.lt.acc");
  Tube eq_step = m.make_tube("sel.eq.acc");
  for (unsigned j = 1; j <= width; ++j) {
    const BitBlock probe(static_cast<std::uint32_t>(field), j, 1);
    auto [cst_on, cst_off] = m.extract(cst, probe, "const.on", "const.off");
    auto [row_on, row_off] = m.extract(work, probe, "work.on", "work.off");
    if (m.detect(cst_on)) {  // constant bit is 1
      eq_step = m.merge({eq_step, row_on}, "sel.eq.acc");
      lt = m.merge({lt, row_off}, "sel.lt.acc");
      cst = repot(m, cst_on, "sel.const");
    } else {  // constant bit is 0
      gt = m.merge({gt, row_on}, "sel.gt.acc");
      eq_step = m.merge({eq_step, row_off}, "sel.eq.acc");
      cst = repot(m, cst_off, "sel.const");
    }
    work = repot(m, eq_step, "sel.work");
  }
  eq_step = m.merge({eq_step, work}, "sel.eq.acc");
  SelectionResult r = selection_tail(m, gt, eq_step, lt);
  finish(cost, scope);
  return r;
}

SelectionResult selection_field_field(TubeMachine& m, Tube& t0, std::size_t f1, std::size_t f2,
                                      const Schema& s, ProgramCost* cost) {
  if (f1 < 1 || f1 > s.field_count() || f2 < 1 || f2 > s.field_count())
    throw schema_error("selection: field index out of range");
  if (s.width(f1) != s.width(f2))
    throw schema_error("selection: fields '" + s.fields[f1 - 1].name + "' and '" +
                       s.fields[f2 - 1].name + "' have different widths");
  const unsigned width = s.width(f1);
  CostScope scope(m);
  auto [keep, work] = m.amplify(t0);
  t0 = m.merge({t0, keep}, m.name(t0));
  Tube gt = m.make_tube("sel.gt.acc");
  Tube lt = m.make_tube("sel.lt.acc");
  for (unsigned j = 1; j <= width; ++j) {
    const BitBlock left(static_cast<std::uint32_t>(f1), j, 1);
    const BitBlock right(static_cast<std::uint32_t>(f2), j, 1);
    auto [a1, a0] = m.extract(work, left, "lhs.on", "lhs.off");
    auto [a11, a10] = m.extract(a1, right, "both.on", "gt.bit");
    auto [a01, a00] = m.extract(a0, right, "lt.bit", "both.off");
    gt = m.merge({gt, a10}, "sel.gt.acc");   // lhs 1, rhs 0
    lt = m.merge({lt, a01}, "sel.lt.acc");   // lhs 0, rhs 1
    work = m.merge({a11, a00}, "sel.work");  // equal so far
  }
  Tube eq = m.merge({m.make_tube("sel.eq.acc"), work}, "sel.eq.acc");
  SelectionResult r = selection_tail(m, gt, eq, lt);
  finish(cost, scope);
  return r;
}

void product_two_relations(TubeMachine& m, Tube& t51, Tube& t52, const Schema& left,
                           const Schema& right, const ProgramParams& params,
                           ProgramCost* cost) {
  const std::size_t offset = left.field_count();
  CostScope scope(m);
  OpCounts overhead;
  if (params.p == 0 || params.q == 0) {
    // Empty factor: the product is empty. Appending into empty sub-tubes
    // would mint phantom strands, so the passes are skipped outright.
    if (!m.is_empty(t51)) {
      OpCounts before = m.counts();
      m.discard(t51);
      overhead += m.counts() - before;
      t51 = m.make_tube("prod.out");
    }
    finish(cost, scope, overhead);
    return;
  }
  // One amplified sub-tube of the left relation per right row, so each
  // pass extends a full copy rather than stacking every row serially.
  std::vector<Tube> parts;
  {
    OpCounts before = m.counts();
    Tube rem = t51;
    for (std::size_t i = 1; i < params.q; ++i) {
      auto [part, rest] = m.amplify(rem, "prod.part" + std::to_string(i), "prod.rem");
      parts.push_back(part);
      rem = rest;
    }
    parts.push_back(rem);
    overhead += m.counts() - before;
  }
  const std::string rhs_name = m.name(t52);
  for (std::size_t i = 0; i < params.q; ++i) {
    const Row& row = params.source_rows[i];
    for (std::size_t k = 1; k <= right.field_count(); ++k)
      for (std::size_t j = 1; j <= right.width(k); ++j) {
        const BitBlock probe(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j), 1);
        auto [on, off] = m.extract(t52, probe, "rhs.on", "rhs.off");
        const bool has_one = m.detect(on);
        const bool has_zero = m.detect(off);
        const unsigned bit = row_bit(right, row, k, j);
        // Append this row's bit, shifted into the concatenated numbering.
        if (bit ? has_one : has_zero)
          m.append(parts[i], BitBlock(static_cast<std::uint32_t>(offset + k),
                                      static_cast<std::uint32_t>(j), bit));
        t52 = m.merge({on, off}, rhs_name);
      }
  }
  {
    OpCounts before = m.counts();
    t51 = m.merge(parts, "prod.out");
    overhead += m.counts() - before;
  }
  finish(cost, scope, overhead);
}

JoinResult theta_join_prog(TubeMachine& m, const std::vector<Row>& r1,
                           const std::vector<Row>& r2, const Schema& s1, const Schema& s2,
                           const JoinSpec& spec, ProgramCost* cost) {
  const Schema joined = concat_schemas(s1, s2);
  CostScope scope(m);
  ProgramCost inner{};
  Tube left = m.make_tube("join.left");
  load_relation(m, left, r1, s1);
  Tube right = m.make_tube("join.right");
  load_relation(m, right, r2, s2);
  auto [left_work, left_keep] = m.amplify(left, "join.left.work", "join.left.keep");
  auto [right_work, right_keep] = m.amplify(right, "join.right.work", "join.right.keep");
  left = m.merge({left, left_keep}, "join.left");
  right = m.merge({right, right_keep}, "join.right");
  ProgramParams prod = params_for_right(r2);
  prod.p = r1.size();
  product_two_relations(m, left_work, right_work, s1, s2, prod, &inner);
  SelectionResult sel =
      spec.rhs_is_field
          ? selection_field_field(m, left_work, spec.field, spec.rhs_field, joined, &inner)
          : selection_prog(m, left_work, spec.field, spec.rhs_const, joined, &inner);
  Tube out = m.merge({m.make_tube("join.out"), sel.pick(spec.theta)}, "join.out");
  if (cost) {
    OpCounts glue = scope.delta() - inner.total();
    cost->core += glue + inner.core;
    cost->overhead += inner.overhead;
  }
  return JoinResult{out, left, right};
}

DivisionResult division_prog(TubeMachine& m, const std::vector<Row>& dividend,
                             const std::vector<Row>& divisor, const Schema& s_dividend,
                             const Schema& s_divisor, ProgramCost* cost) {
  const std::size_t n = s_dividend.field_count();
  const std::size_t z = s_divisor.field_count();
  if (z < 1 || z >= n) throw schema_error("division: divisor field count out of range");
  const std::size_t w = n - z;
  for (std::size_t k = 1; k <= z; ++k)
    if (s_divisor.width(k) != s_dividend.width(w + k))
      throw schema_error("division: divisor widths must match the dividend's tail fields");
  std::vector<std::size_t> head(w);
  for (std::size_t k = 0; k < w; ++k) head[k] = k + 1;
  const Schema s_quotient = project_schema(s_dividend, head);

  CostScope scope(m);
  ProgramCost inner{};
  Tube t_dividend = m.make_tube("div.dividend");
  load_relation(m, t_dividend, dividend, s_dividend);
  Tube t_divisor = m.make_tube("div.divisor");
  load_relation(m, t_divisor, divisor, s_divisor);
  auto [dd_work, dd_keep] = m.amplify(t_dividend, "div.dd.work", "div.dd.keep");
  auto [dv_keep, dv_work] = m.amplify(t_divisor, "div.dv.keep", "div.dv.work");
  t_dividend = m.merge({t_dividend, dd_keep}, "div.dividend");
  t_divisor = m.merge({t_divisor, dv_keep}, "div.divisor");

  ProgramParams proj_params;
  proj_params.m = dividend.size();
  proj_params.source_rows = dividend;
  Tube quotient_cand = projection_prog(m, dd_work, s_dividend, head, proj_params, &inner);
  std::vector<Row> cand_rows = decode_tube(m, quotient_cand, s_quotient);

  ProgramParams prod_params = params_for_right(divisor);
  prod_params.p = cand_rows.size();
  product_two_relations(m, quotient_cand, dv_work, s_quotient, s_divisor, prod_params, &inner);

  ProgramParams diff1 = params_for_right(dividend);
  diff1.q = dividend.size();
  diff1.source_rows = dividend;
  Tube missing = difference_prog(m, quotient_cand, dd_work, s_dividend, diff1, &inner);
  std::vector<Row> missing_rows = decode_tube(m, missing, s_dividend);

  ProgramParams proj2;
  proj2.m = missing_rows.size();
  proj2.source_rows = missing_rows;
  Tube shortfall = projection_prog(m, missing, s_dividend, head, proj2, &inner);
  std::vector<Row> shortfall_rows = decode_tube(m, shortfall, s_quotient);

  Tube quotient_all = projection_prog(m, dd_work, s_dividend, head, proj_params, &inner);

  ProgramParams diff2 = params_for_right(shortfall_rows);
  diff2.q = shortfall_rows.size();
  diff2.source_rows = shortfall_rows;
  Tube out = difference_prog(m, quotient_all, shortfall, s_quotient, diff2, &inner);

  if (cost) {
    OpCounts glue = scope.delta() - inner.total();
    cost->core += glue + inner.core;
    cost->overhead += inner.overhead;
  }
  return DivisionResult{out, t_dividend, t_divisor};
}

OpCounts predicted_union(std::size_t p, std::size_t sigma) {
  OpCounts c;
  c.amplify = 2;
  c.merge = p * sigma + p + 3;
  c.extract = p * sigma;
  c.discard = p;
  return c;
}

OpCounts predicted_intersection(std::size_t p, std::size_t sigma) {
  OpCounts c;
  c.amplify = 1;
  c.merge = p * sigma + 2 * p + 1;
  c.extract = p * sigma;
  c.discard = 1;
  return c;
}

OpCounts predicted_difference_bound(std::size_t q, std::size_t sigma) {
  OpCounts c;
  c.amplify = 2;
  c.merge = 2 * q * sigma + 2 * q + 3;
  c.extract = 2 * q * sigma;
  c.detect = q;
  c.discard = q;
  return c;
}

OpCounts predicted_selection(unsigned width) {
  OpCounts c;
  c.amplify = 7;
  c.merge = 4u * width + 5;
  c.extract = 2u * width;
  c.append = width;
  c.detect = width;
  return c;
}

OpCounts predicted_product(std::size_t q, std::size_t sigma_right) {
  OpCounts c;
  c.extract = q * sigma_right;
  c.merge = q * sigma_right;
  c.detect = 2 * q * sigma_right;
  c.append = 2 * q * sigma_right;  // upper bound; one append per bit fires
  return c;
}

OpCounts predicted_judge(std::size_t sigma_cols) {
  OpCounts c;
  c.amplify = 1;
  c.merge = 4 * sigma_cols + 1;
  c.extract = 2 * sigma_cols;
  c.detect = sigma_cols;
  return c;
}

}  // namespace biodb::relalg
