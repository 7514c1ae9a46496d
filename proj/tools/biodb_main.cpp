#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biodb/designer.hpp"
#include "biodb/encoding.hpp"
#include "biodb/errors.hpp"
#include "biodb/oracle.hpp"
#include "biodb/query.hpp"
#include "biodb/relalg.hpp"
#include "biodb/schema.hpp"
#include "biodb/tube_machine.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw biodb::io_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw biodb::io_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw biodb::io_error("write to '" + path + "' failed");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

struct Database {
  biodb::TubeMachine machine;
  biodb::query::Catalog catalog;
};

std::pair<std::string, std::string> split_data_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw biodb::io_error("--data expects NAME=FILE, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

// Every relation in the schema file becomes a catalog entry; --data fills
// it, otherwise it stays empty. Keyed relations go through the key gate.
void load_database(Database& db, const std::string& schema_file,
                   const std::vector<std::string>& data_args) {
  std::vector<biodb::Schema> schemas = biodb::parse_schema_text(read_file(schema_file));
  std::map<std::string, biodb::Schema> by_name;
  for (auto& s : schemas) {
    s.validate();
    if (!by_name.emplace(s.name, s).second)
      throw biodb::schema_error("duplicate relation '" + s.name + "' in schema file");
  }
  std::map<std::string, std::vector<biodb::Row>> data;
  for (const auto& arg : data_args) {
    auto [name, path] = split_data_arg(arg);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw biodb::schema_error("--data names unknown relation '" + name + "'");
    if (!data.emplace(name, biodb::parse_csv(it->second, read_file(path))).second)
      throw biodb::io_error("--data given twice for relation '" + name + "'");
  }
  for (const auto& [name, schema] : by_name) {
    std::vector<biodb::Row> rows;
    if (auto it = data.find(name); it != data.end()) rows = std::move(it->second);
    biodb::Tube t = db.machine.make_tube(name);
    if (schema.key_prefix > 0) {
      biodb::primary_key_load(db.machine, t, rows, schema);
    } else {
      std::set<biodb::Row> seen;
      std::vector<biodb::Row> unique;
      for (const auto& r : rows)
        if (seen.insert(r).second) unique.push_back(r);
      rows = std::move(unique);
      biodb::load_relation(db.machine, t, rows, schema);
    }
    db.catalog.add(name, schema, std::move(rows), t);
  }
}

biodb::oracle::Cmp to_oracle_cmp(biodb::relalg::Comparator c) {
  using C = biodb::relalg::Comparator;
  using O = biodb::oracle::Cmp;
  switch (c) {
    case C::eq: return O::eq;
    case C::gt: return O::gt;
    case C::lt: return O::lt;
    case C::ne: return O::ne;
    case C::ge: return O::ge;
    case C::le: return O::le;
  }
  return O::eq;
}

biodb::oracle::Relation oracle_eval(const biodb::query::Expr& e,
                                    const biodb::query::Catalog& cat) {
  namespace orc = biodb::oracle;
  using biodb::query::NodeKind;
  if (e.kind == NodeKind::relation) {
    const auto* ent = cat.find(e.relation);
    if (!ent) throw biodb::schema_error("unknown relation '" + e.relation + "'");
    return orc::make_relation(ent->schema, ent->rows);
  }
  orc::Relation left = oracle_eval(*e.args[0], cat);
  switch (e.kind) {
    case NodeKind::union_op: return orc::union_(left, oracle_eval(*e.args[1], cat));
    case NodeKind::intersect_op: return orc::intersect(left, oracle_eval(*e.args[1], cat));
    case NodeKind::diff_op: return orc::difference(left, oracle_eval(*e.args[1], cat));
    case NodeKind::product_op: return orc::product(left, oracle_eval(*e.args[1], cat));
    case NodeKind::select_op: {
      const std::size_t field = *left.schema.field_index(e.field);
      return orc::select_const(left, field, to_oracle_cmp(e.cmp), e.constant);
    }
    case NodeKind::project_op:
      return orc::project(left, biodb::query::resolve_project_columns(e, left.schema));
    case NodeKind::join_op: {
      orc::Relation right = oracle_eval(*e.args[1], cat);
      const biodb::relalg::JoinSpec spec =
          biodb::query::resolve_join_spec(e, left.schema, right.schema);
      return spec.rhs_is_field
                 ? orc::theta_join_field(left, right, spec.field, to_oracle_cmp(spec.theta),
                                         spec.rhs_field)
                 : orc::theta_join_const(left, right, spec.field, to_oracle_cmp(spec.theta),
                                         spec.rhs_const);
    }
    case NodeKind::divide_op: {
      orc::Relation right = oracle_eval(*e.args[1], cat);
      return orc::divide(left, right, left.schema.field_count() - right.schema.field_count());
    }
    default: throw biodb::schema_error("unexpected query node");
  }
}

json counts_json(const biodb::OpCounts& c) {
  json j;
  for (biodb::Opcode op :
       {biodb::Opcode::extract, biodb::Opcode::merge, biodb::Opcode::detect,
        biodb::Opcode::discard, biodb::Opcode::amplify, biodb::Opcode::append,
        biodb::Opcode::append_head, biodb::Opcode::read})
    j[biodb::opcode_name(op)] = c.at(op);
  return j;
}

std::string predicted_line(const biodb::query::NodeReport& rep) {
  std::ostringstream os;
  os << "predicted" << (rep.predicted_bound ? " (upper bound)" : "") << ":";
  for (biodb::Opcode op :
       {biodb::Opcode::extract, biodb::Opcode::merge, biodb::Opcode::detect,
        biodb::Opcode::discard, biodb::Opcode::amplify, biodb::Opcode::append,
        biodb::Opcode::append_head, biodb::Opcode::read})
    if (rep.predicted.at(op) > 0)
      os << ' ' << biodb::opcode_name(op) << '=' << rep.predicted.at(op);
  return os.str();
}

biodb::Strand canonical_strand(const biodb::Schema& s, const biodb::Row& row) {
  biodb::Strand strand;
  for (std::size_t k = 1; k <= s.field_count(); ++k)
    for (std::size_t j = 1; j <= s.width(k); ++j)
      strand.push_tail(biodb::BitBlock(static_cast<std::uint32_t>(k),
                                       static_cast<std::uint32_t>(j),
                                       biodb::row_bit(s, row, k, j)));
  return strand;
}

std::string csv_with_dna(const biodb::Schema& s, const std::vector<biodb::Row>& rows,
                         const biodb::SequenceLibrary& lib) {
  std::ostringstream os;
  for (std::size_t k = 0; k < s.fields.size(); ++k) os << s.fields[k].name << ',';
  os << "dna\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << row[k] << ',';
    os << biodb::render_strand(canonical_strand(s, row), lib) << '\n';
  }
  return os.str();
}

struct QueryArgs {
  std::string schema_file, out_file, metrics_file, query_str, query_file;
  std::vector<std::string> data_args;
  std::uint64_t seed = 1;
  bool check_oracle = false;
  bool render_dna = false;
};

std::string query_text(const QueryArgs& a) {
  if (a.query_str.empty() == a.query_file.empty())
    throw biodb::io_error("exactly one of --query and --query-file is required");
  return a.query_str.empty() ? read_file(a.query_file) : a.query_str;
}

int do_query(const QueryArgs& a) {
  Database db;
  load_database(db, a.schema_file, a.data_args);
  auto expr = biodb::query::parse_query(query_text(a));
  biodb::query::RunResult result = biodb::query::run(db.machine, *expr, db.catalog);

  if (a.render_dna) {
    biodb::designer::ConstraintConfig cfg;
    biodb::SequenceLibrary lib = biodb::designer::generate_library(result.schema, cfg, a.seed);
    emit(a.out_file, csv_with_dna(result.schema, result.rows, lib));
  } else {
    emit(a.out_file, biodb::format_csv(result.schema, result.rows));
  }

  if (!a.metrics_file.empty()) {
    // Flat key -> integer document: one key per opcode plus result facts.
    json j = counts_json(db.machine.counts());
    j["strands"] = db.machine.strand_count(result.tube);
    std::uint64_t max_blocks = 0;
    for (const auto& [strand, n] : db.machine.read_all(result.tube))
      max_blocks = std::max<std::uint64_t>(max_blocks, strand.size());
    j["max_strand_blocks"] = max_blocks;
    if (a.render_dna)
      j["dna_bases_total"] = 15 * db.machine.block_count(result.tube);
    write_file(a.metrics_file, j.dump(2) + "\n");
  }

  if (a.check_oracle) {
    biodb::oracle::Relation expected = oracle_eval(*expr, db.catalog);
    std::set<biodb::Row> got(result.rows.begin(), result.rows.end());
    if (got.size() != result.rows.size()) {
      std::cerr << "oracle check failed: result contains duplicate rows\n";
      return 6;
    }
    if (got != expected.rows) {
      std::cerr << "oracle check failed: expected " << expected.rows.size() << " rows, got "
                << got.size() << "\n";
      return 6;
    }
    std::cerr << "oracle check passed: " << got.size() << " rows\n";
  }
  return 0;
}

int do_trace(const QueryArgs& a) {
  Database db;
  load_database(db, a.schema_file, a.data_args);
  const std::uint64_t load_end = db.machine.next_seq();
  auto expr = biodb::query::parse_query(query_text(a));
  biodb::query::RunResult result = biodb::query::run(db.machine, *expr, db.catalog);

  const auto& trace = db.machine.trace();
  std::ostringstream os;
  if (load_end > 1) {
    os << "# load\n";
    for (std::uint64_t s = 1; s < load_end; ++s) os << trace[s - 1].format() << '\n';
  }
  for (const auto& rep : result.reports) {
    if (rep.label.empty()) continue;
    os << "# " << rep.label;
    if (!rep.detail.empty()) os << ' ' << rep.detail;
    if (rep.seq_end > rep.seq_begin)
      os << " p=" << rep.p << " q=" << rep.q << " sigma=" << rep.sigma;
    os << " rows=" << rep.out_rows << '\n';
    if (rep.has_predicted) os << "# " << predicted_line(rep) << '\n';
    for (std::uint64_t s = rep.seq_begin; s < rep.seq_end; ++s)
      os << trace[s - 1].format() << '\n';
  }
  os << "# result rows=" << result.rows.size() << "\n";
  emit(a.out_file, os.str());
  return 0;
}

struct LoadArgs {
  std::string schema_file, catalog_file;
  std::vector<std::string> data_args;
};

int do_load(const LoadArgs& a) {
  Database db;
  load_database(db, a.schema_file, a.data_args);
  std::ostringstream os;
  json cat = json::object();
  for (const auto& [name, ent] : db.catalog.entries()) {
    os << name << ": " << ent.rows.size() << " rows, "
       << db.machine.counts().total() << " instructions so far\n";
    json fields = json::array();
    for (const auto& f : ent.schema.fields) fields.push_back({{"name", f.name}, {"width", f.width}});
    cat[name] = {{"fields", std::move(fields)},
                 {"key", ent.schema.key_prefix},
                 {"rows", ent.rows.size()}};
  }
  std::cout << os.str();
  if (!a.catalog_file.empty()) write_file(a.catalog_file, cat.dump(2) + "\n");
  return 0;
}

struct DesignArgs {
  std::string schema_file, relation, nn_file, out_file, check_file;
  std::uint64_t seed = 1;
  bool report = false;
  bool histogram = false;
};

int do_design(const DesignArgs& a) {
  std::vector<biodb::Schema> schemas = biodb::parse_schema_text(read_file(a.schema_file));
  const biodb::Schema* schema = nullptr;
  if (!a.relation.empty()) {
    for (const auto& s : schemas)
      if (s.name == a.relation) schema = &s;
    if (!schema) throw biodb::schema_error("no relation '" + a.relation + "' in schema file");
  } else if (schemas.size() == 1) {
    schema = &schemas.front();
  } else {
    std::cerr << "schema file declares several relations; pick one with --relation\n";
    return 1;
  }
  schema->validate();

  biodb::designer::ConstraintConfig cfg;
  if (!a.nn_file.empty()) cfg.nn = biodb::designer::parse_nn_text(read_file(a.nn_file));

  biodb::SequenceLibrary lib;
  if (!a.check_file.empty()) {
    lib = biodb::parse_library_text(read_file(a.check_file));
    for (std::size_t k = 1; k <= schema->field_count(); ++k)
      for (std::size_t j = 1; j <= schema->width(k); ++j)
        for (unsigned v = 0; v <= 1; ++v)
          if (!lib.contains(biodb::BitBlock(static_cast<std::uint32_t>(k),
                                            static_cast<std::uint32_t>(j), v)))
            throw biodb::design_error("library misses entry (" + std::to_string(k) + "," +
                                      std::to_string(j) + "," + std::to_string(v) + ")");
  } else {
    lib = biodb::designer::generate_library(*schema, cfg, a.seed);
  }

  if (!a.out_file.empty()) write_file(a.out_file, biodb::format_library(lib));

  biodb::designer::ConstraintReport rep = biodb::designer::check_constraints(lib, cfg);
  if (a.report) {
    for (const auto& c : rep.checks) {
      std::cout << "check " << c.name << ": " << (c.pass ? "pass" : "FAIL");
      if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
      std::cout << "\n";
    }
    biodb::designer::ThermoStats st = biodb::designer::thermo_stats(lib, cfg.nn);
    std::cout << "entries: " << st.entries << "\n";
    std::cout << "dH mean " << st.mean_h << " sd " << st.sd_h << "\n";
    std::cout << "dS mean " << st.mean_s << " sd " << st.sd_s << "\n";
    std::cout << "dG mean " << st.mean_g << " sd " << st.sd_g << "\n";
  }
  if (a.histogram) {
    std::vector<std::string> strands;
    for (const auto& [ba, sa] : lib.table)
      for (const auto& [bb, sb] : lib.table) strands.push_back(sa + sb);
    biodb::designer::MishybHistogram h = biodb::designer::mishyb_histogram(lib, strands);
    for (std::size_t k = 0; k < h.counts.size(); ++k)
      std::cout << k << "," << h.counts[k] << "\n";
  }
  if (!rep.all_pass()) {
    std::cerr << "library violates constraints\n";
    return 7;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relational queries compiled to test-tube instruction programs"};
  app.require_subcommand(1);

  LoadArgs la;
  auto* load = app.add_subcommand("load", "load schema and data through the machine");
  load->add_option("--schema", la.schema_file, "schema text file")->required();
  load->add_option("--data", la.data_args, "NAME=FILE, repeatable");
  load->add_option("--catalog", la.catalog_file, "write relation summary JSON here");

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "run a query and print the result");
  query->add_option("--schema", qa.schema_file, "schema text file")->required();
  query->add_option("--data", qa.data_args, "NAME=FILE, repeatable");
  query->add_option("--query", qa.query_str, "query text");
  query->add_option("--query-file", qa.query_file, "file holding the query");
  query->add_option("--out", qa.out_file, "result CSV file (default stdout)");
  query->add_option("--metrics", qa.metrics_file, "write instruction metrics JSON here");
  query->add_option("--seed", qa.seed, "library seed for --render-dna");
  query->add_flag("--check-oracle", qa.check_oracle,
                  "also evaluate conventionally and compare");
  query->add_flag("--render-dna", qa.render_dna, "append a rendered dna column");

  QueryArgs ta;
  auto* tracecmd = app.add_subcommand("trace", "run a query and print its instruction trace");
  tracecmd->add_option("--schema", ta.schema_file, "schema text file")->required();
  tracecmd->add_option("--data", ta.data_args, "NAME=FILE, repeatable");
  tracecmd->add_option("--query", ta.query_str, "query text");
  tracecmd->add_option("--query-file", ta.query_file, "file holding the query");
  tracecmd->add_option("--out", ta.out_file, "trace file (default stdout)");

  DesignArgs da;
  auto* design = app.add_subcommand("design", "generate or check a sequence library");
  design->add_option("--schema", da.schema_file, "schema text file")->required();
  design->add_option("--relation", da.relation, "relation to design for");
  design->add_option("--seed", da.seed, "generation seed");
  design->add_option("--nn", da.nn_file, "thermodynamic parameter CSV");
  design->add_option("--out", da.out_file, "write the library here");
  design->add_option("--check", da.check_file, "check this library file instead of generating");
  design->add_flag("--report", da.report, "print the constraint report");
  design->add_flag("--histogram", da.histogram, "print the binding-run histogram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (load->parsed()) return do_load(la);
    if (query->parsed()) return do_query(qa);
    if (tracecmd->parsed()) return do_trace(ta);
    if (design->parsed()) return do_design(da);
    return 1;
  } catch (const biodb::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const biodb::duplicate_key_error& e) {
    std::cerr << "key error: " << e.what() << "\n";
    return 3;
  } catch (const biodb::schema_error& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 3;
  } catch (const biodb::machine_fault& e) {
    std::cerr << "machine fault: " << e.what() << "\n";
    return 4;
  } catch (const biodb::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 5;
  } catch (const biodb::design_error& e) {
    std::cerr << "design error: " << e.what() << "\n";
    return 7;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
