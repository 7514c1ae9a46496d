#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path fresh_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("biodb_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

CliResult run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(BIODB_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  int rc = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const char* kSchema =
    "relation emp; fields num:3, age:5; key 1;\n"
    "relation dept; fields num:3;\n";

fs::path standard_fixture() {
  fs::path dir = fresh_dir();
  spit(dir / "schema.txt", kSchema);
  spit(dir / "emp.csv", "num,age\n1,17\n2,30\n3,17\n");
  spit(dir / "dept.csv", "num\n1\n2\n");
  return dir;
}

std::string standard_args(const fs::path& dir) {
  return "--schema " + (dir / "schema.txt").string() + " --data emp=" +
         (dir / "emp.csv").string() + " --data dept=" + (dir / "dept.csv").string();
}

}  // namespace

TEST_CASE("load reports row and instruction counts and writes a catalog") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "load " + standard_args(dir) + " --catalog " +
                            (dir / "catalog.json").string());
  CHECK(r.status == 0);
  CHECK(r.out.find("emp: 3 rows") != std::string::npos);
  CHECK(r.out.find("dept: 2 rows") != std::string::npos);

  json cat = json::parse(slurp(dir / "catalog.json"));
  CHECK(cat["emp"]["key"] == 1);
  CHECK(cat["emp"]["rows"] == 3);
  CHECK(cat["emp"]["fields"][0]["name"] == "num");
  CHECK(cat["emp"]["fields"][1]["width"] == 5);
  CHECK(cat["dept"]["key"] == 0);
}

TEST_CASE("query prints the selected rows as csv") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "query " + standard_args(dir) + " --query \"select(emp, age = 17)\"");
  CHECK(r.status == 0);
  CHECK(r.out == "num,age\n1,17\n3,17\n");
}

TEST_CASE("query writes csv and flat metrics files") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "query " + standard_args(dir) +
                            " --query \"union(project(emp, [num]), dept)\" --out " +
                            (dir / "result.csv").string() + " --metrics " +
                            (dir / "metrics.json").string());
  CHECK(r.status == 0);
  CHECK(slurp(dir / "result.csv") == "num\n1\n2\n3\n");

  json metrics = json::parse(slurp(dir / "metrics.json"));
  const char* keys[] = {"extract", "merge",  "detect",  "discard",
                        "amplify", "append", "append_head", "read",
                        "strands", "max_strand_blocks"};
  CHECK(metrics.size() == 10);  // no dna key without --render-dna
  for (const char* k : keys) {
    REQUIRE(metrics.contains(k));
    CHECK(metrics[k].is_number_unsigned());
  }
  CHECK(metrics["strands"] == 3);
  CHECK(metrics["max_strand_blocks"] == 3);
  CHECK(metrics["extract"].get<std::uint64_t>() > 0);
}

TEST_CASE("query renders dna when asked") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "query " + standard_args(dir) +
                            " --query \"select(emp, num = 1)\" --render-dna --seed 11 --metrics " +
                            (dir / "metrics.json").string());
  CHECK(r.status == 0);
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "num,age,dna");
  const std::string dna = row.substr(row.rfind(',') + 1);
  CHECK(dna.size() == 8 * 15);  // 8 schema bits, 15 bases per block
  CHECK(dna.find_first_not_of("ACGT") == std::string::npos);

  json metrics = json::parse(slurp(dir / "metrics.json"));
  REQUIRE(metrics.contains("dna_bases_total"));
  CHECK(metrics["dna_bases_total"] == 8 * 15);
}

TEST_CASE("query checks against the reference engine") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "query " + standard_args(dir) +
                            " --query \"join(emp, dept, num = num)\" --check-oracle");
  CHECK(r.status == 0);
  CHECK(r.err.find("oracle check passed") != std::string::npos);
}

TEST_CASE("failures map to distinct exit codes") {
  fs::path dir = standard_fixture();

  auto parse = run_cli(dir, "query " + standard_args(dir) + " --query \"union(emp,\"");
  CHECK(parse.status == 2);
  CHECK(parse.err.find("parse error") != std::string::npos);

  auto unknown = run_cli(dir, "query " + standard_args(dir) + " --query \"select(nosuch, x = 1)\"");
  CHECK(unknown.status == 3);
  CHECK(unknown.err.find("unknown relation") != std::string::npos);

  auto missing = run_cli(dir, "query --schema " + (dir / "absent.txt").string() +
                                  " --query \"union(emp, emp)\"");
  CHECK(missing.status == 5);

  auto both = run_cli(dir, "query " + standard_args(dir) + " --query \"emp\" --query-file " +
                               (dir / "q.txt").string());
  CHECK(both.status == 5);

  auto neither = run_cli(dir, "query " + standard_args(dir));
  CHECK(neither.status == 5);

  auto no_sub = run_cli(dir, "");
  CHECK(no_sub.status != 0);
}

TEST_CASE("keyed loads reject duplicate keys with exit code 3") {
  fs::path dir = standard_fixture();
  spit(dir / "dup.csv", "num,age\n1,17\n1,18\n");
  auto r = run_cli(dir, "load --schema " + (dir / "schema.txt").string() + " --data emp=" +
                            (dir / "dup.csv").string());
  CHECK(r.status == 3);
  CHECK(r.err.find("duplicate key") != std::string::npos);

  spit(dir / "wide.csv", "num,age\n9,17\n");
  auto wide = run_cli(dir, "load --schema " + (dir / "schema.txt").string() + " --data emp=" +
                               (dir / "wide.csv").string());
  CHECK(wide.status == 3);

  auto bad_name = run_cli(dir, "load --schema " + (dir / "schema.txt").string() +
                                   " --data nosuch=" + (dir / "emp.csv").string());
  CHECK(bad_name.status == 3);
  CHECK(bad_name.err.find("unknown relation") != std::string::npos);
}

TEST_CASE("query file input works") {
  fs::path dir = standard_fixture();
  spit(dir / "q.txt", "select(emp, age > 17)\n");
  auto r = run_cli(dir, "query " + standard_args(dir) + " --query-file " +
                            (dir / "q.txt").string());
  CHECK(r.status == 0);
  CHECK(r.out == "num,age\n2,30\n");
}

TEST_CASE("trace separates loading from per-operator slices") {
  fs::path dir = standard_fixture();
  auto r = run_cli(dir, "trace " + standard_args(dir) +
                            " --query \"union(project(emp, [num]), dept)\"");
  CHECK(r.status == 0);
  CHECK(r.out.find("# load") != std::string::npos);
  CHECK(r.out.find("# project [num]") != std::string::npos);
  CHECK(r.out.find("# union") != std::string::npos);
  CHECK(r.out.find("predicted") != std::string::npos);
  CHECK(r.out.find("# result rows=3") != std::string::npos);
  CHECK(r.out.find("\tappend\t") != std::string::npos);
  CHECK(r.out.find("\textract\t") != std::string::npos);

  // Sequence numbers are strictly increasing over the whole trace.
  std::istringstream lines(r.out);
  std::string line;
  long last = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
    long seq = std::strtol(line.c_str(), nullptr, 10);
    CHECK(seq == last + 1);
    last = seq;
  }
  CHECK(last > 0);
}

TEST_CASE("design emits a deterministic passing library") {
  fs::path dir = standard_fixture();
  const std::string base = "design --schema " + (dir / "schema.txt").string() +
                           " --relation emp --seed 42";
  auto r1 = run_cli(dir, base + " --out " + (dir / "lib1.txt").string() + " --report");
  CHECK(r1.status == 0);
  CHECK(r1.out.find("check homopolymer: pass") != std::string::npos);
  CHECK(r1.out.find("check melt_uniformity: pass") != std::string::npos);
  CHECK(r1.out.find("entries: 16") != std::string::npos);
  CHECK(r1.out.find("dG mean") != std::string::npos);

  auto r2 = run_cli(dir, base + " --out " + (dir / "lib2.txt").string());
  CHECK(r2.status == 0);
  CHECK(slurp(dir / "lib1.txt") == slurp(dir / "lib2.txt"));
  CHECK(!slurp(dir / "lib1.txt").empty());

  auto checked = run_cli(dir, base + " --check " + (dir / "lib1.txt").string());
  CHECK(checked.status == 0);
}

TEST_CASE("design histograms binding runs and flags bad libraries") {
  fs::path dir = standard_fixture();
  const std::string base = "design --schema " + (dir / "schema.txt").string() +
                           " --relation dept --seed 9";
  auto hist = run_cli(dir, base + " --histogram");
  CHECK(hist.status == 0);
  std::istringstream lines(hist.out);
  std::string line;
  int bins = 0;
  while (std::getline(lines, line)) {
    if (line.find(',') == std::string::npos) continue;
    const int k = std::atoi(line.c_str());
    CHECK(k == bins);
    if (k >= 12) CHECK(line.substr(line.find(',') + 1) == "0");
    ++bins;
  }
  CHECK(bins == 16);

  auto good = run_cli(dir, base + " --out " + (dir / "lib.txt").string());
  REQUIRE(good.status == 0);
  std::string text = slurp(dir / "lib.txt");
  const std::size_t first_nl = text.find('\n');
  const std::size_t seq_at = text.rfind(',', first_nl) + 1;
  text.replace(seq_at, first_nl - seq_at, "AAAAAAAAAAAAAAA");
  spit(dir / "bad.txt", text);
  auto bad = run_cli(dir, base + " --check " + (dir / "bad.txt").string());
  CHECK(bad.status == 7);
  CHECK(bad.err.find("violates constraints") != std::string::npos);

  std::string missing = slurp(dir / "lib.txt");
  missing = missing.substr(missing.find('\n') + 1);  // drop one entry
  spit(dir / "missing.txt", missing);
  auto incomplete = run_cli(dir, base + " --check " + (dir / "missing.txt").string());
  CHECK(incomplete.status == 7);
}

TEST_CASE("two hundred random queries agree with the reference engine end to end") {
  fs::path dir = fresh_dir();
  spit(dir / "schema.txt",
       "relation r; fields x:3, y:3;\n"
       "relation s; fields x:3, y:3;\n"
       "relation t; fields z:2;\n"
       "relation d2; fields a:3, b:3;\n"
       "relation d1; fields b:3;\n");

  const std::vector<std::string> templates = {
      "union(r, s)",
      "intersect(r, s)",
      "diff(r, s)",
      "product(r, t)",
      "select(r, x >= %C)",
      "project(r, [y])",
      "project(r, [y, x])",
      "join(r, s, x = y)",
      "join(r, t, x > %C)",
      "divide(d2, d1)",
      "select(union(r, s), x <= %C)",
      "project(product(r, t), [x, z])",
      "union(diff(r, s), intersect(r, s))",
      "diff(r, r)",
  };

  std::mt19937_64 rng(2468);
  auto csv = [&](const std::vector<std::string>& cols, unsigned bits, std::size_t max_rows) {
    std::uniform_int_distribution<std::size_t> count(0, max_rows);
    std::uniform_int_distribution<std::uint64_t> v(0, (1u << bits) - 1);
    std::ostringstream os;
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << v(rng);
      os << "\n";
    }
    return os.str();
  };

  int failures = 0;
  for (int round = 0; round < 200; ++round) {
    spit(dir / "r.csv", csv({"x", "y"}, 3, 6));
    spit(dir / "s.csv", csv({"x", "y"}, 3, 6));
    spit(dir / "t.csv", csv({"z"}, 2, 3));
    spit(dir / "d2.csv", csv({"a", "b"}, 3, 6));
    spit(dir / "d1.csv", csv({"b"}, 3, 2));

    std::string text = templates[round % templates.size()];
    const std::size_t hole = text.find("%C");
    if (hole != std::string::npos)
      text.replace(hole, 2, std::to_string(rng() % 8));

    const std::string args = "query --schema " + (dir / "schema.txt").string() +
                             " --data r=" + (dir / "r.csv").string() +
                             " --data s=" + (dir / "s.csv").string() +
                             " --data t=" + (dir / "t.csv").string() +
                             " --data d2=" + (dir / "d2.csv").string() +
                             " --data d1=" + (dir / "d1.csv").string() +
                             " --check-oracle --query \"" + text + "\"";
    auto r = run_cli(dir, args);
    if (r.status != 0) {
      ++failures;
      MESSAGE("query ", text, " exited ", r.status, ": ", r.err);
    }
  }
  CHECK(failures == 0);
}
