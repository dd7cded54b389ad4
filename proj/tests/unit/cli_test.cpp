#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include <nlohmann/json.hpp>

#ifndef KPIREFINE_CLI_PATH
#error "KPIREFINE_CLI_PATH must name the kpirefine binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path dir;
  Workdir() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("kpirefine_cli_test_" + std::to_string(::getpid()) + "_" +
                                       std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const Workdir& w) {
  const std::string log = w.path("stdout.txt");
  const std::string cmd =
      std::string(KPIREFINE_CLI_PATH) + " " + args + " > " + log + " 2> " + w.path("stderr.txt");
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Column `col` of row `row` (1-based, after the header) of a CSV.
std::string cell(const std::string& csv, std::size_t row, std::size_t col) {
  std::istringstream in(csv);
  std::string line;
  for (std::size_t i = 0; i <= row; ++i) std::getline(in, line);
  std::istringstream cells(line);
  std::string c;
  for (std::size_t i = 0; i <= col; ++i) std::getline(cells, c, ',');
  return c;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("polytree subcommand") {
  Workdir w;
  const Run small = run("polytree --r 2 --h 2 --out " + w.path("t.json"), w);
  CHECK(small.code == 0);
  CHECK(small.out.find("4/7") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(w.path("t.json")));
  CHECK(doc.at("nodes").size() == 7);
  CHECK(doc.at("edges").size() == 6);

  CHECK(run("polytree --r 2 --h 6 --out " + w.path("t6.json"), w).out.find("N=127") !=
        std::string::npos);
  CHECK(run("polytree --r 0 --h 2 --out " + w.path("t0.json"), w).code == 1);
  CHECK(run("polytree --r 10 --h 40 --out " + w.path("big.json"), w).code == 1);
}

TEST_CASE("refine subcommand") {
  Workdir w;
  write(w.path("one.json"), R"({"nodes": ["a"]})");
  write(w.path("one.csv"), "a\n0.5\n");
  REQUIRE(run("refine --graph " + w.path("one.json") + " --scores " + w.path("one.csv") +
                  " --out " + w.path("one_out.csv"),
              w)
              .code == 0);
  const std::string out = slurp(w.path("one_out.csv"));
  CHECK(std::abs(std::stod(cell(out, 1, 3)) - 0.5) < 1e-3);

  write(w.path("chain.json"), R"({"nodes": ["a", "b"], "edges": [["a", "b"]]})");
  write(w.path("leaf.csv"), "a,b\n0,1\n");
  const Run leaf = run("refine --graph " + w.path("chain.json") + " --scores " + w.path("leaf.csv") +
                           " --units absolute --mu 100 --out " + w.path("leaf_out.csv"),
                       w);
  CHECK(leaf.code == 0);
  CHECK(leaf.out.find("epoch 0: objective") != std::string::npos);
  CHECK(std::stod(cell(slurp(w.path("leaf_out.csv")), 2, 3)) > 0.9);

  write(w.path("gone.csv"), "a,b\n0.1,0.2\n,\n");
  CHECK(run("refine --graph " + w.path("chain.json") + " --scores " + w.path("gone.csv") +
                " --out " + w.path("x.csv"),
            w)
            .code == 2);

  write(w.path("bad.csv"), "a,b\n0.1,nope\n");
  CHECK(run("refine --graph " + w.path("chain.json") + " --scores " + w.path("bad.csv") +
                " --out " + w.path("x.csv"),
            w)
            .code == 1);
  CHECK(slurp(w.path("stderr.txt")).find("bad.csv:2:") != std::string::npos);

  write(w.path("cyclic.json"), R"({"nodes": ["a", "b"], "edges": [["a", "b"], ["b", "a"]]})");
  CHECK(run("refine --graph " + w.path("cyclic.json") + " --scores " + w.path("leaf.csv") +
                " --out " + w.path("x.csv"),
            w)
            .code == 1);
  CHECK(run("refine --graph " + w.path("chain.json"), w).code == 1);
}

TEST_CASE("polytree output feeds refine and simulate") {
  Workdir w;
  REQUIRE(run("polytree --r 2 --h 1 --out " + w.path("t.json"), w).code == 0);
  write(w.path("s.csv"), "n0,n1,n2\n1,0,0\n0,1,1\n");
  const Run r = run("refine --graph " + w.path("t.json") + " --scores " + w.path("s.csv") +
                        " --out " + w.path("o.csv"),
                    w);
  CHECK(r.code == 0);
  CHECK(slurp(w.path("stderr.txt")).empty());
  CHECK(run("simulate --graph " + w.path("t.json") + " --path-length 1 --epochs 20", w).code == 0);
  CHECK(slurp(w.path("stderr.txt")).empty());
}

TEST_CASE("simulate subcommand") {
  Workdir w;
  const Run ok = run("simulate --r 2 --h 3 --epochs 40 --out " + w.path("rep.json"), w);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("auc_original") != std::string::npos);
  const auto rep = nlohmann::json::parse(slurp(w.path("rep.json")));
  CHECK(rep.at("M") == 40);
  CHECK(rep.at("r") == 2);

  const Run clean =
      run("simulate --r 2 --h 3 --fpr 0 --fnr 0 --epochs 20 --out " + w.path("clean.json"), w);
  CHECK(clean.code == 0);
  const auto c = nlohmann::json::parse(slurp(w.path("clean.json")));
  CHECK(c.at("auc_original").get<double>() >= 0.99);
  CHECK(c.at("auc_refined").get<double>() >= 0.99);

  REQUIRE(run("simulate --r 2 --h 1 --fpr 0 --fnr 0 --epochs 2 --scenario-out " + w.path("sc.csv"),
              w)
              .code == 0);
  const std::string scenario = slurp(w.path("sc.csv"));
  CHECK(scenario.rfind("epoch,node_name,label,raw_score\n0,n0,1,1\n", 0) == 0);
  CHECK(std::count(scenario.begin(), scenario.end(), '\n') == 7);
  CHECK(nlohmann::json::parse(slurp(w.path("sc.csv.json"))).at("epochs") == 2);

  CHECK(run("simulate --r 2 --h 3 --epochs 0", w).code == 1);
  CHECK(run("simulate --r 2 --h 3 --fpr 2", w).code == 1);
  CHECK(run("simulate --h 3", w).code == 1);
}

TEST_CASE("outputs are byte-identical across runs") {
  Workdir w;
  const std::string sim = "simulate --r 2 --h 3 --epochs 30 --seed 4 --refine-seed 2 --out ";
  REQUIRE(run(sim + w.path("a.csv"), w).code == 0);
  REQUIRE(run(sim + w.path("b.csv") + " --parallel 3", w).code == 0);
  CHECK(slurp(w.path("a.csv")) == slurp(w.path("b.csv")));

  const std::string sw = "sweep --r 2 --h 2 --epochs 10 --axis fnr --values 0,0.1 --out ";
  REQUIRE(run(sw + w.path("s1.csv"), w).code == 0);
  REQUIRE(run(sw + w.path("s2.csv"), w).code == 0);
  CHECK(slurp(w.path("s1.csv")) == slurp(w.path("s2.csv")));
  CHECK(slurp(w.path("s1.csv")).rfind("r,h,fpr,fnr,auc_original,auc_refined,M,seed\n", 0) == 0);

  write(w.path("chain.json"), R"({"nodes": ["a", "b"], "edges": [["a", "b"]]})");
  write(w.path("s.csv"), "a,b\n1,0\n0.3,0.9\n");
  const std::string ref =
      "refine --graph " + w.path("chain.json") + " --scores " + w.path("s.csv") + " --out ";
  REQUIRE(run(ref + w.path("r1.csv"), w).code == 0);
  REQUIRE(run(ref + w.path("r2.csv"), w).code == 0);
  CHECK(slurp(w.path("r1.csv")) == slurp(w.path("r2.csv")));
}

TEST_CASE("gradcheck subcommand") {
  Workdir w;
  const Run ok = run("gradcheck", w);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("worst relative error") != std::string::npos);
  CHECK(run("gradcheck --trials 5 --tolerance 1e-15", w).code == 1);
  CHECK(run("gradcheck --trials 0", w).code == 1);
}

TEST_CASE("usage errors") {
  Workdir w;
  CHECK(run("", w).code == 1);
  CHECK(run("frobnicate", w).code == 1);
  CHECK(run("refine --units sideways --graph g --scores s --out o", w).code == 1);
  CHECK(run("--help", w).code == 0);
}

}  // TEST_SUITE
