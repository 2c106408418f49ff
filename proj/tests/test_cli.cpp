#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "testutil.hpp"

// GPLACE_BIN is injected by the build; every case drives the real binary.

namespace {

using nlohmann::json;

std::string bin() { return std::string(GPLACE_BIN); }

testutil::RunResult run(const std::string& args) {
  return testutil::run_command(bin() + " " + args);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

// Pulls the first match group of `re` out of `text`.
std::string extract(const std::string& text, const std::string& re) {
  std::smatch m;
  REQUIRE_MESSAGE(std::regex_search(text, m, std::regex(re)),
                  "pattern '" << re << "' not found in:\n" << text);
  return m[1].str();
}

std::string gen_circuit(const testutil::TempDir& dir, int cells, int terminals,
                        uint64_t seed) {
  auto r = run("gen --out " + dir.str() + " --cells " + std::to_string(cells) +
               " --terminals " + std::to_string(terminals) + " --seed " +
               std::to_string(seed));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  return dir.str("circuit.aux");
}

}  // namespace

TEST_CASE("gen writes a Bookshelf file set, byte-identical per seed") {
  testutil::TempDir a("cli-gen-a"), b("cli-gen-b"), c("cli-gen-c");
  std::string flags = " --cells 40 --terminals 4 --net-degree 3.5";
  auto ra = run("gen --out " + a.str() + flags + " --seed 7");
  auto rb = run("gen --out " + b.str() + flags + " --seed 7");
  auto rc = run("gen --out " + c.str() + flags + " --seed 8");
  REQUIRE_MESSAGE(ra.exit_code == 0, ra.output);
  REQUIRE(rb.exit_code == 0);
  REQUIRE(rc.exit_code == 0);
  CHECK(ra.output.find("gen: cells=44") != std::string::npos);
  CHECK(ra.output.find(a.str("circuit.aux")) != std::string::npos);

  bool differs = false;
  for (const char* ext : {".aux", ".nodes", ".nets", ".pl"}) {
    std::string fa = testutil::slurp(a.str(std::string("circuit") + ext));
    CHECK_MESSAGE(!fa.empty(), "circuit" << ext << " missing or empty");
    CHECK(fa == testutil::slurp(b.str(std::string("circuit") + ext)));
    if (fa != testutil::slurp(c.str(std::string("circuit") + ext))) differs = true;
  }
  CHECK_MESSAGE(differs, "seed 8 produced the same file set as seed 7");
}

TEST_CASE("usage errors exit 2") {
  auto missing_out = run("gen --cells 10");
  CHECK(missing_out.exit_code == 2);
  CHECK(missing_out.output.find("gplace: error:") != std::string::npos);
  CHECK(missing_out.output.find("--out") != std::string::npos);

  auto bad_flag = run("gen --no-such-flag 1");
  CHECK(bad_flag.exit_code == 2);
  CHECK(bad_flag.output.find("gplace: usage:") != std::string::npos);

  auto no_subcommand = run("");
  CHECK(no_subcommand.exit_code == 2);

  auto bad_value = run("gen --out /tmp/x --cells not-a-number");
  CHECK(bad_value.exit_code == 2);
}

TEST_CASE("missing and malformed inputs map to exit 5 and 3") {
  testutil::TempDir tmp("cli-badin");
  auto missing = run("partition --circuit " + tmp.str("nope.aux"));
  CHECK(missing.exit_code == 5);
  CHECK(missing.output.find("gplace: error:") != std::string::npos);

  write_file(tmp.str("broken.aux"), "RowBasedPlacement : \n");
  auto malformed = run("partition --circuit " + tmp.str("broken.aux"));
  CHECK(malformed.exit_code == 3);
  CHECK(malformed.output.find("gplace: error:") != std::string::npos);
}

TEST_CASE("partition prints branch count and eta, dump matches") {
  testutil::TempDir tmp("cli-part");
  std::string aux = gen_circuit(tmp, 80, 8, 11);
  testutil::TempDir dump("cli-part-dump");
  auto r = run("partition --circuit " + aux + " --target-parts 4 --dump-hier " + dump.str());
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  int branches = std::stoi(extract(r.output, R"(partition: branches=(\d+) eta=)"));
  double eta = std::stod(extract(r.output, R"(eta=(\d+\.\d{4}))"));
  CHECK(branches >= 4);
  CHECK(eta >= 0.0);
  json manifest = json::parse(testutil::slurp(dump.str("manifest.json")));
  CHECK(manifest.at("num_branches").get<int>() == branches);
  CHECK(testutil::rel_err(manifest.at("eta").get<double>(), eta) < 1e-3);
}

TEST_CASE("flow dump has one edge per line and one income edge per movable") {
  testutil::TempDir tmp("cli-flow");
  std::string aux = gen_circuit(tmp, 50, 5, 13);
  auto r = run("flow --circuit " + aux + " --dump-flow " + tmp.str("flow.txt"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  int edges = std::stoi(extract(r.output, R"(flow: edges=(\d+) pins=)"));

  std::istringstream in(testutil::slurp(tmp.str("flow.txt")));
  std::string line;
  int lines = 0, income = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long src, dst, net, flag;
    REQUIRE_MESSAGE(static_cast<bool>(ls >> src >> dst >> net >> flag), "bad line: " << line);
    CHECK((flag == 0 || flag == 1));
    income += static_cast<int>(flag);
    ++lines;
  }
  CHECK(lines == edges);
  CHECK(income == 50);
}

TEST_CASE("roundtrip reports a tiny reconstruction error") {
  testutil::TempDir tmp("cli-rt");
  std::string aux = gen_circuit(tmp, 30, 3, 17);
  auto r = run("roundtrip --circuit " + aux + " --seed 17 --dump-enc " + tmp.str("enc.txt"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  double err = std::stod(extract(r.output, R"(roundtrip: max_rel_err=([0-9.eE+-]+))"));
  CHECK(err < 1e-6);
  CHECK(!testutil::slurp(tmp.str("enc.txt")).empty());
}

TEST_CASE("config file fills in settings and flags override it") {
  testutil::TempDir tmp("cli-cfg");
  write_file(tmp.str("gen.ini"),
             "[run]\n"
             "seed = 9\n"
             "[gen]\n"
             "cells = 30\n"
             "terminals = 5   ; inline comment\n");

  testutil::TempDir d1("cli-cfg-d1"), d2("cli-cfg-d2"), d3("cli-cfg-d3");
  auto r1 = run("gen --config " + tmp.str("gen.ini") + " --out " + d1.str());
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
  CHECK(r1.output.find("gen: cells=35") != std::string::npos);

  auto r2 = run("gen --config " + tmp.str("gen.ini") + " --out " + d2.str() + " --cells 50");
  REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
  CHECK(r2.output.find("gen: cells=55") != std::string::npos);

  // run.seed from the config must act exactly like --seed.
  auto r3 = run("gen --out " + d3.str() + " --cells 30 --terminals 5 --seed 9");
  REQUIRE(r3.exit_code == 0);
  for (const char* ext : {".nodes", ".nets", ".pl"})
    CHECK(testutil::slurp(d1.str(std::string("circuit") + ext)) ==
          testutil::slurp(d3.str(std::string("circuit") + ext)));

  write_file(tmp.str("bad.ini"), "[gen]\ncells = banana\n");
  auto rbad = run("gen --config " + tmp.str("bad.ini") + " --out " + d1.str());
  CHECK(rbad.exit_code == 2);
  CHECK(rbad.output.find("is not") != std::string::npos);

  auto rmiss = run("gen --config " + tmp.str("absent.ini") + " --out " + d1.str());
  CHECK(rmiss.exit_code == 5);
}

TEST_CASE("teach takes iteration cap from config, flag wins") {
  testutil::TempDir tmp("cli-teach");
  std::string aux = gen_circuit(tmp, 24, 4, 19);
  // stop_overflow 0 disables early stopping so the cap is always observable.
  write_file(tmp.str("ft.ini"),
             "[finetune]\n"
             "max_iterations = 3\n"
             "stop_overflow = 0\n"
             "grid_m = 32\n");

  auto r1 = run("teach --config " + tmp.str("ft.ini") + " --circuit " + aux +
                " --out " + tmp.str("t1.pl") + " --seed 19");
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
  CHECK(r1.output.find("teach: iterations=3 ") != std::string::npos);

  auto r2 = run("teach --config " + tmp.str("ft.ini") + " --circuit " + aux +
                " --out " + tmp.str("t2.pl") + " --seed 19 --iterations 5");
  REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
  CHECK(r2.output.find("teach: iterations=5 ") != std::string::npos);

  auto hist = run("teach --config " + tmp.str("ft.ini") + " --circuit " + aux +
                  " --out " + tmp.str("t3.pl") + " --history " + tmp.str("h.jsonl") +
                  " --seed 19");
  REQUIRE(hist.exit_code == 0);
  std::istringstream in(testutil::slurp(tmp.str("h.jsonl")));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json row = json::parse(line);
    CHECK(row.at("iter").get<int>() == rows);
    CHECK(row.at("hpwl").get<double>() > 0.0);
    CHECK(row.at("lambda").get<double>() > 0.0);
    CHECK(row.at("overflow").get<double>() >= 0.0);
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("eval writes the report it prints") {
  testutil::TempDir tmp("cli-eval");
  std::string aux = gen_circuit(tmp, 40, 4, 23);
  write_file(tmp.str("rt.json"), "{\"teach\": 1.5, \"train\": 0.25}");
  auto r = run("eval --circuit " + aux + " --pl " + tmp.str("circuit.pl") +
               " --report " + tmp.str("report.json") + " --runtime-json " +
               tmp.str("rt.json") + " --seed 23");
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("eval: report -> ") != std::string::npos);

  json rep = json::parse(testutil::slurp(tmp.str("report.json")));
  for (const char* k : {"hpwl", "tof", "rc", "density_overflow_ratio", "eta", "omega",
                        "num_flow_edges", "num_pins", "num_cells", "num_nets", "seed",
                        "runtime_breakdown"})
    CHECK_MESSAGE(rep.contains(k), "report lacks " << k);
  CHECK(rep.at("num_cells").get<int>() == 44);
  CHECK(rep.at("seed").get<uint64_t>() == 23);
  CHECK(rep.at("runtime_breakdown").at("teach").get<double>() == doctest::Approx(1.5));

  // The stdout table carries the same hpwl the report does.
  double shown = std::stod(extract(r.output, R"(hpwl\s+([0-9.eE+-]+))"));
  CHECK(testutil::rel_err(shown, rep.at("hpwl").get<double>()) < 1e-6);

  auto bad = run("eval --circuit " + aux + " --pl " + tmp.str("circuit.pl") +
                 " --runtime-json " + tmp.str("circuit.aux"));
  CHECK(bad.exit_code == 2);
}

TEST_CASE("pipeline reproduces the standalone stage sequence byte for byte") {
  testutil::TempDir pipe("cli-pipe"), solo("cli-solo");
  std::string common_ft = " --ft-iterations 8 --ft-grid 32";
  auto rp = run("pipeline --out " + pipe.str() +
                " --cells 30 --terminals 4 --seed 42 --train-epochs 2" + common_ft);
  REQUIRE_MESSAGE(rp.exit_code == 0, rp.output);
  CHECK(rp.output.find("pipeline: done -> " + pipe.str("report.json")) != std::string::npos);
  for (const char* name : {"circuit.aux", "teacher.pl", "model.ckpt", "train_loss.jsonl",
                           "inductive.pl", "final.pl", "history.jsonl", "runtimes.json",
                           "report.json"})
    CHECK_MESSAGE(!testutil::slurp(pipe.str(name)).empty(), name << " missing or empty");

  // Same root seed, stage by stage, into a second directory.
  auto rg = run("gen --out " + solo.str() + " --cells 30 --terminals 4 --seed 42");
  REQUIRE_MESSAGE(rg.exit_code == 0, rg.output);
  std::string aux = solo.str("circuit.aux");
  for (const char* ext : {".aux", ".nodes", ".nets", ".pl"})
    CHECK(testutil::slurp(pipe.str(std::string("circuit") + ext)) ==
          testutil::slurp(solo.str(std::string("circuit") + ext)));

  auto rt = run("teach --circuit " + aux + " --out " + solo.str("teacher.pl") +
                " --seed 42 --iterations 8 --grid 32");
  REQUIRE_MESSAGE(rt.exit_code == 0, rt.output);
  CHECK(testutil::slurp(pipe.str("teacher.pl")) == testutil::slurp(solo.str("teacher.pl")));

  auto rtr = run("train --circuit " + aux + " --teacher " + solo.str("teacher.pl") +
                 " --out " + solo.str("model.ckpt") + " --loss-log " +
                 solo.str("train_loss.jsonl") + " --seed 42 --epochs 2");
  REQUIRE_MESSAGE(rtr.exit_code == 0, rtr.output);
  CHECK(testutil::slurp(pipe.str("model.ckpt")) == testutil::slurp(solo.str("model.ckpt")));
  CHECK(testutil::slurp(pipe.str("train_loss.jsonl")) ==
        testutil::slurp(solo.str("train_loss.jsonl")));

  auto rpl = run("place --circuit " + aux + " --ckpt " + solo.str("model.ckpt") +
                 " --out " + solo.str("inductive.pl"));
  REQUIRE_MESSAGE(rpl.exit_code == 0, rpl.output);
  CHECK(testutil::slurp(pipe.str("inductive.pl")) == testutil::slurp(solo.str("inductive.pl")));

  auto rf = run("finetune --circuit " + aux + " --init " + solo.str("inductive.pl") +
                " --out " + solo.str("final.pl") + " --history " + solo.str("history.jsonl") +
                " --seed 42 --iterations 8 --grid 32");
  REQUIRE_MESSAGE(rf.exit_code == 0, rf.output);
  CHECK(testutil::slurp(pipe.str("final.pl")) == testutil::slurp(solo.str("final.pl")));
  CHECK(testutil::slurp(pipe.str("history.jsonl")) == testutil::slurp(solo.str("history.jsonl")));

  auto re = run("eval --circuit " + aux + " --pl " + solo.str("final.pl") + " --report " +
                solo.str("report.json") + " --seed 42");
  REQUIRE_MESSAGE(re.exit_code == 0, re.output);
  json jp = json::parse(testutil::slurp(pipe.str("report.json")));
  json js = json::parse(testutil::slurp(solo.str("report.json")));
  // Stage wall-clock is the one artifact allowed to differ between the runs.
  jp.erase("runtime_breakdown");
  js.erase("runtime_breakdown");
  CHECK(jp == js);
}
