#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "tokmov/embedding.hpp"
#include "tokmov/similarity.hpp"

using namespace tokmov;
namespace fs = std::filesystem;

#ifndef TOKMOV_CLI
#error "TOKMOV_CLI must point at the CLI binary"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TOKMOV_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct Workspace {
  fs::path dir;
  fs::path corpus;
  fs::path pairs;

  Workspace() {
    dir = fs::temp_directory_path() / "tokmov_cli_test";
    fs::create_directories(dir);
    corpus = dir / "corpus.jsonl";
    pairs = dir / "pairs.tsv";

    std::mt19937_64 rng(77);
    EmbeddingCorpus c;
    for (int i = 0; i < 4; ++i)
      c.insert(oracles::random_sentence(rng, 3 + i % 2, 4, "s" + std::to_string(i)));
    write_corpus(c, corpus, CorpusFormat::JSONL);

    std::ofstream out(pairs);
    out << "p0\ts0\ts0\t5.0\n";
    out << "p1\ts1\ts1\t5.0\n";
    out << "p2\ts2\ts3\t1.0\n";
  }
};

}  // namespace

TEST_CASE("score subcommand writes similarities and self pairs score 1") {
  Workspace ws;
  const auto out = ws.dir / "scores.tsv";
  REQUIRE(run_cli("score --corpus " + ws.corpus.string() + " --pairs " + ws.pairs.string() +
                  " --method rcmd --out " + out.string()) == 0);
  std::ifstream in(out);
  std::string id, s1, s2;
  double score;
  in >> id >> s1 >> s2 >> score;
  CHECK(id == "p0");
  CHECK(score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("score output matches the in-process computation") {
  Workspace ws;
  const auto out = ws.dir / "scores2.tsv";
  REQUIRE(run_cli("score --corpus " + ws.corpus.string() + " --pairs " + ws.pairs.string() +
                  " --method rcmd1 --out " + out.string()) == 0);
  const auto corpus = load_corpus(ws.corpus, CorpusFormat::JSONL);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);  // p0
  std::getline(in, line);  // p1
  std::getline(in, line);  // p2: s2 vs s3
  std::istringstream ss(line);
  std::string id, s1, s2;
  double score;
  ss >> id >> s1 >> s2 >> score;
  CHECK(score ==
        doctest::Approx(sim_rcmd1(corpus.at("s2"), corpus.at("s3")).value).epsilon(1e-9));
}

TEST_CASE("emd guard failure exits with code 2") {
  Workspace ws;
  // Two 70-token sentences: 70*70 > 4096.
  std::mt19937_64 rng(78);
  EmbeddingCorpus c;
  c.insert(oracles::random_sentence(rng, 70, 3, "big1"));
  c.insert(oracles::random_sentence(rng, 70, 3, "big2"));
  const auto big_corpus = ws.dir / "big.jsonl";
  write_corpus(c, big_corpus, CorpusFormat::JSONL);
  const auto big_pairs = ws.dir / "big_pairs.tsv";
  std::ofstream(big_pairs) << "p0\tbig1\tbig2\n";
  CHECK(run_cli("score --corpus " + big_corpus.string() + " --pairs " + big_pairs.string() +
                " --method emd") == 2);
}

TEST_CASE("missing required flag is a usage error") {
  Workspace ws;
  CHECK(run_cli("align --corpus " + ws.corpus.string() + " --pairs " + ws.pairs.string()) == 2);
  CHECK(run_cli("nonsense") == 2);
}

TEST_CASE("align subcommand reports perfect self alignment") {
  Workspace ws;
  const auto chunks = ws.dir / "chunks.jsonl";
  {
    // s0 has 3 tokens; singleton chunks, identity gold.
    std::ofstream out(chunks);
    out << R"({"id":"p0","chunks1":[[0,1],[1,2],[2,3]],"chunks2":[[0,1],[1,2],[2,3]],)"
        << R"("gold":[[0,0],[1,1],[2,2]]})" << '\n';
  }
  const auto self_pairs = ws.dir / "self.tsv";
  std::ofstream(self_pairs) << "p0\ts0\ts0\n";
  const auto out = ws.dir / "align.json";
  REQUIRE(run_cli("align --corpus " + ws.corpus.string() + " --pairs " + self_pairs.string() +
                  " --chunks " + chunks.string() + " --method rcmd --out " + out.string()) == 0);
  std::ifstream in(out);
  const auto json = nlohmann::json::parse(in);
  CHECK(json.at("mean_f1").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("heatmap subcommand emits an L1 x L2 CSV") {
  Workspace ws;
  const auto out = ws.dir / "heat.csv";
  REQUIRE(run_cli("heatmap --corpus " + ws.corpus.string() +
                  " --sid1 s0 --sid2 s1 --method avg --out " + out.string()) == 0);
  std::ifstream in(out);
  std::string line;
  int rows = 0;
  int cols = 0;
  while (std::getline(in, line)) {
    ++rows;
    cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  }
  CHECK(rows == 3);
  CHECK(cols == 4);
}

TEST_CASE("train subcommand is deterministic under a fixed seed") {
  Workspace ws;
  const auto t1 = ws.dir / "trace1.csv";
  const auto t2 = ws.dir / "trace2.csv";
  const std::string args = " --steps 3 --batch-size 4 --seed 9 --out ";
  REQUIRE(run_cli("train" + args + t1.string()) == 0);
  REQUIRE(run_cli("train" + args + t2.string()) == 0);
  std::ifstream a(t1), b(t2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("step,loss,mean_pos_sim,alignment_acc") == 0);
}

TEST_CASE("train with zero steps writes an empty trace and a checkpoint") {
  Workspace ws;
  const auto trace = ws.dir / "trace0.csv";
  const auto ckpt = ws.dir / "model.tmv";
  REQUIRE(run_cli("train --steps 0 --seed 1 --out " + trace.string() + " --checkpoint " +
                  ckpt.string()) == 0);
  const auto model = load_corpus(ckpt, CorpusFormat::BINARY);
  CHECK(model.size() == 50);  // default vocabulary
  CHECK(model.dim == 16);
}

TEST_CASE("bench subcommand writes the report CSV") {
  Workspace ws;
  const auto out = ws.dir / "bench.csv";
  REQUIRE(run_cli("bench --methods avg,rcmd_sparse --lengths 4,8 --pairs 8 --repeats 2 "
                  "--dim 4 --out " +
                  out.string()) == 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("method,pairs,seq_len") == 0);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);
}
