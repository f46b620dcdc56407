// Command-line front end: score sentence pairs, extract chunk alignments,
// export contribution heatmaps, train the toy encoder, run the benchmark.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokmov/alignment.hpp"
#include "tokmov/contrastive.hpp"
#include "tokmov/embedding.hpp"
#include "tokmov/evaluation.hpp"
#include "tokmov/similarity.hpp"
#include "tokmov/transport.hpp"

namespace {

using namespace tokmov;

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::JSONL;
  if (s == "binary") return CorpusFormat::BINARY;
  throw CLI::ValidationError("--corpus-format", "expected jsonl or binary");
}

SimMethod parse_method(const std::string& s) {
  auto m = sim_method_from_string(s);
  if (!m) throw CLI::ValidationError("--method", "expected avg|rcmd1|rcmd2|rcmd|emd");
  return *m;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error("cannot write '" + path + "'");
  return file;
}

struct ChunkRecord {
  ChunkMap chunks1, chunks2;
  ChunkAlignment gold;
  bool has_gold = false;
};

std::map<std::string, ChunkRecord> load_chunk_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::map<std::string, ChunkRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      ChunkRecord cr;
      const auto spans = [](const nlohmann::json& j) {
        std::vector<std::pair<Eigen::Index, Eigen::Index>> s;
        for (const auto& span : j) s.push_back({span.at(0), span.at(1)});
        return s;
      };
      cr.chunks1 = ChunkMap::from_spans(spans(rec.at("chunks1")));
      cr.chunks2 = ChunkMap::from_spans(spans(rec.at("chunks2")));
      if (rec.contains("gold")) {
        cr.has_gold = true;
        for (const auto& p : rec["gold"])
          cr.gold.pairs.insert({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
      }
      out[rec.at("id").get<std::string>()] = std::move(cr);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Plan + cost pair backing the alignment/heatmap pipelines for one method.
struct PlanCost {
  TransportPlan plan;
  Matrix cost;
};

PlanCost plan_for_method(const TokenMatrix& a, const TokenMatrix& b, SimMethod method) {
  switch (method) {
    case SimMethod::AVG: {
      auto dec = avg_decomposition(a, b);
      return {std::move(dec.plan), std::move(dec.cost)};
    }
    case SimMethod::RCMD1: {
      Matrix cost = cmd_cost(a, b);
      auto r = rcmd1_from_cost(cost);
      return {std::move(r.plan), std::move(cost)};
    }
    case SimMethod::RCMD2: {
      Matrix cost = cmd_cost(a, b);
      auto r = rcmd2_from_cost(cost);
      return {std::move(r.plan), std::move(cost)};
    }
    case SimMethod::RCMD: {
      Matrix cost = cmd_cost(a, b);
      auto plan = rcmd_bidirectional_plan(cost);
      return {std::move(plan), std::move(cost)};
    }
    case SimMethod::EMD: {
      TransportProblem p;
      p.d1 = Vector::Constant(a.length(), 1.0 / static_cast<double>(a.length()));
      p.d2 = Vector::Constant(b.length(), 1.0 / static_cast<double>(b.length()));
      p.cost = cmd_cost(a, b);
      auto r = exact_emd(p);
      return {std::move(r.plan), std::move(p.cost)};
    }
  }
  throw Error("unknown method");
}

int cmd_score(const std::string& corpus_path, const std::string& format,
              const std::string& pairs_path, const std::string& method_name,
              const std::string& out_path) {
  const auto corpus = load_corpus(corpus_path, parse_format(format));
  const auto pairs = load_pairs_tsv(pairs_path);
  const SimMethod method = parse_method(method_name);
  const StsResult res = evaluate_sts(corpus, pairs, method);

  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  out.precision(17);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out << pairs[i].id << '\t' << pairs[i].sid1 << '\t' << pairs[i].sid2 << '\t'
        << res.scores[i] << '\n';
  if (res.spearman_gold)
    out << "# spearman\t" << *res.spearman_gold << '\n';
  else if (!pairs.empty() && pairs[0].gold_score)
    out << "# spearman\tundefined\n";
  return 0;
}

int cmd_align(const std::string& corpus_path, const std::string& format,
              const std::string& pairs_path, const std::string& chunks_path,
              const std::string& method_name, const std::string& variant,
              const std::string& out_path) {
  const auto corpus = load_corpus(corpus_path, parse_format(format));
  const auto pairs = load_pairs_tsv(pairs_path);
  const auto chunks = load_chunk_file(chunks_path);
  const SimMethod method = parse_method(method_name);
  const ChunkQuantity quantity =
      variant == "m" ? ChunkQuantity::TRANSPORT_COST : ChunkQuantity::CONTRIBUTION;

  nlohmann::json result = nlohmann::json::array();
  double f1_sum = 0.0;
  std::size_t f1_count = 0;
  for (const auto& p : pairs) {
    auto it = chunks.find(p.id);
    if (it == chunks.end()) throw ParseError("no chunk record for pair id '" + p.id + "'");
    const TokenMatrix& a = corpus.at(p.sid1);
    const TokenMatrix& b = corpus.at(p.sid2);
    const PlanCost pc = plan_for_method(a, b, method);
    const Matrix c = chunk_scores(pc.plan, pc.cost, it->second.chunks1, it->second.chunks2,
                                  quantity);
    const ChunkAlignment pred = extract_alignment(c);

    nlohmann::json rec;
    rec["id"] = p.id;
    nlohmann::json aligned = nlohmann::json::array();
    std::size_t k = 0;
    for (const auto& cp : pred.pairs) {
      aligned.push_back({{"i", cp.i}, {"j", cp.j}, {"confidence", pred.confidences[k++]}});
    }
    rec["alignment"] = aligned;
    if (it->second.has_gold) {
      const F1Result f1 = alignment_f1(pred, it->second.gold);
      rec["precision"] = f1.precision;
      rec["recall"] = f1.recall;
      rec["f1"] = f1.f1;
      f1_sum += f1.f1;
      ++f1_count;
    }
    result.push_back(std::move(rec));
  }
  nlohmann::json top;
  top["pairs"] = result;
  if (f1_count > 0) top["mean_f1"] = f1_sum / static_cast<double>(f1_count);

  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  out << top.dump(2) << '\n';
  return 0;
}

int cmd_heatmap(const std::string& corpus_path, const std::string& format,
                const std::string& sid1, const std::string& sid2,
                const std::string& method_name, const std::string& out_path) {
  const auto corpus = load_corpus(corpus_path, parse_format(format));
  const SimMethod method = parse_method(method_name);
  const TokenMatrix& a = corpus.at(sid1);
  const TokenMatrix& b = corpus.at(sid2);
  const PlanCost pc = plan_for_method(a, b, method);
  const Matrix contrib = token_contributions(pc.plan, pc.cost);
  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  write_matrix_csv(contrib, out);
  return 0;
}

int cmd_train(int steps, int batch_size, double lr, double tau, std::uint64_t seed,
              int groups, int group_size, int dim, const std::string& trace_path,
              const std::string& checkpoint_path) {
  SynonymPairGenerator gen(groups, group_size, 3, std::min(5, groups / 2), seed);
  ToyModel model = ToyModel::random_init(groups * group_size, dim, seed + 1);
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch_size = batch_size;
  cfg.lr = lr;
  cfg.tau = tau;
  cfg.seed = seed;
  const TrainTrace trace = train_toy(gen, model, cfg);

  std::ofstream file;
  std::ostream& out = open_out(file, trace_path);
  write_trace_csv(trace, out);

  if (!checkpoint_path.empty()) {
    // Checkpoint reuses the corpus container: one single-token sentence per type.
    EmbeddingCorpus ckpt;
    for (Eigen::Index v = 0; v < model.table.rows(); ++v) {
      TokenMatrix m;
      m.sentence_id = model.vocabulary[static_cast<std::size_t>(v)];
      m.tokens = {m.sentence_id};
      m.vectors = model.table.row(v);
      ckpt.insert(std::move(m));
    }
    write_corpus(ckpt, checkpoint_path, CorpusFormat::BINARY);
  }
  return 0;
}

int cmd_bench(const std::vector<std::string>& methods, const std::vector<int>& lengths,
              int pairs, int repeats, int dim, std::uint64_t seed,
              const std::string& out_path) {
  BenchConfig cfg;
  if (!methods.empty()) cfg.methods = methods;
  if (!lengths.empty()) cfg.seq_lens = lengths;
  cfg.pairs = pairs;
  cfg.repeats = repeats;
  cfg.dim = dim;
  cfg.seed = seed;
  const BenchReport report = bench(cfg);
  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  write_bench_csv(report, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport sentence distances over token embeddings"};
  app.require_subcommand(1);

  std::string corpus_path, corpus_format = "jsonl", pairs_path, chunks_path;
  std::string method = "rcmd", out_path, variant = "one-minus-m";
  std::string sid1, sid2, checkpoint_path;
  int steps = 500, batch_size = 8, groups = 10, group_size = 5, dim = 16;
  int bench_pairs = 512, repeats = 10;
  double lr = 5e-5, tau = 0.05;
  std::uint64_t seed = 0;
  std::vector<std::string> bench_methods;
  std::vector<int> bench_lengths;

  auto* score = app.add_subcommand("score", "Score sentence pairs from a TSV pair file");
  score->add_option("--corpus", corpus_path)->required();
  score->add_option("--corpus-format", corpus_format);
  score->add_option("--pairs", pairs_path)->required();
  score->add_option("--method", method);
  score->add_option("--out", out_path);

  auto* align = app.add_subcommand("align", "Extract chunk alignments against gold chunking");
  align->add_option("--corpus", corpus_path)->required();
  align->add_option("--corpus-format", corpus_format);
  align->add_option("--pairs", pairs_path)->required();
  align->add_option("--chunks", chunks_path)->required();
  align->add_option("--method", method);
  align->add_option("--contrib-variant", variant)
      ->check(CLI::IsMember({"one-minus-m", "m"}));
  align->add_option("--out", out_path);

  auto* heatmap = app.add_subcommand("heatmap", "Export a token contribution matrix as CSV");
  heatmap->add_option("--corpus", corpus_path)->required();
  heatmap->add_option("--corpus-format", corpus_format);
  heatmap->add_option("--sid1", sid1)->required();
  heatmap->add_option("--sid2", sid2)->required();
  heatmap->add_option("--method", method);
  heatmap->add_option("--out", out_path);

  auto* train = app.add_subcommand("train", "Train the toy encoder on the synonym corpus");
  train->add_option("--steps", steps);
  train->add_option("--batch-size", batch_size);
  train->add_option("--lr", lr);
  train->add_option("--tau", tau);
  train->add_option("--seed", seed);
  train->add_option("--vocab-groups", groups);
  train->add_option("--group-size", group_size);
  train->add_option("--dim", dim);
  train->add_option("--out", out_path);
  train->add_option("--checkpoint", checkpoint_path);

  auto* bench_cmd = app.add_subcommand("bench", "Time similarity prediction per method");
  bench_cmd->add_option("--methods", bench_methods)->delimiter(',');
  bench_cmd->add_option("--lengths", bench_lengths)->delimiter(',');
  bench_cmd->add_option("--pairs", bench_pairs);
  bench_cmd->add_option("--repeats", repeats);
  bench_cmd->add_option("--dim", dim);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (score->parsed())
      return cmd_score(corpus_path, corpus_format, pairs_path, method, out_path);
    if (align->parsed())
      return cmd_align(corpus_path, corpus_format, pairs_path, chunks_path, method, variant,
                       out_path);
    if (heatmap->parsed())
      return cmd_heatmap(corpus_path, corpus_format, sid1, sid2, method, out_path);
    if (train->parsed())
      return cmd_train(steps, batch_size, lr, tau, seed, groups, group_size, dim, out_path,
                       checkpoint_path);
    if (bench_cmd->parsed())
      return cmd_bench(bench_methods, bench_lengths, bench_pairs, repeats, dim, seed, out_path);
  } catch (const ScaleExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
