// geomm: geo-multimedia cross-modal kNN search engine CLI.
//
// Subcommands: synth, ingest, train, embed, build, query, bench.
// Relative paths resolve under $GEOMM_DATA_DIR when that variable is set.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geomm/bench.hpp"
#include "geomm/cosmat.hpp"
#include "geomm/dataio.hpp"
#include "geomm/gmrtree.hpp"
#include "geomm/search.hpp"

namespace {

using namespace geomm;

std::string resolve_path(const std::string& path) {
  if (path.empty()) return path;
  const char* base = std::getenv("GEOMM_DATA_DIR");
  if (!base || *base == '\0') return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base) / p).string();
}

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(',', start);
    if (pos == std::string::npos) pos = text.size();
    const std::string tok = text.substr(start, pos - start);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw std::runtime_error("bad number in vector: '" + tok + "'");
    out.push_back(v);
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open vocabulary: " + path);
  std::vector<std::string> vocab;
  std::string word;
  while (std::getline(is, word))
    if (!word.empty()) vocab.push_back(word);
  return vocab;
}

void embed_in_place(Dataset& ds, const SemanticSpaceModel& space) {
  for (auto& o : ds.objects)
    o.semantic = o.feature.modality == Modality::Text
                     ? embed_text(space, o.feature)
                     : embed_image(space, o.feature);
}

int cmd_synth(const std::string& out_train, const std::string& out_index,
              const SynthSpec& spec) {
  const auto result = synthesize(spec);
  export_dataset(result.training, resolve_path(out_train));
  export_dataset(result.indexing, resolve_path(out_index));
  std::cout << "wrote " << result.training.objects.size()
            << " training records to " << out_train << "\n"
            << "wrote " << result.indexing.objects.size()
            << " index objects to " << out_index << "\n";
  return 0;
}

int cmd_ingest(const std::string& in, const std::string& out) {
  const auto ds = ingest(resolve_path(in));
  std::cout << in << ": " << ds.objects.size() << " objects, dT=" << ds.text_dim
            << " dI=" << ds.image_dim << " classes=" << ds.class_count
            << ", valid\n";
  if (!out.empty()) {
    export_dataset(ds, resolve_path(out));
    std::cout << "re-exported to " << out << "\n";
  }
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& out,
              CosmatOptions opts) {
  const auto training = ingest(resolve_path(train_path));
  const auto paired = paired_training_data(training);
  if (opts.gamma == 0 ||
      opts.gamma > std::min(training.text_dim, training.image_dim))
    throw std::runtime_error("gamma must lie in [1, min(dT, dI)]");
  const auto space = fit_semantic_space(paired.text, paired.image,
                                        paired.labels, training.class_count,
                                        opts);
  save_model(space, resolve_path(out));
  std::cout << "trained semantic space: gamma=" << space.corr_proj.gamma
            << " classes=" << space.class_count()
            << " leading correlation=" << space.corr_proj.correlations.front()
            << "\nsaved model to " << out << "\n";
  return 0;
}

int cmd_embed(const std::string& model_path, const std::string& in,
              const std::string& out) {
  const auto space = load_model(resolve_path(model_path));
  auto ds = ingest(resolve_path(in));
  embed_in_place(ds, space);
  export_dataset(ds, resolve_path(out));
  std::cout << "embedded " << ds.objects.size() << " objects into " << out
            << "\n";
  return 0;
}

int cmd_build(const std::string& model_path, const std::string& in,
              const std::string& out, GmrTreeParams params, double tau_flag,
              const std::string& method) {
  auto ds = ingest(resolve_path(in));
  params.sig_threshold = tau_flag > 0.0
                             ? tau_flag
                             : default_signature_threshold(ds.class_count);

  bool needs_embedding = false;
  for (const auto& o : ds.objects)
    if (!o.semantic) {
      needs_embedding = true;
      break;
    }
  if (needs_embedding) {
    if (model_path.empty())
      throw std::runtime_error(
          "dataset has no semantic vectors; pass --model to embed during build");
    const auto space = load_model(resolve_path(model_path));
    embed_in_place(ds, space);
  }

  GmrTree tree(params);
  if (method == "insert") {
    for (const auto& o : ds.objects) tree.insert(o);
  } else if (method == "bulk") {
    tree = GmrTree::bulk_load(ds, params);
  } else {
    throw std::runtime_error("--method must be bulk or insert");
  }
  const auto violations = tree.audit();
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "audit: " << v << "\n";
    throw std::runtime_error("freshly built index failed its audit");
  }
  tree.save(resolve_path(out));
  std::cout << "indexed " << tree.size() << " objects (" << method
            << ", fanout " << params.fanout_min << ".." << params.fanout_max
            << ", signature " << params.sig_length << " bits, tau "
            << params.sig_threshold << ")\nsaved index to " << out << "\n";
  return 0;
}

int cmd_query(const std::string& index_path, const std::string& model_path,
              double x, double y, int k, double mu, const std::string& text,
              const std::string& text_words, const std::string& vocab_path,
              const std::string& method) {
  const auto tree = GmrTree::load(resolve_path(index_path));
  const auto space = load_model(resolve_path(model_path));

  Query q;
  q.location = {x, y};
  q.k = k;
  q.mu = mu;
  if (!text.empty()) {
    q.text_feature = {Modality::Text, parse_csv_doubles(text)};
  } else if (!text_words.empty()) {
    if (vocab_path.empty())
      throw std::runtime_error("--text-words requires --vocab");
    q.text_feature =
        toy_text_featurizer(text_words, read_vocab(resolve_path(vocab_path)));
    bool all_zero = true;
    for (double v : q.text_feature.values) all_zero = all_zero && v == 0.0;
    if (all_zero)
      throw std::runtime_error(
          "query text contains no vocabulary words; cannot embed it");
  } else {
    throw std::runtime_error("pass --text or --text-words");
  }

  SearchResult result;
  if (method == "kgmcms") {
    result = kgmcms(tree, space, q);
  } else if (method == "exact") {
    result = exact_top_k(tree, space, q);
  } else if (method == "rtree-postfilter") {
    result = kgmcms(tree, space, q, SearchOptions{false});
  } else {
    throw std::runtime_error("unknown query method '" + method + "'");
  }

  std::printf("%4s %10s %12s %10s %11s %10s\n", "rank", "id", "score", "dist",
              "proximity", "similarity");
  for (std::size_t i = 0; i < result.results.size(); ++i) {
    const auto& r = result.results[i];
    std::printf("%4zu %10lld %12.8f %10.6f %11.8f %10.8f\n", i + 1,
                static_cast<long long>(r.object_id), r.score, r.distance,
                r.distance_proximity, r.similarity);
  }
  std::printf(
      "# %zu results%s; nodes visited %zu, objects scored %zu, subtrees "
      "pruned %zu, %.3f ms\n",
      result.results.size(), result.stats.truncated ? " (truncated)" : "",
      result.stats.nodes_visited, result.stats.objects_scored,
      result.stats.signature_pruned_subtrees,
      result.stats.elapsed.count() * 1e3);
  return 0;
}

int cmd_bench(std::vector<std::size_t> sizes, std::vector<int> ks,
              const std::string& data_path, const std::string& train_path,
              const std::string& model_path, std::size_t queries, double mu,
              std::uint64_t seed, const std::string& methods_csv,
              const std::string& json_path, const SynthSpec& synth_base,
              CosmatOptions train_opts, GmrTreeParams params, double tau_flag) {
  std::vector<BenchMethod> methods;
  {
    std::size_t start = 0;
    while (start <= methods_csv.size()) {
      std::size_t pos = methods_csv.find(',', start);
      if (pos == std::string::npos) pos = methods_csv.size();
      methods.push_back(parse_bench_method(methods_csv.substr(start, pos - start)));
      start = pos + 1;
    }
  }
  if (sizes.empty()) sizes.push_back(synth_base.size);
  if (ks.empty()) ks.push_back(10);

  nlohmann::json all_reports = nlohmann::json::array();
  for (std::size_t size : sizes) {
    Dataset index_data, training;
    SemanticSpaceModel space;
    if (!data_path.empty()) {
      if (train_path.empty() || model_path.empty())
        throw std::runtime_error("--data requires --train and --model");
      index_data = ingest(resolve_path(data_path));
      training = ingest(resolve_path(train_path));
      space = load_model(resolve_path(model_path));
    } else {
      SynthSpec spec = synth_base;
      spec.size = size;
      auto synth = synthesize(spec);
      training = std::move(synth.training);
      index_data = std::move(synth.indexing);
      const auto paired = paired_training_data(training);
      CosmatOptions opts = train_opts;
      if (opts.gamma == 0 ||
          opts.gamma > std::min(training.text_dim, training.image_dim))
        opts.gamma = std::min<std::size_t>(
            16, std::min(training.text_dim, training.image_dim));
      space = fit_semantic_space(paired.text, paired.image, paired.labels,
                                 training.class_count, opts);
    }
    embed_in_place(index_data, space);

    GmrTreeParams tree_params = params;
    tree_params.sig_threshold =
        tau_flag > 0.0 ? tau_flag
                       : default_signature_threshold(index_data.class_count);

    for (int k : ks) {
      WorkloadSpec workload;
      workload.query_count = queries;
      workload.k = k;
      workload.mu = mu;
      workload.seed = seed;
      const auto report = run_benchmark(index_data, training, space,
                                        tree_params, workload, methods);
      print_report_table(report, std::cout);
      std::cout << "\n";
      all_reports.push_back(nlohmann::json::parse(report_to_json(report)));
    }
  }

  if (!json_path.empty()) {
    std::ofstream os(resolve_path(json_path), std::ios::trunc);
    os << all_reports.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write " + json_path);
    std::cout << "wrote machine-readable report to " << json_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geo-multimedia cross-modal kNN search engine"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic datasets");
  SynthSpec synth_spec;
  std::string spatial = "uniform";
  std::string out_train = "train.tsv", out_index = "index.tsv";
  synth->add_option("--n", synth_spec.size, "index split size");
  synth->add_option("--train-pairs", synth_spec.train_pairs,
                    "training pairs (0 = default)");
  synth->add_option("--classes", synth_spec.class_count, "concept classes");
  synth->add_option("--dt", synth_spec.text_dim, "text feature dimension");
  synth->add_option("--di", synth_spec.image_dim, "image feature dimension");
  synth->add_option("--spatial", spatial, "uniform|clustered");
  synth->add_option("--seed", synth_spec.seed, "RNG seed");
  synth->add_option("--separation", synth_spec.class_separation,
                    "class mean spread");
  synth->add_option("--noise", synth_spec.noise_sigma, "within-class noise");
  synth->add_option("--out-train", out_train, "training split output");
  synth->add_option("--out-index", out_index, "index split output");

  // ingest
  auto* ing = app.add_subcommand("ingest", "validate (and re-export) a dataset");
  std::string ingest_in, ingest_out;
  ing->add_option("--in", ingest_in, "input dataset")->required();
  ing->add_option("--out", ingest_out, "optional canonical re-export");

  // train
  auto* train = app.add_subcommand("train", "fit the semantic space model");
  std::string train_in, train_out = "model.bin";
  CosmatOptions cosmat_opts;
  cosmat_opts.gamma = 16;
  train->add_option("--train", train_in, "training split (alternating T,I records)")
      ->required();
  train->add_option("--gamma", cosmat_opts.gamma, "projection dimension");
  train->add_option("--ridge", cosmat_opts.ridge,
                    "covariance ridge (negative = auto per modality)");
  train->add_option("--l2", cosmat_opts.logs.l2, "logistic L2 strength");
  train->add_option("--max-iters", cosmat_opts.logs.max_iters,
                    "logistic max iterations");
  train->add_option("--tol", cosmat_opts.logs.tol,
                    "logistic gradient stopping tolerance");
  train->add_option("--out", train_out, "model output path");

  // embed
  auto* emb = app.add_subcommand("embed", "attach semantic vectors to a dataset");
  std::string embed_model, embed_in, embed_out;
  emb->add_option("--model", embed_model, "semantic space model")->required();
  emb->add_option("--in", embed_in, "input dataset")->required();
  emb->add_option("--out", embed_out, "output dataset")->required();

  // build
  auto* build = app.add_subcommand("build", "construct and persist a GMR-Tree");
  std::string build_model, build_in, build_out = "index.gmr";
  std::string build_method = "bulk";
  GmrTreeParams build_params;
  double build_tau = -1.0;
  build->add_option("--model", build_model, "model (to embed when needed)");
  build->add_option("--in", build_in, "dataset to index")->required();
  build->add_option("--out", build_out, "index output path");
  build->add_option("--ell", build_params.sig_length, "signature bits");
  build->add_option("--tau", build_tau,
                    "signature threshold (default 2/classes)");
  build->add_option("--fanout-min", build_params.fanout_min, "min node fanout");
  build->add_option("--fanout-max", build_params.fanout_max, "max node fanout");
  build->add_option("--method", build_method, "bulk|insert");

  // query
  auto* query = app.add_subcommand("query", "run one kNN text-to-image query");
  std::string q_index, q_model, q_text, q_words, q_vocab, q_method = "kgmcms";
  double q_x = 0.0, q_y = 0.0, q_mu = 0.5;
  int q_k = 10;
  query->add_option("--index", q_index, "GMR-Tree index file")->required();
  query->add_option("--model", q_model, "semantic space model")->required();
  query->add_option("--x", q_x, "query longitude coordinate")->required();
  query->add_option("--y", q_y, "query latitude coordinate")->required();
  query->add_option("--k", q_k, "result count");
  query->add_option("--mu", q_mu, "distance/similarity balance");
  query->add_option("--text", q_text, "raw text feature (comma-separated)");
  query->add_option("--text-words", q_words, "free text for the toy featurizer");
  query->add_option("--vocab", q_vocab, "vocabulary file (one word per line)");
  query->add_option("--method", q_method, "kgmcms|exact|rtree-postfilter");

  // bench
  auto* bench = app.add_subcommand("bench", "run the benchmark workload");
  std::vector<std::size_t> bench_sizes;
  std::vector<int> bench_ks;
  std::string bench_data, bench_train, bench_model;
  std::string bench_methods =
      "gmrtree-kgmcms,gmrtree-exact,rtree-postfilter,linear-scan";
  std::string bench_json;
  std::size_t bench_queries = 100;
  double bench_mu = 0.5;
  std::uint64_t bench_seed = 7;
  SynthSpec bench_synth;
  CosmatOptions bench_train_opts;
  bench_train_opts.gamma = 0;  // auto
  GmrTreeParams bench_params;
  double bench_tau = -1.0;
  bench->add_option("--n", bench_sizes,
                    "dataset size(s) to synthesize and sweep");
  bench->add_option("--k", bench_ks, "result count(s) to sweep");
  bench->add_option("--data", bench_data, "pre-built index dataset (skips synth)");
  bench->add_option("--train", bench_train, "training split for query texts");
  bench->add_option("--model", bench_model, "pre-trained model");
  bench->add_option("--queries", bench_queries, "queries per workload");
  bench->add_option("--mu", bench_mu, "score balance");
  bench->add_option("--seed", bench_seed, "workload seed");
  bench->add_option("--methods", bench_methods, "comma-separated method list");
  bench->add_option("--json", bench_json, "machine-readable report path");
  bench->add_option("--classes", bench_synth.class_count, "synthetic classes");
  bench->add_option("--dt", bench_synth.text_dim, "synthetic text dimension");
  bench->add_option("--di", bench_synth.image_dim, "synthetic image dimension");
  bench->add_option("--train-pairs", bench_synth.train_pairs, "training pairs");
  bench->add_option("--ell", bench_params.sig_length, "signature bits");
  bench->add_option("--tau", bench_tau, "signature threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (spatial == "clustered")
        synth_spec.spatial = SynthSpec::Spatial::Clustered;
      else if (spatial != "uniform")
        throw std::runtime_error("--spatial must be uniform or clustered");
      return cmd_synth(out_train, out_index, synth_spec);
    }
    if (ing->parsed()) return cmd_ingest(ingest_in, ingest_out);
    if (train->parsed()) return cmd_train(train_in, train_out, cosmat_opts);
    if (emb->parsed()) return cmd_embed(embed_model, embed_in, embed_out);
    if (build->parsed())
      return cmd_build(build_model, build_in, build_out, build_params,
                       build_tau, build_method);
    if (query->parsed())
      return cmd_query(q_index, q_model, q_x, q_y, q_k, q_mu, q_text, q_words,
                       q_vocab, q_method);
    if (bench->parsed())
      return cmd_bench(bench_sizes, bench_ks, bench_data, bench_train,
                       bench_model, bench_queries, bench_mu, bench_seed,
                       bench_methods, bench_json, bench_synth,
                       bench_train_opts, bench_params, bench_tau);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
