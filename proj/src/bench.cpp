#include "geomm/bench.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "geomm/rng.hpp"
#include "geomm/search.hpp"

namespace geomm {

void WorkloadSpec::validate() const {
  if (query_count < 1)
    throw std::invalid_argument("workload: query_count must be >= 1");
  if (k < 1) throw std::invalid_argument("workload: k must be >= 1");
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::invalid_argument("workload: mu must lie in [0, 1]");
}

const char* bench_method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::GmrKgmcms: return "gmrtree-kgmcms";
    case BenchMethod::GmrExact: return "gmrtree-exact";
    case BenchMethod::RtreePostfilter: return "rtree-postfilter";
    case BenchMethod::LinearScan: return "linear-scan";
  }
  return "?";
}

BenchMethod parse_bench_method(const std::string& name) {
  for (BenchMethod m : {BenchMethod::GmrKgmcms, BenchMethod::GmrExact,
                        BenchMethod::RtreePostfilter, BenchMethod::LinearScan})
    if (name == bench_method_name(m)) return m;
  throw std::invalid_argument("unknown benchmark method '" + name + "'");
}

namespace {

std::size_t object_class(const GeoMultimediaObject& obj) {
  if (obj.label) return static_cast<std::size_t>(*obj.label);
  return argmax_class(*obj.semantic);
}

struct QueryRun {
  std::vector<ScoredResult> results;
  SearchStats stats;
};

QueryRun run_method(BenchMethod method, const GmrTree& tree,
                    const Dataset& index_data, const SemanticSpaceModel& space,
                    const Query& q) {
  switch (method) {
    case BenchMethod::GmrKgmcms: {
      auto r = kgmcms(tree, space, q);
      return {std::move(r.results), r.stats};
    }
    case BenchMethod::GmrExact: {
      auto r = exact_top_k(tree, space, q);
      return {std::move(r.results), r.stats};
    }
    case BenchMethod::RtreePostfilter: {
      auto r = kgmcms(tree, space, q, SearchOptions{false});
      return {std::move(r.results), r.stats};
    }
    case BenchMethod::LinearScan: {
      BruteForceOptions opts;
      opts.mode = BruteForceMode::ExactScore;
      opts.delta_max = DeltaMaxMode::RootCorners;
      const auto start = std::chrono::steady_clock::now();
      auto results = brute_force(index_data, space, q, opts);
      QueryRun run{std::move(results), {}};
      run.stats.objects_scored = index_data.objects.size();
      run.stats.elapsed = std::chrono::steady_clock::now() - start;
      return run;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

BenchReport run_benchmark(const Dataset& index_data, const Dataset& training,
                          const SemanticSpaceModel& space,
                          const GmrTreeParams& tree_params,
                          const WorkloadSpec& workload,
                          const std::vector<BenchMethod>& methods) {
  workload.validate();
  if (index_data.objects.empty())
    throw std::invalid_argument("run_benchmark: empty index dataset");
  for (const auto& o : index_data.objects)
    if (!o.semantic)
      throw std::invalid_argument("run_benchmark: index dataset not embedded");

  std::vector<const GeoMultimediaObject*> text_sources;
  for (const auto& o : training.objects)
    if (o.feature.modality == Modality::Text) text_sources.push_back(&o);
  if (text_sources.empty())
    throw std::invalid_argument("run_benchmark: training split has no text records");

  const GmrTree tree = GmrTree::bulk_load(index_data, tree_params);

  // Fixed query workload: locations come from indexed objects, text
  // features from training text records.
  DetRng rng(workload.seed);
  std::vector<Query> queries;
  queries.reserve(workload.query_count);
  for (std::size_t i = 0; i < workload.query_count; ++i) {
    Query q;
    q.location =
        index_data.objects[rng.bounded(index_data.objects.size())].location;
    q.text_feature = text_sources[rng.bounded(text_sources.size())]->feature;
    q.k = workload.k;
    q.mu = workload.mu;
    queries.push_back(std::move(q));
  }

  // Oracle answers, computed once (untimed).
  BruteForceOptions oracle_opts;
  oracle_opts.mode = BruteForceMode::ExactScore;
  oracle_opts.delta_max = DeltaMaxMode::RootCorners;
  std::vector<std::vector<ScoredResult>> oracle;
  oracle.reserve(queries.size());
  for (const auto& q : queries)
    oracle.push_back(brute_force(index_data, space, q, oracle_opts));

  BenchReport report;
  report.dataset_size = index_data.objects.size();
  report.class_count = index_data.class_count;
  report.workload = workload;
  report.ground_truth_note =
      "ground truth per query = exact-score linear scan (corner-bound "
      "delta_max); per-class correctness uses the oracle top-1 object's class";

  for (BenchMethod method : methods) {
    MethodReport mr;
    mr.method = method;
    mr.name = bench_method_name(method);
    mr.confusion.assign(report.class_count * report.class_count, 0);
    std::vector<std::size_t> per_class(report.class_count, 0);

    std::vector<double> times_ms;
    times_ms.reserve(queries.size());
    double recall_sum = 0.0, precision_sum = 0.0;
    std::size_t divergent = 0;

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const Query& q = queries[qi];
      run_method(method, tree, index_data, space, q);  // warm-up
      QueryRun run = run_method(method, tree, index_data, space, q);

      times_ms.push_back(run.stats.elapsed.count() * 1e3);
      mr.mean_nodes_visited += static_cast<double>(run.stats.nodes_visited);
      mr.mean_objects_scored += static_cast<double>(run.stats.objects_scored);

      std::set<std::int64_t> got, want;
      for (const auto& r : run.results) got.insert(r.object_id);
      for (const auto& r : oracle[qi]) want.insert(r.object_id);
      std::size_t hit = 0;
      for (std::int64_t id : got)
        if (want.count(id)) ++hit;
      recall_sum += want.empty() ? 1.0
                                 : static_cast<double>(hit) /
                                       static_cast<double>(want.size());
      precision_sum += got.empty() ? 0.0
                                   : static_cast<double>(hit) /
                                         static_cast<double>(got.size());
      if (got != want) ++divergent;

      if (!run.results.empty() && !oracle[qi].empty()) {
        const auto* want_obj = tree.find_object(oracle[qi].front().object_id);
        const auto* got_obj = tree.find_object(run.results.front().object_id);
        const std::size_t row = object_class(*want_obj);
        const std::size_t col = object_class(*got_obj);
        ++mr.confusion[row * report.class_count + col];
        ++per_class[row];
        ++mr.confusion_queries;
      }
    }

    const double n = static_cast<double>(queries.size());
    std::sort(times_ms.begin(), times_ms.end());
    double mean = 0.0;
    for (double t : times_ms) mean += t;
    mr.mean_ms = mean / n;
    mr.median_ms = times_ms.size() % 2 == 1
                       ? times_ms[times_ms.size() / 2]
                       : 0.5 * (times_ms[times_ms.size() / 2 - 1] +
                                times_ms[times_ms.size() / 2]);
    mr.mean_nodes_visited /= n;
    mr.mean_objects_scored /= n;
    mr.recall = recall_sum / n;
    mr.precision = precision_sum / n;
    mr.divergence_rate = static_cast<double>(divergent) / n;

    report.methods.push_back(std::move(mr));
    report.per_class_query_counts.push_back(std::move(per_class));
  }

  return report;
}

void print_report_table(const BenchReport& report, std::ostream& os) {
  os << "# benchmark: " << report.dataset_size << " objects, "
     << report.workload.query_count << " queries, k=" << report.workload.k
     << ", mu=" << report.workload.mu << ", seed=" << report.workload.seed
     << "\n";
  os << "# " << report.ground_truth_note << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %10s %10s %12s %14s %8s %9s %10s\n",
                "method", "mean_ms", "median_ms", "nodes_mean",
                "objects_mean", "recall", "precision", "divergence");
  os << line;
  for (const auto& m : report.methods) {
    std::snprintf(line, sizeof(line),
                  "%-18s %10.3f %10.3f %12.1f %14.1f %8.3f %9.3f %10.3f\n",
                  m.name.c_str(), m.mean_ms, m.median_ms, m.mean_nodes_visited,
                  m.mean_objects_scored, m.recall, m.precision,
                  m.divergence_rate);
    os << line;
  }
}

std::string report_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["dataset_size"] = report.dataset_size;
  j["class_count"] = report.class_count;
  j["workload"] = {{"query_count", report.workload.query_count},
                   {"k", report.workload.k},
                   {"mu", report.workload.mu},
                   {"seed", report.workload.seed}};
  j["ground_truth_note"] = report.ground_truth_note;
  j["methods"] = nlohmann::json::array();
  for (std::size_t i = 0; i < report.methods.size(); ++i) {
    const auto& m = report.methods[i];
    nlohmann::json jm;
    jm["name"] = m.name;
    // Timings live under their own key so fixed-seed runs stay
    // bit-comparable once this subobject is dropped.
    jm["timings"] = {{"mean_ms", m.mean_ms}, {"median_ms", m.median_ms}};
    jm["mean_nodes_visited"] = m.mean_nodes_visited;
    jm["mean_objects_scored"] = m.mean_objects_scored;
    jm["recall"] = m.recall;
    jm["precision"] = m.precision;
    jm["divergence_rate"] = m.divergence_rate;
    jm["confusion_queries"] = m.confusion_queries;
    jm["confusion"] = m.confusion;
    jm["per_class_query_counts"] = report.per_class_query_counts[i];
    j["methods"].push_back(std::move(jm));
  }
  return j.dump(2);
}

}  // namespace geomm
