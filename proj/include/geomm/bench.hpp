#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geomm/cosmat.hpp"
#include "geomm/gmrtree.hpp"
#include "geomm/model.hpp"

namespace geomm {

struct WorkloadSpec {
  std::size_t query_count = 100;
  int k = 10;
  double mu = 0.5;
  std::uint64_t seed = 7;

  void validate() const;  // throws std::invalid_argument
};

enum class BenchMethod {
  GmrKgmcms,        // GMR-Tree, distance-first with signature pruning
  GmrExact,         // GMR-Tree, exact top-k by combined score
  RtreePostfilter,  // plain R-Tree traversal, signature filter at emission
  LinearScan,       // full scan, exact scoring (the oracle's engine)
};

const char* bench_method_name(BenchMethod m);
BenchMethod parse_bench_method(const std::string& name);  // throws on unknown

struct MethodReport {
  BenchMethod method;
  std::string name;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double mean_nodes_visited = 0.0;
  double mean_objects_scored = 0.0;
  double recall = 0.0;     // vs the exact-score oracle, mean over queries
  double precision = 0.0;  // vs the exact-score oracle, mean over queries
  double divergence_rate = 0.0;  // fraction of queries with a different id set
  std::size_t confusion_queries = 0;  // queries included in the confusion matrix
  std::vector<std::size_t> confusion;  // class_count x class_count, row-major
};

struct BenchReport {
  std::size_t dataset_size = 0;
  std::size_t class_count = 0;
  WorkloadSpec workload;
  std::string ground_truth_note;
  std::vector<MethodReport> methods;
  // Oracle top-1 class histogram over confusion-included queries (the row
  // sums of each method's confusion matrix).
  std::vector<std::vector<std::size_t>> per_class_query_counts;  // per method
};

/// Runs the workload over an embedded index dataset. Queries take their
/// locations from random indexed objects and their text features from
/// random text records of the training split. Each method gets one warm-up
/// pass; correctness metrics compare against the exact-score linear oracle
/// with the index's corner-bound delta_max.
BenchReport run_benchmark(const Dataset& index_data, const Dataset& training,
                          const SemanticSpaceModel& space,
                          const GmrTreeParams& tree_params,
                          const WorkloadSpec& workload,
                          const std::vector<BenchMethod>& methods);

void print_report_table(const BenchReport& report, std::ostream& os);
std::string report_to_json(const BenchReport& report);  // timings under "timings"

}  // namespace geomm
