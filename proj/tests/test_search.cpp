#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "geomm/search.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace geomm;
using testing_helpers::random_embedded_dataset;

namespace {

GmrTreeParams small_params(std::uint32_t ell = 8, double tau = 0.3) {
  GmrTreeParams p;
  p.fanout_min = 2;
  p.fanout_max = 4;
  p.sig_length = ell;
  p.sig_threshold = tau;
  return p;
}

using testing_helpers::random_space;

// Zero logistic weights: every embedding is uniform, so every query
// signature is all-zero under any threshold above 1/classes.
SemanticSpaceModel flat_space(DetRng& rng, std::size_t classes) {
  auto s = random_space(rng, classes);
  s.text_logs_tran.weights = Matrix(classes, s.corr_proj.gamma + 1);
  s.image_logs_tran.weights = Matrix(classes, s.corr_proj.gamma + 1);
  return s;
}

Query make_query(DetRng& rng, int k, double mu) {
  Query q;
  q.location = {rng.uniform(), rng.uniform()};
  q.text_feature = {Modality::Text, {rng.normal(), rng.normal()}};
  q.k = k;
  q.mu = mu;
  return q;
}

BruteForceOptions mirror_options(const GmrTree& tree, BruteForceMode mode) {
  BruteForceOptions opts;
  opts.mode = mode;
  opts.delta_max = DeltaMaxMode::RootCorners;
  opts.sig_length = tree.params().sig_length;
  opts.sig_threshold = tree.params().sig_threshold;
  return opts;
}

void check_same_results(const std::vector<ScoredResult>& got,
                        const std::vector<ScoredResult>& want,
                        double score_tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].object_id == want[i].object_id);
    if (score_tol == 0.0)
      CHECK(got[i].score == want[i].score);
    else
      CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(score_tol));
  }
}

}  // namespace

TEST_CASE("cursor base cases") {
  DetRng rng(1);

  SUBCASE("single object, matching signature") {
    auto ds = random_embedded_dataset(rng, 1, 4);
    auto tree = GmrTree::bulk_load(ds, small_params());
    NearestNeighborCursor cursor(tree, {0.5, 0.5}, Signature::zeros(8));
    const auto first = cursor.next();
    REQUIRE(first.has_value());
    CHECK(*first == 0);
    CHECK_FALSE(cursor.next().has_value());
  }

  SUBCASE("root signature mismatch prunes everything") {
    // All objects concentrated on class 0: root signature has only bit 0.
    std::vector<GeoMultimediaObject> objs;
    for (int i = 0; i < 6; ++i) {
      GeoMultimediaObject o;
      o.id = i;
      o.location = {0.1 * i, 0.2};
      o.feature = {Modality::Image, {0.0, 0.0, 0.0}};
      o.semantic = SemanticVector{{0.9, 0.1 / 3, 0.1 / 3, 0.1 / 3}};
      objs.push_back(std::move(o));
    }
    auto ds = make_dataset(std::move(objs), 2, 3, 4);
    auto tree = GmrTree::bulk_load(ds, small_params());

    Signature query_sig = Signature::zeros(8);
    query_sig.set(3);  // no object carries bit 3
    NearestNeighborCursor cursor(tree, {0.0, 0.0}, query_sig);
    CHECK_FALSE(cursor.next().has_value());
    CHECK(cursor.stats().nodes_visited == 1);
    CHECK(cursor.stats().signature_pruned_subtrees ==
          tree.root()->entries.size());
  }
}

TEST_CASE("cursor emits in ascending (distance, id) order") {
  DetRng rng(2);
  auto ds = random_embedded_dataset(rng, 200, 5);
  // Mix construction paths.
  GmrTree bulk = GmrTree::bulk_load(ds, small_params());
  GmrTree incr(small_params());
  for (const auto& o : ds.objects) incr.insert(o);

  for (const GmrTree* tree : {&bulk, &incr}) {
    const GeoPoint q{rng.uniform(), rng.uniform()};
    NearestNeighborCursor cursor(*tree, q, Signature::zeros(8));

    struct Emitted {
      std::int64_t id;
      double dist;
    };
    std::vector<Emitted> seq;
    while (auto id = cursor.next())
      seq.push_back({*id, cursor.last_distance()});
    REQUIRE(seq.size() == 200);

    // Sort-by-distance oracle.
    std::vector<Emitted> want;
    for (const auto& o : ds.objects)
      want.push_back({o.id, euclidean(q, o.location)});
    std::sort(want.begin(), want.end(), [](const Emitted& a, const Emitted& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.id < b.id;
    });
    for (std::size_t i = 0; i < 200; ++i) {
      CHECK(seq[i].id == want[i].id);
      CHECK(seq[i].dist == want[i].dist);
      if (i) CHECK(seq[i].dist >= seq[i - 1].dist);  // nondecreasing
    }
  }
}

TEST_CASE("kgmcms on a single co-located object") {
  DetRng rng(3);
  auto space = flat_space(rng, 4);

  GeoMultimediaObject o;
  o.id = 9;
  o.location = {0.4, 0.6};
  o.feature = {Modality::Image, {0.1, 0.2, 0.3}};
  o.semantic = SemanticVector{{0.7, 0.1, 0.1, 0.1}};
  auto ds = make_dataset({o}, 2, 3, 4);
  auto tree = GmrTree::bulk_load(ds, small_params());

  Query q;
  q.location = o.location;  // co-located
  q.text_feature = {Modality::Text, {1.0, -1.0}};
  q.k = 1;
  q.mu = 0.3;

  const auto res = kgmcms(tree, space, q);
  REQUIRE(res.results.size() == 1);
  CHECK(res.results[0].object_id == 9);
  CHECK(res.results[0].distance == 0.0);
  CHECK(res.results[0].distance_proximity == 1.0);
  const double sim =
      cosine_similarity(embed_text(space, q.text_feature), *o.semantic);
  CHECK(res.results[0].score ==
        doctest::Approx(0.3 * 1.0 + 0.7 * sim).epsilon(1e-12));
  CHECK_FALSE(res.stats.truncated);
}

TEST_CASE("kgmcms exhaustion returns every match, flagged truncated") {
  DetRng rng(4);
  // Query embeds to class 0 with certainty: huge bias on class 0.
  auto space = flat_space(rng, 4);
  space.text_logs_tran.weights(0, 2) = 500.0;

  std::vector<GeoMultimediaObject> objs;
  for (int i = 0; i < 8; ++i) {
    GeoMultimediaObject o;
    o.id = i;
    o.location = {rng.uniform(), rng.uniform()};
    o.feature = {Modality::Image, {0.0, 0.0, 0.0}};
    // Three objects carry concept 0, five carry concept 1.
    o.semantic = i < 3 ? SemanticVector{{0.85, 0.05, 0.05, 0.05}}
                       : SemanticVector{{0.05, 0.85, 0.05, 0.05}};
    objs.push_back(std::move(o));
  }
  auto ds = make_dataset(std::move(objs), 2, 3, 4);
  auto tree = GmrTree::bulk_load(ds, small_params());

  Query q = make_query(rng, 10, 0.5);
  const auto res = kgmcms(tree, space, q);
  CHECK(res.results.size() == 3);
  CHECK(res.stats.truncated);
  std::set<std::int64_t> ids;
  for (const auto& r : res.results) ids.insert(r.object_id);
  CHECK(ids == std::set<std::int64_t>{0, 1, 2});
  for (std::size_t i = 1; i < res.results.size(); ++i)
    CHECK(res.results[i].score <= res.results[i - 1].score);
}

TEST_CASE("kgmcms equals the paper-order oracle") {
  DetRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 100 + rng.bounded(900);
    const std::size_t classes = 3 + rng.bounded(6);
    auto ds = random_embedded_dataset(rng, n, classes);
    auto space = random_space(rng, classes);
    auto tree = GmrTree::bulk_load(ds, small_params(8, 0.3));
    const Query q = make_query(rng, 10, 0.5);

    const auto got = kgmcms(tree, space, q);
    const auto want =
        brute_force(ds, space, q, mirror_options(tree, BruteForceMode::PaperOrder));
    check_same_results(got.results, want, 1e-9);
  }
}

TEST_CASE("exact search degenerate mu cases") {
  DetRng rng(6);
  auto ds = random_embedded_dataset(rng, 500, 5);
  auto space = random_space(rng, 5);
  auto tree = GmrTree::bulk_load(ds, small_params());

  SUBCASE("mu = 1 reduces to spatial kNN") {
    const Query q = make_query(rng, 12, 1.0);
    const auto got = exact_top_k(tree, space, q);
    std::vector<std::pair<double, std::int64_t>> by_dist;
    for (const auto& o : ds.objects)
      by_dist.push_back({euclidean(q.location, o.location), o.id});
    std::sort(by_dist.begin(), by_dist.end());
    std::set<std::int64_t> want;
    for (int i = 0; i < 12; ++i) want.insert(by_dist[static_cast<std::size_t>(i)].second);
    std::set<std::int64_t> got_ids;
    for (const auto& r : got.results) got_ids.insert(r.object_id);
    CHECK(got_ids == want);
  }

  SUBCASE("mu = 0 reduces to cosine top-k") {
    const Query q = make_query(rng, 12, 0.0);
    const auto query_emb = embed_text(space, q.text_feature);
    const auto got = exact_top_k(tree, space, q);
    std::vector<std::pair<double, std::int64_t>> by_sim;
    for (const auto& o : ds.objects)
      by_sim.push_back({-cosine_similarity(query_emb, *o.semantic), o.id});
    std::sort(by_sim.begin(), by_sim.end());
    std::set<std::int64_t> want;
    for (int i = 0; i < 12; ++i) want.insert(by_sim[static_cast<std::size_t>(i)].second);
    std::set<std::int64_t> got_ids;
    for (const auto& r : got.results) got_ids.insert(r.object_id);
    CHECK(got_ids == want);
  }
}

TEST_CASE("exact search equals the linear-scan oracle") {
  DetRng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 100 + rng.bounded(900);
    const std::size_t classes = 3 + rng.bounded(6);
    auto ds = random_embedded_dataset(rng, n, classes);
    auto space = random_space(rng, classes);
    auto tree = GmrTree::bulk_load(ds, small_params());
    const Query q = make_query(rng, 10, 0.5);

    const auto got = exact_top_k(tree, space, q);
    const auto want =
        brute_force(ds, space, q, mirror_options(tree, BruteForceMode::ExactScore));
    check_same_results(got.results, want, 1e-12);
    CHECK(got.stats.objects_scored < n);  // bounds must prune something
  }
}

TEST_CASE("exact search is admissible for every k on a small instance") {
  DetRng rng(8);
  auto ds = random_embedded_dataset(rng, 40, 4);
  auto space = random_space(rng, 4);
  auto tree = GmrTree::bulk_load(ds, small_params());
  for (int k = 1; k <= 40; ++k) {
    Query q = make_query(rng, k, 0.5);
    const auto got = exact_top_k(tree, space, q);
    const auto want =
        brute_force(ds, space, q, mirror_options(tree, BruteForceMode::ExactScore));
    check_same_results(got.results, want, 1e-12);
  }
}

TEST_CASE("brute force details") {
  DetRng rng(9);

  SUBCASE("k = |O| is a total order by score") {
    auto ds = random_embedded_dataset(rng, 50, 4);
    auto space = random_space(rng, 4);
    Query q = make_query(rng, 50, 0.5);
    BruteForceOptions opts;
    opts.mode = BruteForceMode::ExactScore;
    const auto all = brute_force(ds, space, q, opts);
    REQUIRE(all.size() == 50);
    for (std::size_t i = 1; i < all.size(); ++i)
      CHECK_FALSE(result_order(all[i], all[i - 1]));  // already sorted
  }

  SUBCASE("duplicate location and feature ties break by ascending id") {
    std::vector<GeoMultimediaObject> objs;
    for (int i = 0; i < 6; ++i) {
      GeoMultimediaObject o;
      o.id = 5 - i;  // insert in descending id order on purpose
      o.location = {0.5, 0.5};
      o.feature = {Modality::Image, {1.0, 2.0, 3.0}};
      o.semantic = SemanticVector{{0.4, 0.3, 0.2, 0.1}};
      objs.push_back(std::move(o));
    }
    auto ds = make_dataset(std::move(objs), 2, 3, 4);
    auto space = random_space(rng, 4);
    Query q = make_query(rng, 4, 0.5);
    BruteForceOptions opts;
    opts.mode = BruteForceMode::ExactScore;
    const auto top = brute_force(ds, space, q, opts);
    REQUIRE(top.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(top[i].object_id == static_cast<std::int64_t>(i));
  }

  SUBCASE("top-1 equals an independently recomputed argmax") {
    auto ds = random_embedded_dataset(rng, 500, 5);
    auto space = random_space(rng, 5);
    Query q = make_query(rng, 1, 0.5);
    BruteForceOptions opts;
    opts.mode = BruteForceMode::ExactScore;
    opts.delta_max = DeltaMaxMode::ScanObjects;
    const auto top = brute_force(ds, space, q, opts);

    // Column-style recomputation straight from the definitions.
    const auto emb = embed_text(space, q.text_feature);
    double dmax = 0.0;
    for (const auto& o : ds.objects)
      dmax = std::max(dmax, euclidean(q.location, o.location));
    double best = -1e300;
    std::int64_t best_id = -1;
    for (const auto& o : ds.objects) {
      const double dist = euclidean(q.location, o.location);
      const double score = q.mu * (1.0 - dist / dmax) +
                           (1.0 - q.mu) * cosine_similarity(emb, *o.semantic);
      if (score > best) {
        best = score;
        best_id = o.id;
      }
    }
    REQUIRE(top.size() == 1);
    CHECK(top[0].object_id == best_id);
    CHECK(top[0].score == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("signature pruning never changes results and never costs more") {
  DetRng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 50 + rng.bounded(500);
    const std::size_t classes = 4 + rng.bounded(6);
    auto ds = random_embedded_dataset(rng, n, classes);
    auto space = random_space(rng, classes);
    auto tree = GmrTree::bulk_load(ds, small_params());
    const Query q = make_query(rng, 10, 0.5);

    const auto pruned = kgmcms(tree, space, q, SearchOptions{true});
    const auto filtered = kgmcms(tree, space, q, SearchOptions{false});
    check_same_results(pruned.results, filtered.results, 0.0);
    CHECK(pruned.stats.nodes_visited <= filtered.stats.nodes_visited);
  }
}

TEST_CASE("query validation propagates") {
  DetRng rng(11);
  auto ds = random_embedded_dataset(rng, 10, 4);
  auto space = random_space(rng, 4);
  auto tree = GmrTree::bulk_load(ds, small_params());

  Query q = make_query(rng, 0, 0.5);  // bad k
  CHECK_THROWS_AS(kgmcms(tree, space, q), std::invalid_argument);

  Query q2 = make_query(rng, 3, 0.5);
  q2.text_feature.values.push_back(0.0);  // wrong dimension
  CHECK_THROWS_AS(kgmcms(tree, space, q2), std::invalid_argument);
  CHECK_THROWS_AS(exact_top_k(tree, space, q2), std::invalid_argument);
}
