#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "geomm/cosmat.hpp"
#include "geomm/dataio.hpp"
#include "geomm/rng.hpp"

using namespace geomm;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::trunc);
  os << content;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("ingest a well-formed file") {
  const std::string path = temp_path("geomm_ingest_ok.tsv");
  write_file(path,
             "#geomm-dataset\tv=1\tdT=2\tdI=3\tclasses=4\n"
             "0\t0.5\t0.25\tI\t2\t1,2,3\n"
             "1\t-1\t4\tT\t-\t0.5,0.5\n"
             "-\t2\t2\tI\t0\t9,8,7\t0.25,0.25,0.25,0.25\n");
  const auto ds = ingest(path);
  std::filesystem::remove(path);

  REQUIRE(ds.objects.size() == 3);
  CHECK(ds.text_dim == 2);
  CHECK(ds.image_dim == 3);
  CHECK(ds.class_count == 4);
  CHECK(ds.objects[0].label == 2);
  CHECK_FALSE(ds.objects[1].label.has_value());
  CHECK(ds.objects[2].id == 2);  // "-" id assigned by ordinal
  REQUIRE(ds.objects[2].semantic.has_value());
  CHECK(ds.objects[2].semantic->probabilities[1] == 0.25);
  CHECK(validate_dataset(ds).empty());
}

TEST_CASE("ingest failures carry line numbers") {
  SUBCASE("wrong vector arity") {
    const std::string path = temp_path("geomm_ingest_arity.tsv");
    write_file(path,
               "#geomm-dataset\tv=1\tdT=2\tdI=3\tclasses=4\n"
               "0\t0\t0\tI\t-\t1,2,3\n"
               "1\t0\t0\tI\t-\t1,2\n");
    CHECK_THROWS_WITH_AS(ingest(path), doctest::Contains(":3:"),
                         std::runtime_error);
    std::filesystem::remove(path);
  }
  SUBCASE("bad number") {
    const std::string path = temp_path("geomm_ingest_num.tsv");
    write_file(path,
               "#geomm-dataset\tv=1\tdT=2\tdI=3\tclasses=4\n"
               "0\tzero\t0\tI\t-\t1,2,3\n");
    CHECK_THROWS_WITH_AS(ingest(path), doctest::Contains(":2:"),
                         std::runtime_error);
    std::filesystem::remove(path);
  }
  SUBCASE("missing header") {
    const std::string path = temp_path("geomm_ingest_hdr.tsv");
    write_file(path, "0\t0\t0\tI\t-\t1,2,3\n");
    CHECK_THROWS_AS(ingest(path), std::runtime_error);
    std::filesystem::remove(path);
  }
  SUBCASE("duplicate ids are a validation failure") {
    const std::string path = temp_path("geomm_ingest_dup.tsv");
    write_file(path,
               "#geomm-dataset\tv=1\tdT=2\tdI=3\tclasses=4\n"
               "7\t0\t0\tI\t-\t1,2,3\n"
               "7\t1\t1\tI\t-\t1,2,3\n");
    CHECK_THROWS_WITH_AS(ingest(path), doctest::Contains("duplicate"),
                         std::runtime_error);
    std::filesystem::remove(path);
  }
}

TEST_CASE("export then ingest is lossless") {
  SynthSpec spec;
  spec.size = 200;
  spec.train_pairs = 40;
  spec.class_count = 4;
  spec.text_dim = 3;
  spec.image_dim = 5;
  spec.seed = 99;
  const auto synth = synthesize(spec);

  const std::string path = temp_path("geomm_roundtrip.tsv");
  export_dataset(synth.indexing, path);
  const auto back = ingest(path);

  REQUIRE(back.objects.size() == synth.indexing.objects.size());
  CHECK(back.text_dim == synth.indexing.text_dim);
  for (std::size_t i = 0; i < back.objects.size(); ++i) {
    const auto& a = synth.indexing.objects[i];
    const auto& b = back.objects[i];
    CHECK(a.id == b.id);
    CHECK(a.location.x == b.location.x);  // bit-exact through %.17g
    CHECK(a.location.y == b.location.y);
    CHECK(a.feature.modality == b.feature.modality);
    CHECK(a.feature.values == b.feature.values);
    CHECK(a.label == b.label);
  }

  // A second export of the re-ingested data is byte-identical.
  const std::string path2 = temp_path("geomm_roundtrip2.tsv");
  export_dataset(back, path2);
  CHECK(read_file(path) == read_file(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("synthesis is byte-reproducible under a fixed seed") {
  SynthSpec spec;
  spec.size = 150;
  spec.train_pairs = 30;
  spec.class_count = 3;
  spec.text_dim = 4;
  spec.image_dim = 4;
  spec.seed = 1234;

  const auto a = synthesize(spec);
  const auto b = synthesize(spec);
  const std::string pa = temp_path("geomm_synth_a.tsv");
  const std::string pb = temp_path("geomm_synth_b.tsv");
  export_dataset(a.indexing, pa);
  export_dataset(b.indexing, pb);
  CHECK(read_file(pa) == read_file(pb));
  export_dataset(a.training, pa);
  export_dataset(b.training, pb);
  CHECK(read_file(pa) == read_file(pb));
  std::filesystem::remove(pa);
  std::filesystem::remove(pb);

  // Different seed, different data.
  spec.seed = 1235;
  const auto c = synthesize(spec);
  CHECK(c.indexing.objects[0].location.x != a.indexing.objects[0].location.x);
}

TEST_CASE("synthetic labels are balanced and features are learnable") {
  SynthSpec spec;
  spec.size = 400;
  spec.train_pairs = 120;
  spec.class_count = 2;
  spec.text_dim = 6;
  spec.image_dim = 8;
  spec.seed = 5;
  const auto synth = synthesize(spec);

  SUBCASE("balance within 10%") {
    std::vector<std::size_t> counts(2, 0);
    for (const auto& o : synth.indexing.objects)
      ++counts[static_cast<std::size_t>(*o.label)];
    const double expected = 400.0 / 2.0;
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(static_cast<double>(counts[c]) >= 0.9 * expected);
      CHECK(static_cast<double>(counts[c]) <= 1.1 * expected);
    }
  }

  SUBCASE("train-and-evaluate oracle reaches high accuracy") {
    const auto paired = paired_training_data(synth.training);
    CosmatOptions opts;
    opts.gamma = 4;
    opts.logs.max_iters = 500;
    const auto space = fit_semantic_space(paired.text, paired.image,
                                          paired.labels, 2, opts);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < paired.labels.size(); ++i) {
      FeatureVector f{Modality::Text, {}};
      f.values.assign(
          paired.text.data.begin() + static_cast<std::ptrdiff_t>(i * paired.text.cols),
          paired.text.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * paired.text.cols));
      if (static_cast<int>(argmax_class(embed_text(space, f))) == paired.labels[i])
        ++correct;
    }
    CHECK(static_cast<double>(correct) /
              static_cast<double>(paired.labels.size()) >=
          0.95);
  }
}

TEST_CASE("uniform spatial mode passes a chi-square uniformity test") {
  SynthSpec spec;
  spec.size = 5000;
  spec.train_pairs = 100;
  spec.class_count = 5;
  spec.text_dim = 3;
  spec.image_dim = 3;
  spec.seed = 777;
  spec.spatial = SynthSpec::Spatial::Uniform;
  const auto synth = synthesize(spec);

  std::vector<std::size_t> cells(100, 0);
  for (const auto& o : synth.indexing.objects) {
    const auto gx = std::min<std::size_t>(9, static_cast<std::size_t>(o.location.x * 10));
    const auto gy = std::min<std::size_t>(9, static_cast<std::size_t>(o.location.y * 10));
    ++cells[gx * 10 + gy];
  }
  const double expected = 5000.0 / 100.0;
  double chi2 = 0.0;
  for (std::size_t c = 0; c < 100; ++c) {
    const double d = static_cast<double>(cells[c]) - expected;
    chi2 += d * d / expected;
  }
  // 99 degrees of freedom, significance 0.01.
  CHECK(chi2 < 134.642);
}

TEST_CASE("clustered spatial mode concentrates mass") {
  SynthSpec spec;
  spec.size = 2000;
  spec.train_pairs = 50;
  spec.class_count = 5;
  spec.text_dim = 3;
  spec.image_dim = 3;
  spec.seed = 31;
  spec.spatial = SynthSpec::Spatial::Clustered;
  const auto synth = synthesize(spec);

  std::vector<std::size_t> cells(100, 0);
  for (const auto& o : synth.indexing.objects) {
    const double cx = std::clamp(o.location.x, 0.0, 0.999);
    const double cy = std::clamp(o.location.y, 0.0, 0.999);
    ++cells[static_cast<std::size_t>(cx * 10) * 10 +
            static_cast<std::size_t>(cy * 10)];
  }
  const double expected = 2000.0 / 100.0;
  double chi2 = 0.0;
  for (std::size_t c = 0; c < 100; ++c) {
    const double d = static_cast<double>(cells[c]) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 > 134.642);  // decisively non-uniform
}

TEST_CASE("synthesize rejects infeasible specs") {
  SynthSpec spec;
  spec.size = 5;
  spec.class_count = 10;
  CHECK_THROWS_AS(synthesize(spec), std::invalid_argument);
}

TEST_CASE("toy text featurizer") {
  const std::vector<std::string> vocab{"geyser", "park", "water", "rock"};

  SUBCASE("no vocabulary words: zero vector") {
    const auto f = toy_text_featurizer("completely unrelated words", vocab);
    for (double v : f.values) CHECK(v == 0.0);
  }
  SUBCASE("single word is one-hot") {
    const auto f = toy_text_featurizer("park", vocab);
    CHECK(f.values == std::vector<double>{0.0, 1.0, 0.0, 0.0});
  }
  SUBCASE("repeated words match hand-counted frequencies") {
    // geyser x2, water x1, unknown words ignored: counts (2,0,1,0).
    const auto f =
        toy_text_featurizer("Geyser, geyser! Hot WATER everywhere.", vocab);
    const double norm = std::sqrt(2.0 * 2.0 + 1.0);
    CHECK(f.values[0] == doctest::Approx(2.0 / norm));
    CHECK(f.values[1] == 0.0);
    CHECK(f.values[2] == doctest::Approx(1.0 / norm));
    CHECK(f.values[3] == 0.0);
  }
  SUBCASE("empty vocabulary is an error") {
    CHECK_THROWS_AS(toy_text_featurizer("text", {}), std::invalid_argument);
  }
}

TEST_CASE("paired training data extraction") {
  SynthSpec spec;
  spec.size = 100;
  spec.train_pairs = 20;
  spec.class_count = 4;
  spec.text_dim = 3;
  spec.image_dim = 5;
  spec.seed = 8;
  auto synth = synthesize(spec);

  const auto paired = paired_training_data(synth.training);
  CHECK(paired.text.rows == 20);
  CHECK(paired.text.cols == 3);
  CHECK(paired.image.cols == 5);
  CHECK(paired.labels.size() == 20);

  SUBCASE("modality order is enforced") {
    std::swap(synth.training.objects[0], synth.training.objects[1]);
    CHECK_THROWS_AS(paired_training_data(synth.training), std::invalid_argument);
  }
  SUBCASE("label agreement is enforced") {
    synth.training.objects[1].label = (*synth.training.objects[1].label + 1) % 4;
    CHECK_THROWS_AS(paired_training_data(synth.training), std::invalid_argument);
  }
}
