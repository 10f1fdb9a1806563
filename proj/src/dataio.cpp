#include "geomm/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "geomm/rng.hpp"

namespace geomm {

namespace {

constexpr const char* kHeaderTag = "#geomm-dataset";

[[noreturn]] void fail_line(const std::string& path, std::size_t line,
                            const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& path,
                    std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    fail_line(path, line, "bad number '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& path,
                       std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    fail_line(path, line, "bad integer '" + s + "'");
  return v;
}

std::vector<double> parse_vector(const std::string& s, const std::string& path,
                                 std::size_t line) {
  std::vector<double> out;
  for (const auto& tok : split(s, ','))
    out.push_back(parse_double(tok, path, line));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_vector(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

Dataset ingest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  std::size_t line_no = 0;

  // Header.
  std::size_t d_t = 0, d_i = 0, classes = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields[0] != kHeaderTag)
      fail_line(path, line_no, "expected header line starting with " +
                                   std::string(kHeaderTag));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto kv = split(fields[i], '=');
      if (kv.size() != 2) fail_line(path, line_no, "bad header field '" + fields[i] + "'");
      if (kv[0] == "v") {
        if (kv[1] != "1") fail_line(path, line_no, "unsupported format version " + kv[1]);
      } else if (kv[0] == "dT") {
        d_t = static_cast<std::size_t>(parse_int(kv[1], path, line_no));
      } else if (kv[0] == "dI") {
        d_i = static_cast<std::size_t>(parse_int(kv[1], path, line_no));
      } else if (kv[0] == "classes") {
        classes = static_cast<std::size_t>(parse_int(kv[1], path, line_no));
      } else {
        fail_line(path, line_no, "unknown header key '" + kv[0] + "'");
      }
    }
    have_header = true;
    break;
  }
  if (!have_header) throw std::runtime_error(path + ": missing header line");
  if (d_t == 0 || d_i == 0 || classes == 0)
    fail_line(path, line_no, "header must declare dT, dI and classes");

  std::vector<GeoMultimediaObject> objects;
  std::size_t ordinal = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 6 && fields.size() != 7)
      fail_line(path, line_no, "expected 6 or 7 tab-separated fields, got " +
                                   std::to_string(fields.size()));

    GeoMultimediaObject obj;
    obj.id = fields[0] == "-" ? static_cast<std::int64_t>(ordinal)
                              : parse_int(fields[0], path, line_no);
    obj.location.x = parse_double(fields[1], path, line_no);
    obj.location.y = parse_double(fields[2], path, line_no);
    try {
      obj.feature.modality = parse_modality_tag(fields[3]);
    } catch (const std::invalid_argument& e) {
      fail_line(path, line_no, e.what());
    }
    if (fields[4] != "-")
      obj.label = static_cast<int>(parse_int(fields[4], path, line_no));
    obj.feature.values = parse_vector(fields[5], path, line_no);

    const std::size_t want = obj.feature.modality == Modality::Text ? d_t : d_i;
    if (obj.feature.values.size() != want)
      fail_line(path, line_no,
                "feature has " + std::to_string(obj.feature.values.size()) +
                    " values, header declares " + std::to_string(want));

    if (fields.size() == 7) {
      auto probs = parse_vector(fields[6], path, line_no);
      if (probs.size() != classes)
        fail_line(path, line_no, "semantic vector length != declared classes");
      obj.semantic = SemanticVector{std::move(probs)};
    }
    objects.push_back(std::move(obj));
    ++ordinal;
  }

  Dataset ds = make_dataset(std::move(objects), d_t, d_i, classes);
  const auto violations = validate_dataset(ds);
  if (!violations.empty()) {
    std::string msg = path + ": dataset invalid:";
    for (const auto& v : violations)
      msg += "\n  object " + std::to_string(v.object_id) + ": " + v.reason;
    throw std::runtime_error(msg);
  }
  return ds;
}

void export_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << kHeaderTag << "\tv=1\tdT=" << ds.text_dim << "\tdI=" << ds.image_dim
     << "\tclasses=" << ds.class_count << "\n";
  for (const auto& o : ds.objects) {
    os << o.id << '\t' << format_double(o.location.x) << '\t'
       << format_double(o.location.y) << '\t' << modality_tag(o.feature.modality)
       << '\t';
    if (o.label)
      os << *o.label;
    else
      os << '-';
    os << '\t' << format_vector(o.feature.values);
    if (o.semantic) os << '\t' << format_vector(o.semantic->probabilities);
    os << '\n';
  }
  if (!os) throw std::runtime_error("export failed: " + path);
}

namespace {

// Balanced label sequence: each class appears floor/ceil(n/classes) times,
// deterministically shuffled.
std::vector<int> balanced_labels(std::size_t n, std::size_t classes,
                                 DetRng& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  rng.shuffle(labels);
  return labels;
}

GeoPoint sample_location(SynthSpec::Spatial spatial,
                         const std::vector<GeoPoint>& centers, DetRng& rng) {
  if (spatial == SynthSpec::Spatial::Uniform)
    return {rng.uniform(), rng.uniform()};
  const auto& c = centers[rng.bounded(centers.size())];
  return {c.x + rng.normal(0.0, 0.02), c.y + rng.normal(0.0, 0.02)};
}

}  // namespace

SynthResult synthesize(const SynthSpec& spec) {
  if (spec.class_count < 2)
    throw std::invalid_argument("synthesize: need >= 2 classes");
  if (spec.size < spec.class_count * 10)
    throw std::invalid_argument("synthesize: size must be >= 10 * classes");
  if (spec.text_dim == 0 || spec.image_dim == 0)
    throw std::invalid_argument("synthesize: dimensions must be positive");

  const std::size_t train_pairs =
      spec.train_pairs > 0 ? spec.train_pairs
                           : std::max<std::size_t>(50 * spec.class_count, 500);
  if (train_pairs < spec.class_count)
    throw std::invalid_argument("synthesize: too few training pairs");

  DetRng rng(spec.seed);

  // Per-class means for both modalities; the shared class identity carries
  // the cross-modal correlation.
  std::vector<std::vector<double>> text_means(spec.class_count),
      image_means(spec.class_count);
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    text_means[c].resize(spec.text_dim);
    image_means[c].resize(spec.image_dim);
    for (auto& v : text_means[c]) v = rng.normal(0.0, spec.class_separation);
    for (auto& v : image_means[c]) v = rng.normal(0.0, spec.class_separation);
  }

  std::vector<GeoPoint> cluster_centers(spec.class_count);
  for (auto& c : cluster_centers) c = {rng.uniform(), rng.uniform()};

  auto text_feature = [&](int label) {
    FeatureVector f{Modality::Text, std::vector<double>(spec.text_dim)};
    for (std::size_t j = 0; j < spec.text_dim; ++j)
      f.values[j] = text_means[static_cast<std::size_t>(label)][j] +
                    rng.normal(0.0, spec.noise_sigma);
    return f;
  };
  auto image_feature = [&](int label) {
    FeatureVector f{Modality::Image, std::vector<double>(spec.image_dim)};
    for (std::size_t j = 0; j < spec.image_dim; ++j)
      f.values[j] = image_means[static_cast<std::size_t>(label)][j] +
                    rng.normal(0.0, spec.noise_sigma);
    return f;
  };

  SynthResult out;

  // Training split: alternating text/image records per underlying document.
  std::vector<GeoMultimediaObject> train;
  train.reserve(train_pairs * 2);
  const auto train_labels = balanced_labels(train_pairs, spec.class_count, rng);
  for (std::size_t i = 0; i < train_pairs; ++i) {
    const int label = train_labels[i];
    const GeoPoint loc = sample_location(spec.spatial, cluster_centers, rng);
    GeoMultimediaObject text_obj;
    text_obj.id = static_cast<std::int64_t>(2 * i);
    text_obj.location = loc;
    text_obj.feature = text_feature(label);
    text_obj.label = label;
    GeoMultimediaObject image_obj;
    image_obj.id = static_cast<std::int64_t>(2 * i + 1);
    image_obj.location = loc;
    image_obj.feature = image_feature(label);
    image_obj.label = label;
    train.push_back(std::move(text_obj));
    train.push_back(std::move(image_obj));
  }
  out.training = make_dataset(std::move(train), spec.text_dim, spec.image_dim,
                              spec.class_count);

  // Indexing split: image objects only.
  std::vector<GeoMultimediaObject> index;
  index.reserve(spec.size);
  const auto index_labels = balanced_labels(spec.size, spec.class_count, rng);
  for (std::size_t i = 0; i < spec.size; ++i) {
    GeoMultimediaObject obj;
    obj.id = static_cast<std::int64_t>(i);
    obj.location = sample_location(spec.spatial, cluster_centers, rng);
    obj.feature = image_feature(index_labels[i]);
    obj.label = index_labels[i];
    index.push_back(std::move(obj));
  }
  out.indexing = make_dataset(std::move(index), spec.text_dim, spec.image_dim,
                              spec.class_count);
  return out;
}

FeatureVector toy_text_featurizer(const std::string& text,
                                  const std::vector<std::string>& vocab) {
  if (vocab.empty())
    throw std::invalid_argument("toy_text_featurizer: empty vocabulary");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);

  FeatureVector out{Modality::Text, std::vector<double>(vocab.size(), 0.0)};
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    auto it = index.find(word);
    if (it != index.end()) out.values[it->second] += 1.0;
    word.clear();
  };
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch)))
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    else
      flush();
  }
  flush();

  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : out.values) v /= norm;
  }
  return out;
}

PairedTraining paired_training_data(const Dataset& training) {
  if (training.objects.size() < 2 || training.objects.size() % 2 != 0)
    throw std::invalid_argument(
        "paired_training_data: expected an even number of alternating records");
  const std::size_t pairs = training.objects.size() / 2;
  PairedTraining out;
  out.text = Matrix(pairs, training.text_dim);
  out.image = Matrix(pairs, training.image_dim);
  out.labels.resize(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& t = training.objects[2 * i];
    const auto& im = training.objects[2 * i + 1];
    if (t.feature.modality != Modality::Text ||
        im.feature.modality != Modality::Image)
      throw std::invalid_argument(
          "paired_training_data: records must alternate text, image (pair " +
          std::to_string(i) + ")");
    if (!t.label || !im.label || *t.label != *im.label)
      throw std::invalid_argument(
          "paired_training_data: pair " + std::to_string(i) +
          " lacks a shared label");
    for (std::size_t j = 0; j < training.text_dim; ++j)
      out.text(i, j) = t.feature.values[j];
    for (std::size_t j = 0; j < training.image_dim; ++j)
      out.image(i, j) = im.feature.values[j];
    out.labels[i] = *t.label;
  }
  return out;
}

}  // namespace geomm
