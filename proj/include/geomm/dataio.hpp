#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geomm/linalg.hpp"
#include "geomm/model.hpp"

namespace geomm {

/// Reads the tab-separated dataset format:
///   #geomm-dataset<TAB>v=1<TAB>dT=<n><TAB>dI=<n><TAB>classes=<n>
///   id<TAB>x<TAB>y<TAB>T|I<TAB>label-or-dash<TAB>f1,f2,...[<TAB>p1,p2,...]
/// An id of "-" assigns the record's ordinal. Throws std::runtime_error with
/// the offending line number on parse errors or validation violations.
Dataset ingest(const std::string& path);

/// Writes the same format. Doubles are printed with enough digits to
/// round-trip bit-exactly.
void export_dataset(const Dataset& ds, const std::string& path);

struct SynthSpec {
  std::size_t size = 10000;       // indexing split (image objects)
  std::size_t train_pairs = 0;    // 0 = default: max(50 * classes, 500)
  std::size_t class_count = 10;
  std::size_t text_dim = 32;
  std::size_t image_dim = 48;
  enum class Spatial { Uniform, Clustered } spatial = Spatial::Uniform;
  std::uint64_t seed = 1;
  double class_separation = 3.0;  // spread of class means
  double noise_sigma = 1.0;       // within-class feature noise
};

struct SynthResult {
  /// Labeled text/image records in alternating pairs (text at even
  /// positions, its paired image right after), for fitting the space.
  Dataset training;
  /// Labeled image objects to index and query against.
  Dataset indexing;
};

/// Class-conditional Gaussian generator: paired text/image features share
/// the per-class mean, which induces real cross-modal correlation. Labels
/// are balanced; everything is deterministic under the seed.
SynthResult synthesize(const SynthSpec& spec);

/// L2-normalized term-frequency vector over the vocabulary; words not in
/// the vocabulary are ignored. A text with no vocabulary words yields the
/// zero vector, which is unusable for embedding (callers should check).
FeatureVector toy_text_featurizer(const std::string& text,
                                  const std::vector<std::string>& vocab);

struct PairedTraining {
  Matrix text;    // n x d_T
  Matrix image;   // n x d_I
  std::vector<int> labels;
};

/// Splits an alternating text/image training dataset into paired matrices.
/// Throws when records do not alternate T,I with matching labels.
PairedTraining paired_training_data(const Dataset& training);

}  // namespace geomm
