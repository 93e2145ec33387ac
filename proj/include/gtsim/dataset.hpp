#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gtsim {

// In-memory sample store. Features are row-major S x d; labels are class
// ids in [0, n_classes). Immutable after construction.
struct Dataset {
  std::vector<double> features;  // S * d
  std::vector<int> labels;       // S
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  int n_classes = 0;

  const double* row(std::size_t i) const { return &features[i * n_features]; }
};

void validate_dataset(const Dataset& ds);

// Read an IDX image/label file pair (big-endian, magic 0x00000803 for
// images and 0x00000801 for labels). Pixels are scaled to [0,1] and each
// image is flattened row-major. Throws std::runtime_error with a message
// containing "bad magic", "truncated", or "count mismatch" for the
// respective failure.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Write a dataset back out as an IDX pair (features quantized to bytes by
// round(255 * x)); used by tooling and tests.
void save_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
              const std::string& images_path, const std::string& labels_path);

// Keep only the first n samples (deterministic truncation for desk-scale
// runs). Throws if n exceeds the dataset size.
Dataset head_subset(const Dataset& ds, std::size_t n);

// Synthetic labeled blobs: class means drawn from a scaled Gaussian, then
// per-sample Gaussian noise. Labels are assigned round-robin so classes
// are exactly balanced whenever n_classes divides n_samples.
Dataset make_blobs(std::size_t n_samples, std::size_t n_features,
                   int n_classes, double noise, std::uint64_t seed);

}  // namespace gtsim
