#include "gtsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gtsim/rng.hpp"

namespace gtsim {

void validate_dataset(const Dataset& ds) {
  if (ds.features.size() != ds.n_samples * ds.n_features)
    throw std::invalid_argument("dataset: feature buffer size mismatch");
  if (ds.labels.size() != ds.n_samples)
    throw std::invalid_argument("dataset: label count mismatch");
  for (double v : ds.features)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
  for (int l : ds.labels)
    if (l < 0 || l >= ds.n_classes)
      throw std::invalid_argument("dataset: label out of range");
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("idx: truncated file " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("idx: cannot open " + images_path);
  std::uint32_t magic = read_u32_be(img, images_path);
  if (magic != kImageMagic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "idx: bad magic 0x%08x in ", magic);
    throw std::runtime_error(std::string(buf) + images_path);
  }
  std::uint32_t count = read_u32_be(img, images_path);
  std::uint32_t rows = read_u32_be(img, images_path);
  std::uint32_t cols = read_u32_be(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);
  std::uint32_t lmagic = read_u32_be(lab, labels_path);
  if (lmagic != kLabelMagic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "idx: bad magic 0x%08x in ", lmagic);
    throw std::runtime_error(std::string(buf) + labels_path);
  }
  std::uint32_t lcount = read_u32_be(lab, labels_path);
  if (count != lcount)
    throw std::runtime_error("idx: count mismatch between " + images_path +
                             " and " + labels_path);

  Dataset ds;
  ds.n_samples = count;
  ds.n_features = static_cast<std::size_t>(rows) * cols;
  ds.features.resize(ds.n_samples * ds.n_features);
  ds.labels.resize(ds.n_samples);

  std::vector<unsigned char> buf(ds.n_features);
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size())))
      throw std::runtime_error("idx: truncated image data in " + images_path);
    double* dst = &ds.features[i * ds.n_features];
    for (std::size_t j = 0; j < ds.n_features; ++j)
      dst[j] = buf[j] / 255.0;
  }
  std::vector<unsigned char> lbuf(ds.n_samples);
  if (!lab.read(reinterpret_cast<char*>(lbuf.data()),
                static_cast<std::streamsize>(lbuf.size())))
    throw std::runtime_error("idx: truncated label data in " + labels_path);
  int max_label = 0;
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    ds.labels[i] = lbuf[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.n_classes = std::max(10, max_label + 1);
  validate_dataset(ds);
  return ds;
}

void save_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
              const std::string& images_path, const std::string& labels_path) {
  if (rows * cols != ds.n_features)
    throw std::invalid_argument("save_idx: rows*cols must equal n_features");
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("save_idx: cannot open " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(ds.n_samples));
  write_u32_be(img, static_cast<std::uint32_t>(rows));
  write_u32_be(img, static_cast<std::uint32_t>(cols));
  for (double v : ds.features) {
    double q = std::round(std::min(std::max(v, 0.0), 1.0) * 255.0);
    unsigned char b = static_cast<unsigned char>(q);
    img.write(reinterpret_cast<char*>(&b), 1);
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("save_idx: cannot open " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(ds.n_samples));
  for (int l : ds.labels) {
    unsigned char b = static_cast<unsigned char>(l);
    lab.write(reinterpret_cast<char*>(&b), 1);
  }
}

Dataset head_subset(const Dataset& ds, std::size_t n) {
  if (n > ds.n_samples)
    throw std::invalid_argument("head_subset: n exceeds dataset size");
  Dataset out;
  out.n_samples = n;
  out.n_features = ds.n_features;
  out.n_classes = ds.n_classes;
  out.features.assign(ds.features.begin(),
                      ds.features.begin() + static_cast<std::ptrdiff_t>(n * ds.n_features));
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset make_blobs(std::size_t n_samples, std::size_t n_features,
                   int n_classes, double noise, std::uint64_t seed) {
  if (n_samples == 0 || n_features == 0 || n_classes < 2)
    throw std::invalid_argument("make_blobs: degenerate shape");
  Rng rng = derive_stream(seed, StreamKind::dataset);
  std::vector<double> means(static_cast<std::size_t>(n_classes) * n_features);
  for (double& m : means) m = 2.0 * rng.next_gaussian();

  Dataset ds;
  ds.n_samples = n_samples;
  ds.n_features = n_features;
  ds.n_classes = n_classes;
  ds.features.resize(n_samples * n_features);
  ds.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    int label = static_cast<int>(i % static_cast<std::size_t>(n_classes));
    ds.labels[i] = label;
    const double* mu = &means[static_cast<std::size_t>(label) * n_features];
    double* dst = &ds.features[i * n_features];
    for (std::size_t j = 0; j < n_features; ++j)
      dst[j] = mu[j] + noise * rng.next_gaussian();
  }
  return ds;
}

}  // namespace gtsim
