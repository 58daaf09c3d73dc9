#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amckfac/linalg.hpp"

namespace amckfac {

// Raw IDX contents before filtering/downsampling.
struct RawIdx {
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::vector<std::vector<double>> images;  // pixels in [0,1], transposed to
                                            // standard orientation
  std::vector<int> labels;
};

// Parses the IDX container (plain or gzip, sniffed by .gz extension).
// Pixels are scaled to [0,1] and each image is transposed (EMNIST stores
// images column-major relative to the usual orientation).
RawIdx load_idx(const std::string& images_path, const std::string& labels_path);

struct LabeledImages {
  Matrix images;            // N x 64, 8x8 grids in [0,1]
  std::vector<int> labels;  // (m,a,n,c) -> (0,1,2,3)
  std::string split;        // "train" or "test"
};

// Class-balanced disjoint train/test split of the letters {m,a,n,c},
// downsampled to 8x8. Deterministic given seed.
std::pair<LabeledImages, LabeledImages> build_split(const RawIdx& raw,
                                                    int per_class_train,
                                                    int per_class_test,
                                                    std::uint64_t seed);

// Area-weighted downsampling between arbitrary square sizes.
std::vector<double> area_downsample(const std::vector<double>& src,
                                    std::size_t src_dim, std::size_t dst_dim);

inline std::vector<double> downsample_28_to_8(const std::vector<double>& img) {
  return area_downsample(img, 28, 8);
}

// Four Gaussian-blob classes at distinct positions plus pixel noise;
// linearly separable at low noise. Test fixture when EMNIST is absent.
LabeledImages synthetic_blobs(int n_per_class, std::uint64_t seed,
                              double noise_sigma = 0.05);

}  // namespace amckfac
