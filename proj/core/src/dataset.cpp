#include "amckfac/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace amckfac {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

// EMNIST "letters" label indices (1-based a..z) for the four classes m,a,n,c.
constexpr std::array<int, 4> kLetterLabels = {13, 1, 14, 3};

class IdxReader {
 public:
  explicit IdxReader(const std::string& path) : path_(path) {
    // gzopen reads plain files transparently as well; the .gz extension is
    // the declared signal for compressed input.
    file_ = gzopen(path.c_str(), "rb");
    if (!file_) throw ParseError("cannot open IDX file: " + path);
  }
  ~IdxReader() {
    if (file_) gzclose(file_);
  }
  IdxReader(const IdxReader&) = delete;
  IdxReader& operator=(const IdxReader&) = delete;

  std::uint32_t read_u32() {
    unsigned char buf[4];
    read_exact(buf, 4);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
  }

  void read_exact(unsigned char* dst, std::size_t n) {
    const int got = gzread(file_, dst, static_cast<unsigned>(n));
    if (got < 0 || static_cast<std::size_t>(got) != n) {
      std::ostringstream msg;
      msg << path_ << ": truncated IDX stream at offset "
          << offset_ + std::max(got, 0) << " (wanted " << n << " more bytes)";
      throw ParseError(msg.str());
    }
    offset_ += n;
  }

  bool at_eof() {
    unsigned char probe;
    return gzread(file_, &probe, 1) <= 0;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  gzFile file_ = nullptr;
  std::size_t offset_ = 0;
};

}  // namespace

RawIdx load_idx(const std::string& images_path,
                const std::string& labels_path) {
  RawIdx raw;

  {
    IdxReader in(images_path);
    const std::uint32_t magic = in.read_u32();
    if (magic != kImagesMagic) {
      std::ostringstream msg;
      msg << images_path << ": bad image magic 0x" << std::hex << magic
          << " at offset 0 (expected 0x803)";
      throw ParseError(msg.str());
    }
    const std::uint32_t count = in.read_u32();
    raw.image_rows = in.read_u32();
    raw.image_cols = in.read_u32();
    if (raw.image_rows == 0 || raw.image_cols == 0)
      throw ParseError(images_path + ": zero image dimensions in header");

    const std::size_t pixels = raw.image_rows * raw.image_cols;
    std::vector<unsigned char> buf(pixels);
    raw.images.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
      in.read_exact(buf.data(), pixels);
      std::vector<double> img(pixels);
      // transpose: EMNIST images come flipped relative to MNIST orientation
      for (std::size_t r = 0; r < raw.image_rows; ++r)
        for (std::size_t c = 0; c < raw.image_cols; ++c)
          img[r * raw.image_cols + c] =
              buf[c * raw.image_rows + r] / 255.0;
      raw.images.push_back(std::move(img));
    }
    if (!in.at_eof()) {
      std::ostringstream msg;
      msg << images_path << ": trailing bytes after offset " << in.offset()
          << " (expected length 16 + " << count << "*" << pixels << ")";
      throw ParseError(msg.str());
    }
  }

  {
    IdxReader in(labels_path);
    const std::uint32_t magic = in.read_u32();
    if (magic != kLabelsMagic) {
      std::ostringstream msg;
      msg << labels_path << ": bad label magic 0x" << std::hex << magic
          << " at offset 0 (expected 0x801)";
      throw ParseError(msg.str());
    }
    const std::uint32_t count = in.read_u32();
    std::vector<unsigned char> buf(count);
    if (count > 0) in.read_exact(buf.data(), count);
    raw.labels.assign(buf.begin(), buf.end());
    if (!in.at_eof())
      throw ParseError(labels_path + ": trailing bytes after label data");
  }

  if (raw.images.size() != raw.labels.size()) {
    std::ostringstream msg;
    msg << "image count " << raw.images.size() << " != label count "
        << raw.labels.size();
    throw ParseError(msg.str());
  }
  return raw;
}

std::vector<double> area_downsample(const std::vector<double>& src,
                                    std::size_t src_dim, std::size_t dst_dim) {
  if (src.size() != src_dim * src_dim)
    throw ContractViolation("area_downsample: source size mismatch");
  const double ratio = static_cast<double>(src_dim) / dst_dim;
  std::vector<double> dst(dst_dim * dst_dim, 0.0);
  for (std::size_t i = 0; i < dst_dim; ++i) {
    for (std::size_t j = 0; j < dst_dim; ++j) {
      const double r0 = i * ratio, r1 = (i + 1) * ratio;
      const double c0 = j * ratio, c1 = (j + 1) * ratio;
      double acc = 0.0;
      for (std::size_t r = static_cast<std::size_t>(r0);
           r < src_dim && r < r1; ++r) {
        const double rw = std::min<double>(r + 1, r1) - std::max<double>(r, r0);
        for (std::size_t c = static_cast<std::size_t>(c0);
             c < src_dim && c < c1; ++c) {
          const double cw =
              std::min<double>(c + 1, c1) - std::max<double>(c, c0);
          acc += rw * cw * src[r * src_dim + c];
        }
      }
      dst[i * dst_dim + j] = acc / (ratio * ratio);
    }
  }
  return dst;
}

std::pair<LabeledImages, LabeledImages> build_split(const RawIdx& raw,
                                                    int per_class_train,
                                                    int per_class_test,
                                                    std::uint64_t seed) {
  if (per_class_train < 1 || per_class_test < 0)
    throw ContractViolation("build_split: bad per-class counts");
  if (raw.image_rows != 28 || raw.image_cols != 28)
    throw ContractViolation("build_split expects 28x28 source images");

  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t i = 0; i < raw.labels.size(); ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (raw.labels[i] == kLetterLabels[c]) {
        by_class[c].push_back(i);
        break;
      }
    }
  }
  static constexpr const char* kLetters = "manc";
  for (std::size_t c = 0; c < 4; ++c) {
    const std::size_t need = per_class_train + per_class_test;
    if (by_class[c].size() < need) {
      std::ostringstream msg;
      msg << "insufficient instances of letter '" << kLetters[c] << "': have "
          << by_class[c].size() << ", need " << need;
      throw ParseError(msg.str());
    }
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
  }

  auto collect = [&](int skip, int take, const std::string& tag) {
    LabeledImages out;
    out.split = tag;
    out.images = Matrix(static_cast<std::size_t>(take) * 4, 64, 0.0);
    out.labels.resize(static_cast<std::size_t>(take) * 4);
    std::size_t row = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      for (int k = 0; k < take; ++k) {
        const std::size_t idx = by_class[c][skip + k];
        const std::vector<double> small = downsample_28_to_8(raw.images[idx]);
        for (std::size_t p = 0; p < 64; ++p) out.images(row, p) = small[p];
        out.labels[row] = static_cast<int>(c);
        ++row;
      }
    }
    return out;
  };

  return {collect(0, per_class_train, "train"),
          collect(per_class_train, per_class_test, "test")};
}

LabeledImages synthetic_blobs(int n_per_class, std::uint64_t seed,
                              double noise_sigma) {
  if (n_per_class < 1)
    throw ContractViolation("synthetic_blobs: n_per_class < 1");
  // one blob center per class, far enough apart to be separable
  static constexpr std::array<std::pair<double, double>, 4> kCenters = {
      {{2.0, 2.0}, {2.0, 5.0}, {5.0, 2.0}, {5.0, 5.0}}};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);

  LabeledImages out;
  out.split = "train";
  out.images = Matrix(static_cast<std::size_t>(n_per_class) * 4, 64, 0.0);
  out.labels.resize(static_cast<std::size_t>(n_per_class) * 4);
  std::size_t row = 0;
  for (int c = 0; c < 4; ++c) {
    for (int k = 0; k < n_per_class; ++k) {
      const double cy = kCenters[c].first +
                        (noise_sigma > 0.0 ? jitter(rng) : 0.0);
      const double cx = kCenters[c].second +
                        (noise_sigma > 0.0 ? jitter(rng) : 0.0);
      for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
          const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
          double v = std::exp(-d2 / (2.0 * 1.2 * 1.2));
          if (noise_sigma > 0.0) v += noise(rng);
          out.images(row, i * 8 + j) = std::clamp(v, 0.0, 1.0);
        }
      }
      out.labels[row] = c;
      ++row;
    }
  }
  return out;
}

}  // namespace amckfac
