#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <zlib.h>

#include "amckfac/dataset.hpp"

using namespace amckfac;
namespace fs = std::filesystem;

namespace {

void push_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back((v >> 24) & 0xff);
  buf.push_back((v >> 16) & 0xff);
  buf.push_back((v >> 8) & 0xff);
  buf.push_back(v & 0xff);
}

std::vector<unsigned char> idx_images(const std::vector<std::vector<unsigned char>>& imgs,
                                      std::uint32_t rows, std::uint32_t cols) {
  std::vector<unsigned char> buf;
  push_u32(buf, 0x00000803);
  push_u32(buf, static_cast<std::uint32_t>(imgs.size()));
  push_u32(buf, rows);
  push_u32(buf, cols);
  for (const auto& img : imgs) buf.insert(buf.end(), img.begin(), img.end());
  return buf;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> buf;
  push_u32(buf, 0x00000801);
  push_u32(buf, static_cast<std::uint32_t>(labels.size()));
  buf.insert(buf.end(), labels.begin(), labels.end());
  return buf;
}

std::string write_file(const std::string& name,
                       const std::vector<unsigned char>& bytes) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path;
}

std::string write_gz(const std::string& name,
                     const std::vector<unsigned char>& bytes) {
  const std::string path = (fs::temp_directory_path() / name).string();
  gzFile gz = gzopen(path.c_str(), "wb");
  REQUIRE(gz != nullptr);
  gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(gz);
  return path;
}

struct Fixture {
  std::string images_path;
  std::string labels_path;
};

Fixture small_fixture() {
  std::vector<std::vector<unsigned char>> imgs(3,
                                               std::vector<unsigned char>(784, 0));
  imgs[0][5] = 255;              // pixel (row 0, col 5) in file order
  imgs[1][3 * 28 + 7] = 128;
  imgs[2][783] = 64;
  return {write_file("amckfac_imgs.idx", idx_images(imgs, 28, 28)),
          write_file("amckfac_lbls.idx", idx_labels({13, 1, 14}))};
}

}  // namespace

TEST_CASE("well-formed fixture round-trips with scaling and transpose") {
  Fixture f = small_fixture();
  RawIdx raw = load_idx(f.images_path, f.labels_path);
  REQUIRE(raw.images.size() == 3);
  REQUIRE(raw.labels.size() == 3);
  CHECK(raw.image_rows == 28);
  CHECK(raw.image_cols == 28);
  CHECK(raw.labels == std::vector<int>{13, 1, 14});
  // EMNIST transpose: file pixel (0,5) appears at (5,0)
  CHECK(raw.images[0][5 * 28 + 0] == doctest::Approx(1.0));
  CHECK(raw.images[0][0 * 28 + 5] == doctest::Approx(0.0));
  CHECK(raw.images[1][7 * 28 + 3] == doctest::Approx(128.0 / 255.0));
  for (double v : raw.images[2]) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("gzip containers load transparently via the .gz extension") {
  std::vector<std::vector<unsigned char>> imgs(2,
                                               std::vector<unsigned char>(784, 9));
  const std::string ip =
      write_gz("amckfac_imgs.idx.gz", idx_images(imgs, 28, 28));
  const std::string lp = write_gz("amckfac_lbls.idx.gz", idx_labels({1, 3}));
  RawIdx raw = load_idx(ip, lp);
  CHECK(raw.images.size() == 2);
  CHECK(raw.images[0][0] == doctest::Approx(9.0 / 255.0));
}

TEST_CASE("bad magic numbers are rejected") {
  std::vector<unsigned char> img_bytes =
      idx_images({std::vector<unsigned char>(784, 0)}, 28, 28);
  img_bytes[3] = 0x02;  // 0x803 -> 0x802
  const std::string ip = write_file("amckfac_badmagic.idx", img_bytes);
  const std::string lp = write_file("amckfac_lbl1.idx", idx_labels({13}));
  CHECK_THROWS_AS(load_idx(ip, lp), ParseError);
}

TEST_CASE("truncated payload is rejected") {
  std::vector<unsigned char> img_bytes =
      idx_images({std::vector<unsigned char>(784, 0)}, 28, 28);
  img_bytes.resize(img_bytes.size() - 10);
  const std::string ip = write_file("amckfac_trunc.idx", img_bytes);
  const std::string lp = write_file("amckfac_lbl2.idx", idx_labels({13}));
  CHECK_THROWS_AS(load_idx(ip, lp), ParseError);
}

TEST_CASE("image/label count mismatch is rejected") {
  Fixture f = small_fixture();
  const std::string lp = write_file("amckfac_lbl3.idx", idx_labels({13, 1}));
  CHECK_THROWS_AS(load_idx(f.images_path, lp), ParseError);
}

TEST_CASE("every header byte mutation of the image file is rejected") {
  std::vector<unsigned char> good =
      idx_images({std::vector<unsigned char>(784, 0)}, 28, 28);
  const std::string lp = write_file("amckfac_lbl4.idx", idx_labels({13}));
  for (std::size_t byte = 0; byte < 16; ++byte) {
    std::vector<unsigned char> bad = good;
    bad[byte] = static_cast<unsigned char>(bad[byte] + 1);
    const std::string ip = write_file("amckfac_fuzz.idx", bad);
    CHECK_THROWS_AS(load_idx(ip, lp), ParseError);
  }
}

TEST_CASE("build_split produces balanced disjoint paper-sized splits") {
  // 160 instances of each of the four letters plus distractors
  RawIdx raw;
  raw.image_rows = 28;
  raw.image_cols = 28;
  const std::vector<int> letters = {13, 1, 14, 3};  // m, a, n, c
  int counter = 0;
  for (int rep = 0; rep < 160; ++rep) {
    for (int lbl : letters) {
      std::vector<double> img(784, 0.0);
      img[counter % 784] = 1.0;  // unique pixel signature per image
      raw.images.push_back(img);
      raw.labels.push_back(lbl);
      ++counter;
    }
    raw.images.push_back(std::vector<double>(784, 0.5));
    raw.labels.push_back(7);  // letter not in the class set
  }

  auto [train, test] = build_split(raw, 50, 100, 42);
  CHECK(train.images.rows() == 200);
  CHECK(test.images.rows() == 400);
  CHECK(train.split == "train");
  CHECK(test.split == "test");
  for (int cls = 0; cls < 4; ++cls) {
    CHECK(std::count(train.labels.begin(), train.labels.end(), cls) == 50);
    CHECK(std::count(test.labels.begin(), test.labels.end(), cls) == 100);
  }

  // determinism
  auto [train2, test2] = build_split(raw, 50, 100, 42);
  CHECK(train.images.data() == train2.images.data());
  CHECK(test.labels == test2.labels);

  // a different seed selects different images but the same counts
  auto [train3, test3] = build_split(raw, 50, 100, 43);
  CHECK(train3.images.rows() == 200);
  CHECK(train3.images.data() != train.images.data());
}

TEST_CASE("insufficient class instances name the deficient letter") {
  RawIdx raw;
  raw.image_rows = 28;
  raw.image_cols = 28;
  for (int i = 0; i < 200; ++i) {
    raw.images.push_back(std::vector<double>(784, 0.1));
    raw.labels.push_back(i % 2 == 0 ? 13 : 1);  // no n, no c
  }
  CHECK_THROWS_AS(build_split(raw, 50, 100, 1), std::runtime_error);
}

TEST_CASE("area downsampling preserves constants and mass") {
  std::vector<double> constant(784, 0.37);
  std::vector<double> out = downsample_28_to_8(constant);
  REQUIRE(out.size() == 64);
  for (double v : out) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

  std::vector<double> ramp(784);
  for (std::size_t i = 0; i < 784; ++i) ramp[i] = static_cast<double>(i) / 784.0;
  std::vector<double> down = downsample_28_to_8(ramp);
  double in_mean = 0.0, out_mean = 0.0;
  for (double v : ramp) in_mean += v / 784.0;
  for (double v : down) out_mean += v / 64.0;
  CHECK(out_mean == doctest::Approx(in_mean).epsilon(1e-12));
}

TEST_CASE("area downsampling is linear") {
  std::vector<double> x(784), y(784);
  for (std::size_t i = 0; i < 784; ++i) {
    x[i] = std::sin(0.1 * i) * 0.5 + 0.5;
    y[i] = std::cos(0.07 * i) * 0.5 + 0.5;
  }
  const double a = 0.3, b = 0.6;
  std::vector<double> combo(784);
  for (std::size_t i = 0; i < 784; ++i) combo[i] = a * x[i] + b * y[i];
  std::vector<double> dx = downsample_28_to_8(x);
  std::vector<double> dy = downsample_28_to_8(y);
  std::vector<double> dc = downsample_28_to_8(combo);
  for (std::size_t i = 0; i < 64; ++i)
    CHECK(dc[i] == doctest::Approx(a * dx[i] + b * dy[i]).epsilon(1e-12));
}

TEST_CASE("a checkerboard averages to near one half") {
  std::vector<double> board(784);
  for (std::size_t r = 0; r < 28; ++r)
    for (std::size_t c = 0; c < 28; ++c) board[r * 28 + c] = (r + c) % 2;
  for (double v : downsample_28_to_8(board))
    CHECK(std::fabs(v - 0.5) <= 0.1);
}

TEST_CASE("synthetic blobs are deterministic and class-structured") {
  LabeledImages noiseless = synthetic_blobs(5, 7, 0.0);
  CHECK(noiseless.images.rows() == 20);
  for (int cls = 0; cls < 4; ++cls)
    CHECK(std::count(noiseless.labels.begin(), noiseless.labels.end(), cls) ==
          5);
  // noise 0: every instance of a class equals its template, and the four
  // templates are distinct
  std::set<std::vector<double>> templates;
  for (int cls = 0; cls < 4; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 20; ++i)
      if (noiseless.labels[i] == cls) rows.push_back(i);
    for (std::size_t k = 1; k < rows.size(); ++k)
      for (std::size_t j = 0; j < 64; ++j)
        CHECK(noiseless.images(rows[k], j) ==
              noiseless.images(rows[0], j));
    std::vector<double> tpl(64);
    for (std::size_t j = 0; j < 64; ++j) tpl[j] = noiseless.images(rows[0], j);
    templates.insert(tpl);
  }
  CHECK(templates.size() == 4);

  LabeledImages again = synthetic_blobs(5, 7, 0.0);
  CHECK(again.images.data() == noiseless.images.data());
}

TEST_CASE("low-noise blobs are linearly separable by class templates") {
  // nearest-template matching is a linear classifier; at sigma <= 0.05 it
  // must classify the whole training set perfectly
  LabeledImages templates = synthetic_blobs(1, 1, 0.0);
  LabeledImages noisy = synthetic_blobs(50, 2, 0.05);
  int correct = 0;
  for (std::size_t i = 0; i < noisy.images.rows(); ++i) {
    double best = -1.0;
    int best_cls = -1;
    for (std::size_t t = 0; t < 4; ++t) {
      double dot = 0.0, nrm = 0.0;
      for (std::size_t j = 0; j < 64; ++j) {
        dot += noisy.images(i, j) * templates.images(t, j);
        nrm += templates.images(t, j) * templates.images(t, j);
      }
      const double score = dot - 0.5 * nrm;  // linear discriminant
      if (score > best) {
        best = score;
        best_cls = templates.labels[t];
      }
    }
    if (best_cls == noisy.labels[i]) ++correct;
  }
  CHECK(correct == static_cast<int>(noisy.images.rows()));
}
