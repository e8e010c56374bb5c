#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "dbyz/idx.hpp"

namespace dbyz {
namespace {

IdxError::Kind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_idx(bytes);
  } catch (const IdxError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "parse_idx accepted malformed input";
  return IdxError::Kind::Io;
}

TEST(Idx, SingleImageRoundTripsThroughFile) {
  IdxTensor t;
  t.dims = {1, 1, 1};
  t.data = {200};
  const auto path = std::filesystem::temp_directory_path() / "dbyz_idx_roundtrip.idx";
  write_idx(path, t);
  const auto back = load_idx(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(back.data, t.data);
  EXPECT_EQ(back.magic(), 2051u);
}

TEST(Idx, HeaderIsBigEndian) {
  IdxTensor t;
  t.dims = {258};
  t.data.assign(258, 1);
  const auto bytes = serialize_idx(t);
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 8),
            (std::vector<std::uint8_t>{0, 0, 8, 1, 0, 0, 1, 2}));
  EXPECT_EQ(t.magic(), 2049u);
}

TEST(Idx, DistinctErrors) {
  IdxTensor t;
  t.dims = {2, 2};
  t.data = {1, 2, 3, 4};
  auto bytes = serialize_idx(t);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(error_kind(truncated), IdxError::Kind::Truncated);
  try {
    parse_idx(truncated);
  } catch (const IdxError& e) {
    EXPECT_STREQ(e.what(), "truncated payload");
  }
  EXPECT_EQ(error_kind({0, 0, 8}), IdxError::Kind::Truncated);

  auto bad = bytes;
  bad[0] = 1;
  EXPECT_EQ(error_kind(bad), IdxError::Kind::BadMagic);

  auto floats = bytes;
  floats[2] = 0x0D;
  EXPECT_EQ(error_kind(floats), IdxError::Kind::UnsupportedType);
}

TEST(Idx, MissingFileIsIoError) {
  try {
    load_idx("/nonexistent/dbyz.idx");
    FAIL();
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::Io);
  }
}

TEST(Idx, ToDatasetScalesPixels) {
  IdxTensor images, labels;
  images.dims = {2, 1, 2};
  images.data = {0, 255, 51, 102};
  labels.dims = {2};
  labels.data = {3, 9};
  const auto ds = idx_to_dataset(images, labels);
  ASSERT_EQ(ds.size(), 2);
  EXPECT_DOUBLE_EQ(ds.features(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(ds.features(1, 0), 0.2);
  EXPECT_EQ(ds.labels, (std::vector<int>{3, 9}));
  EXPECT_EQ(idx_to_dataset(images, labels, 1).size(), 1);
}

TEST(Idx, RealMnistHeadersWhenPresent) {
  const char* dir = std::getenv("MNIST_DIR");
  if (!dir) GTEST_SKIP() << "MNIST_DIR not set";
  const auto images = std::filesystem::path(dir) / "train-images-idx3-ubyte";
  if (!std::filesystem::exists(images)) GTEST_SKIP() << "no MNIST images in " << dir;
  const auto t = load_idx(images);
  EXPECT_EQ(t.magic(), 2051u);
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{60000, 28, 28}));
}

}  // namespace
}  // namespace dbyz
