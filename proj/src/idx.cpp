#include "dbyz/idx.hpp"

#include <fstream>
#include <iterator>

namespace dbyz {

std::size_t IdxTensor::element_count() const {
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
  using Kind = IdxError::Kind;
  if (bytes.size() < 4) throw IdxError(Kind::Truncated, "truncated header");
  if (bytes[0] != 0 || bytes[1] != 0) throw IdxError(Kind::BadMagic, "bad magic");
  if (bytes[2] != 0x08) throw IdxError(Kind::UnsupportedType, "unsupported element type");
  const std::size_t rank = bytes[3];
  if (rank == 0) throw IdxError(Kind::BadMagic, "bad magic");
  if (bytes.size() < 4 + 4 * rank) throw IdxError(Kind::Truncated, "truncated header");

  IdxTensor t;
  for (std::size_t r = 0; r < rank; ++r) t.dims.push_back(read_be32(&bytes[4 + 4 * r]));
  const std::size_t offset = 4 + 4 * rank;
  const std::size_t count = t.element_count();
  if (bytes.size() - offset < count) throw IdxError(Kind::Truncated, "truncated payload");
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return t;
}

IdxTensor load_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

std::vector<std::uint8_t> serialize_idx(const IdxTensor& t) {
  if (t.dims.empty() || t.dims.size() > 255) throw std::invalid_argument("idx rank must be in [1, 255]");
  if (t.data.size() != t.element_count()) throw std::invalid_argument("idx payload size mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * t.dims.size() + t.data.size());
  put_be32(out, t.magic());
  for (auto d : t.dims) put_be32(out, d);
  out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxTensor& t) {
  const auto bytes = serialize_idx(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IdxError(IdxError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Dataset idx_to_dataset(const IdxTensor& images, const IdxTensor& labels, std::size_t limit) {
  if (images.dims.size() != 3 || labels.dims.size() != 1 || images.dims[0] != labels.dims[0])
    throw std::invalid_argument("idx images/labels shape mismatch");
  std::size_t count = images.dims[0];
  if (limit > 0) count = std::min(count, limit);
  const std::size_t pixels = std::size_t{images.dims[1]} * images.dims[2];
  Dataset ds;
  ds.classes = 10;
  ds.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  ds.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t k = 0; k < pixels; ++k)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          images.data[r * pixels + k] / 255.0;
    ds.labels[r] = labels.data[r];
    if (ds.labels[r] > 9) throw std::invalid_argument("mnist label out of range");
  }
  return ds;
}

}  // namespace dbyz
