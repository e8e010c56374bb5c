#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dbyz/problems.hpp"

namespace dbyz {

/// IDX tensor of unsigned bytes (element type 0x08).
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  /// Full 32-bit magic: 0x00000800 | rank.
  std::uint32_t magic() const { return 0x00000800u | static_cast<std::uint32_t>(dims.size()); }
  std::size_t element_count() const;
};

class IdxError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedType, Truncated };

  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

IdxTensor load_idx(const std::filesystem::path& path);
IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_idx(const IdxTensor& t);
void write_idx(const std::filesystem::path& path, const IdxTensor& t);

/// Images (rank 3) scaled to [0, 1] plus labels (rank 1) as a 10-class dataset.
Dataset idx_to_dataset(const IdxTensor& images, const IdxTensor& labels, std::size_t limit = 0);

}  // namespace dbyz
