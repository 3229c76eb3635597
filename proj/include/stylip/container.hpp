#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stylip/tensor.hpp"

namespace stylip {

struct NamedTensor {
  std::string name;
  Tensor value;
};

enum class ContainerKind : std::uint32_t {
  kEncoders = 1,
  kProjectors = 2,
  kDataset = 3,
};

/// Versioned flat binary file shared by encoder dumps, projector checkpoints
/// and dataset dumps.
///
/// Layout, all integers little-endian:
///   "STYLIP1"                      7 bytes magic
///   u32 kind
///   u64 n, n bytes                 config block (UTF-8 `key = value` lines)
///   u32 tensor count
///   per tensor: u32 name length, name bytes, u32 rank, rank x u64 dims,
///               numel x f64 (IEEE-754, little-endian)
struct Container {
  ContainerKind kind = ContainerKind::kEncoders;
  std::string config;
  std::vector<NamedTensor> tensors;

  const Tensor& find(std::string_view name) const;
};

std::string encode_container(const Container& c);
Container decode_container(std::string_view bytes);

// Writes to a temporary sibling file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace stylip
