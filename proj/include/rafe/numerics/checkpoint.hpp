// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rafe/numerics/tensor.hpp"

namespace rafe {

// Little-endian parameter file:
//   "RAFE" | version u32 | count u32 |
//   count x { name_len u32 | name bytes | rank u32 | extents u64[rank] | f64[numel] }

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  DiffTensor tensor;
};

struct NamedTensorRef {
  std::string name;
  const DiffTensor* tensor;
};

void write_checkpoint(std::ostream& os, const std::vector<NamedTensorRef>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensorRef>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Finds `name` in a loaded checkpoint; throws if absent.
const DiffTensor& find_tensor(const std::vector<NamedTensor>& tensors, const std::string& name);

}  // namespace rafe
