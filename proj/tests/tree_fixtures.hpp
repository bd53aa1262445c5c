// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

namespace testutil {

struct TreeDiff {
  std::size_t files = 0;
  std::vector<std::string> mismatches;
};

/// Byte comparison of two directory trees. Top-level entries named in
/// `skip` are ignored on both sides.
inline TreeDiff compare_trees(const std::filesystem::path& a, const std::filesystem::path& b,
                              const std::set<std::string>& skip = {}) {
  namespace fs = std::filesystem;
  auto list = [&](const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = e.path().lexically_relative(root);
      if (skip.count(rel.begin()->string())) continue;
      out.insert(rel.generic_string());
    }
    return out;
  };
  auto read = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  TreeDiff d;
  const auto la = list(a), lb = list(b);
  for (const auto& f : la) {
    if (!lb.count(f)) {
      d.mismatches.push_back("only in first: " + f);
    } else if (read(a / f) != read(b / f)) {
      d.mismatches.push_back("differs: " + f);
    }
  }
  for (const auto& f : lb)
    if (!la.count(f)) d.mismatches.push_back("only in second: " + f);
  d.files = la.size();
  return d;
}

}  // namespace testutil
