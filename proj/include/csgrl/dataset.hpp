#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csgrl/hetgraph.hpp"
#include "csgrl/mat.hpp"

namespace csgrl::io {

struct Dataset {
  HeteroGraph graph;
  std::vector<int32_t> labels;  // target-type labels; empty without labels.txt
  std::vector<MetaPath> metapaths;
};

/// Reads schema.json, the per-relation edge files, per-type feature files and
/// the optional labels.txt from `dir`. Malformed content reports file and
/// line number.
Dataset load_dataset(const std::string& dir);

/// Text matrix with an `N D` header row, full double precision.
void save_matrix(const std::string& path, const Mat& m);
Mat load_matrix(const std::string& path);

void save_labels(const std::string& path, const std::vector<int32_t>& labels);

}  // namespace csgrl::io
