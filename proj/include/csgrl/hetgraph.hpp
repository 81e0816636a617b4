#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csgrl/csr.hpp"
#include "csgrl/mat.hpp"

namespace csgrl {

struct NodeTypeInfo {
  std::string name;
  int32_t count = 0;
  std::optional<int32_t> feature_dim;  // absent = non-attributed type

  bool attributed() const { return feature_dim.has_value(); }
};

struct RelationSpec {
  std::string name;
  int32_t src_type = -1;
  int32_t dst_type = -1;
};

struct Relation {
  std::string name;
  int32_t src_type = -1;
  int32_t dst_type = -1;
  Csr adjacency;
  int32_t reverse = -1;  // id of the paired reverse relation
};

/// Immutable typed multigraph. Edges of every declared relation are stored in
/// both directions: build_graph materializes a "<name>_rev" relation per
/// declared one so any view can aggregate along either direction.
struct HeteroGraph {
  std::vector<NodeTypeInfo> types;
  std::vector<Relation> relations;
  std::map<int32_t, Mat> features;  // type id -> (count x feature_dim), attributed only
  int32_t target_type = -1;

  int32_t type_id(const std::string& name) const;
  int32_t relation_id(const std::string& name) const;
  int32_t target_count() const { return types[target_type].count; }
};

/// A typed relation sequence anchored at the target type on both ends.
struct MetaPath {
  std::string name;
  std::vector<int32_t> steps;  // relation ids, consecutive steps chain
};

/// Composed target-to-target adjacency for one meta-path. Self-loops are
/// dropped from the adjacency; the self term of the aggregation is carried by
/// self_coeff instead.
struct MetaPathGraph {
  Csr adjacency;
  std::vector<int64_t> instance_counts;  // per edge: distinct path instances
  std::vector<double> self_coeff;        // per node: 1 / (d_i + 1)
  std::vector<double> edge_coeff;        // per edge: 1 / sqrt((d_i+1)(d_j+1))
};

/// Per target node, the mined positive-neighbor lists.
struct PositiveSet {
  std::vector<std::vector<int32_t>> neighbors;  // sorted node ids, one list per node

  int64_t total_size() const {
    int64_t s = 0;
    for (const auto& n : neighbors) s += static_cast<int64_t>(n.size());
    return s;
  }
};

HeteroGraph build_graph(std::vector<NodeTypeInfo> types,
                        const std::vector<RelationSpec>& rels,
                        const std::vector<std::vector<std::pair<int32_t, int32_t>>>& edges,
                        std::map<std::string, Mat> features,
                        const std::string& target_type);

/// Resolve relation names into a validated MetaPath over g.
MetaPath make_metapath(const HeteroGraph& g, const std::string& name,
                       const std::vector<std::string>& step_names);

MetaPathGraph compose_metapath(const HeteroGraph& g, const MetaPath& mp);

/// Rank candidates from the meta-path neighbor union by (distinct meta-paths
/// on the edge desc, total instance count desc, node id asc) and keep the top
/// k_pos; the node itself is prepended when include_self is set.
PositiveSet mine_positives(const std::vector<MetaPathGraph>& mpgs, int k_pos,
                           bool include_self = true);

std::vector<int32_t> typed_neighbors(const HeteroGraph& g, int32_t rel, int32_t node);

}  // namespace csgrl
