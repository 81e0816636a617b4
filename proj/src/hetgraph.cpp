#include "csgrl/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace csgrl {

int32_t HeteroGraph::type_id(const std::string& name) const {
  for (size_t i = 0; i < types.size(); ++i)
    if (types[i].name == name) return static_cast<int32_t>(i);
  throw std::invalid_argument("unknown node type: " + name);
}

int32_t HeteroGraph::relation_id(const std::string& name) const {
  for (size_t i = 0; i < relations.size(); ++i)
    if (relations[i].name == name) return static_cast<int32_t>(i);
  throw std::invalid_argument("unknown relation: " + name);
}

HeteroGraph build_graph(std::vector<NodeTypeInfo> types,
                        const std::vector<RelationSpec>& rels,
                        const std::vector<std::vector<std::pair<int32_t, int32_t>>>& edges,
                        std::map<std::string, Mat> features,
                        const std::string& target_type) {
  if (edges.size() != rels.size())
    throw std::invalid_argument("build_graph: one edge list per relation required");
  if (types.size() + rels.size() <= 2)
    throw std::invalid_argument(
        "build_graph: heterogeneity violated, need |types| + |relations| > 2");

  std::set<std::string> seen;
  for (const auto& t : types) {
    if (t.count < 1)
      throw std::invalid_argument("type " + t.name + ": count must be >= 1");
    if (t.feature_dim && *t.feature_dim < 1)
      throw std::invalid_argument("type " + t.name + ": feature_dim must be positive");
    if (!seen.insert(t.name).second)
      throw std::invalid_argument("duplicate type name: " + t.name);
  }

  HeteroGraph g;
  g.types = std::move(types);

  for (size_t i = 0; i < g.types.size(); ++i) {
    const auto& t = g.types[i];
    auto it = features.find(t.name);
    if (t.attributed()) {
      if (it == features.end())
        throw std::invalid_argument("missing feature matrix for attributed type " + t.name);
      if (it->second.rows != t.count || it->second.cols != *t.feature_dim)
        throw std::invalid_argument("feature shape mismatch for type " + t.name +
                                    ": got " + shape_str(it->second) + ", expected " +
                                    std::to_string(t.count) + "x" +
                                    std::to_string(*t.feature_dim));
      g.features.emplace(static_cast<int32_t>(i), std::move(it->second));
      features.erase(it);
    } else if (it != features.end()) {
      throw std::invalid_argument("feature matrix given for non-attributed type " + t.name);
    }
  }
  if (!features.empty())
    throw std::invalid_argument("feature matrix for undeclared type " +
                                features.begin()->first);

  std::set<std::string> rel_names;
  for (size_t r = 0; r < rels.size(); ++r) {
    const auto& spec = rels[r];
    if (spec.src_type < 0 || spec.src_type >= static_cast<int32_t>(g.types.size()) ||
        spec.dst_type < 0 || spec.dst_type >= static_cast<int32_t>(g.types.size()))
      throw std::invalid_argument("relation " + spec.name + ": endpoint type out of range");
    if (!rel_names.insert(spec.name).second || !rel_names.insert(spec.name + "_rev").second)
      throw std::invalid_argument("duplicate relation name: " + spec.name);

    int32_t n_src = g.types[spec.src_type].count;
    int32_t n_dst = g.types[spec.dst_type].count;
    Csr fwd;
    try {
      fwd = Csr::from_edges(n_src, n_dst, edges[r]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("relation " + spec.name + ": " + e.what());
    }

    int32_t fid = static_cast<int32_t>(g.relations.size());
    Relation forward{spec.name, spec.src_type, spec.dst_type, std::move(fwd), fid + 1};
    Relation reverse{spec.name + "_rev", spec.dst_type, spec.src_type,
                     forward.adjacency.transposed(), fid};
    g.relations.push_back(std::move(forward));
    g.relations.push_back(std::move(reverse));
  }

  g.target_type = g.type_id(target_type);
  return g;
}

MetaPath make_metapath(const HeteroGraph& g, const std::string& name,
                       const std::vector<std::string>& step_names) {
  MetaPath mp;
  mp.name = name;
  for (const auto& s : step_names) mp.steps.push_back(g.relation_id(s));

  if (mp.steps.empty()) throw std::invalid_argument("meta-path " + name + ": empty");
  if (g.relations[mp.steps.front()].src_type != g.target_type ||
      g.relations[mp.steps.back()].dst_type != g.target_type)
    throw std::invalid_argument("meta-path " + name +
                                ": must start and end at the target type");
  for (size_t k = 0; k + 1 < mp.steps.size(); ++k)
    if (g.relations[mp.steps[k]].dst_type != g.relations[mp.steps[k + 1]].src_type)
      throw std::invalid_argument("meta-path " + name + ": steps do not chain at position " +
                                  std::to_string(k));
  return mp;
}

namespace {

struct CountedCsr {
  Csr s;
  std::vector<int64_t> counts;
};

// One SpGEMM step over nonnegative integer counts; rows stay sorted.
CountedCsr multiply(const CountedCsr& a, const Csr& b) {
  CountedCsr out;
  out.s.rows = a.s.rows;
  out.s.cols = b.cols;
  out.s.row_offsets.assign(a.s.rows + 1, 0);

  std::vector<int64_t> acc(b.cols, 0);
  std::vector<int32_t> touched;
  for (int i = 0; i < a.s.rows; ++i) {
    touched.clear();
    for (int64_t e = a.s.row_offsets[i]; e < a.s.row_offsets[i + 1]; ++e) {
      int32_t mid = a.s.col_indices[e];
      int64_t c = a.counts[e];
      for (int64_t f = b.row_offsets[mid]; f < b.row_offsets[mid + 1]; ++f) {
        int32_t j = b.col_indices[f];
        if (acc[j] == 0) touched.push_back(j);
        acc[j] += c;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int32_t j : touched) {
      out.s.col_indices.push_back(j);
      out.counts.push_back(acc[j]);
      acc[j] = 0;
    }
    out.s.row_offsets[i + 1] = static_cast<int64_t>(out.s.col_indices.size());
  }
  return out;
}

}  // namespace

MetaPathGraph compose_metapath(const HeteroGraph& g, const MetaPath& mp) {
  if (mp.steps.empty())
    throw std::invalid_argument("compose_metapath: empty meta-path");
  for (int32_t r : mp.steps)
    if (r < 0 || r >= static_cast<int32_t>(g.relations.size()))
      throw std::invalid_argument("compose_metapath: relation id out of range");
  if (g.relations[mp.steps.front()].src_type != g.target_type ||
      g.relations[mp.steps.back()].dst_type != g.target_type)
    throw std::invalid_argument("compose_metapath: meta-path " + mp.name +
                                " not anchored at the target type");
  for (size_t k = 0; k + 1 < mp.steps.size(); ++k)
    if (g.relations[mp.steps[k]].dst_type != g.relations[mp.steps[k + 1]].src_type)
      throw std::invalid_argument("compose_metapath: meta-path " + mp.name +
                                  " does not chain at step " + std::to_string(k));

  const Csr& first = g.relations[mp.steps[0]].adjacency;
  CountedCsr acc{first, std::vector<int64_t>(first.nnz(), 1)};
  for (size_t k = 1; k < mp.steps.size(); ++k)
    acc = multiply(acc, g.relations[mp.steps[k]].adjacency);

  // Drop the diagonal: the self term is carried separately.
  MetaPathGraph out;
  out.adjacency.rows = acc.s.rows;
  out.adjacency.cols = acc.s.cols;
  out.adjacency.row_offsets.assign(acc.s.rows + 1, 0);
  for (int i = 0; i < acc.s.rows; ++i) {
    for (int64_t e = acc.s.row_offsets[i]; e < acc.s.row_offsets[i + 1]; ++e) {
      if (acc.s.col_indices[e] == i) continue;
      out.adjacency.col_indices.push_back(acc.s.col_indices[e]);
      out.instance_counts.push_back(acc.counts[e]);
    }
    out.adjacency.row_offsets[i + 1] = static_cast<int64_t>(out.adjacency.col_indices.size());
  }

  // The compositions used here run out through a relation chain and back
  // through its reverses, so the result must be symmetric with matching
  // instance counts. Verify rather than silently symmetrize.
  Csr t = out.adjacency.transposed();
  if (t.col_indices != out.adjacency.col_indices ||
      t.row_offsets != out.adjacency.row_offsets)
    throw std::runtime_error("compose_metapath: composed adjacency for " + mp.name +
                             " is not symmetric; use a palindromic relation sequence");
  {
    std::vector<int64_t> t_counts(out.instance_counts.size());
    std::vector<int64_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (int i = 0; i < out.adjacency.rows; ++i)
      for (int64_t e = out.adjacency.row_offsets[i]; e < out.adjacency.row_offsets[i + 1]; ++e)
        t_counts[cursor[out.adjacency.col_indices[e]]++] = out.instance_counts[e];
    if (t_counts != out.instance_counts)
      throw std::runtime_error("compose_metapath: asymmetric instance counts for " + mp.name);
  }

  int n = out.adjacency.rows;
  out.self_coeff.resize(n);
  for (int i = 0; i < n; ++i)
    out.self_coeff[i] = 1.0 / static_cast<double>(out.adjacency.degree(i) + 1);
  out.edge_coeff.resize(out.adjacency.nnz());
  for (int i = 0; i < n; ++i) {
    double di = static_cast<double>(out.adjacency.degree(i) + 1);
    for (int64_t e = out.adjacency.row_offsets[i]; e < out.adjacency.row_offsets[i + 1]; ++e) {
      double dj = static_cast<double>(out.adjacency.degree(out.adjacency.col_indices[e]) + 1);
      out.edge_coeff[e] = 1.0 / std::sqrt(di * dj);
    }
  }
  return out;
}

PositiveSet mine_positives(const std::vector<MetaPathGraph>& mpgs, int k_pos,
                           bool include_self) {
  if (mpgs.empty()) throw std::invalid_argument("mine_positives: no meta-path graphs");
  if (k_pos < 0) throw std::invalid_argument("mine_positives: k_pos must be >= 0");
  int n = mpgs[0].adjacency.rows;
  for (const auto& m : mpgs)
    if (m.adjacency.rows != n)
      throw std::invalid_argument("mine_positives: meta-path graphs disagree on node count");

  PositiveSet out;
  out.neighbors.resize(n);

  struct Cand {
    int32_t id;
    int32_t paths;
    int64_t instances;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < n; ++i) {
    cands.clear();
    for (const auto& m : mpgs) {
      for (int64_t e = m.adjacency.row_offsets[i]; e < m.adjacency.row_offsets[i + 1]; ++e) {
        int32_t j = m.adjacency.col_indices[e];
        auto it = std::find_if(cands.begin(), cands.end(),
                               [j](const Cand& c) { return c.id == j; });
        if (it == cands.end())
          cands.push_back({j, 1, m.instance_counts[e]});
        else {
          it->paths += 1;
          it->instances += m.instance_counts[e];
        }
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.paths != b.paths) return a.paths > b.paths;
      if (a.instances != b.instances) return a.instances > b.instances;
      return a.id < b.id;
    });
    auto& ni = out.neighbors[i];
    if (include_self) ni.push_back(i);
    for (int k = 0; k < k_pos && k < static_cast<int>(cands.size()); ++k)
      ni.push_back(cands[k].id);
    std::sort(ni.begin(), ni.end());
  }
  return out;
}

std::vector<int32_t> typed_neighbors(const HeteroGraph& g, int32_t rel, int32_t node) {
  if (rel < 0 || rel >= static_cast<int32_t>(g.relations.size()))
    throw std::invalid_argument("typed_neighbors: relation id out of range");
  const Csr& adj = g.relations[rel].adjacency;
  if (node < 0 || node >= adj.rows)
    throw std::invalid_argument("typed_neighbors: node id out of range");
  auto r = adj.row(node);
  return {r.begin(), r.end()};
}

}  // namespace csgrl
