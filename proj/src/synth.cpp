#include "csgrl/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "csgrl/rng.hpp"
#include "json.hpp"

namespace csgrl::io {

void SynthSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (target_count < classes)
    throw std::invalid_argument("fewer target nodes than classes");
  if (attr_types.empty())
    throw std::invalid_argument("need at least one attribute type");
  for (const AttrTypeSpec& a : attr_types) {
    if (a.count < 1) throw std::invalid_argument("attribute type count must be >= 1");
    if (!(0.0 <= a.q && a.q < a.p && a.p <= 1.0))
      throw std::invalid_argument("require 0 <= q < p <= 1 for type " + a.name);
  }
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
}

namespace {

struct Raw {
  std::vector<NodeTypeInfo> types;
  std::vector<RelationSpec> rels;
  std::vector<std::vector<std::pair<int32_t, int32_t>>> edges;
  Mat features;
  std::vector<int32_t> labels;
  std::vector<std::vector<std::string>> metapath_steps;
};

Raw generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Raw raw;

  NodeTypeInfo target;
  target.name = "t";
  target.count = spec.target_count;
  target.feature_dim = spec.feature_dim;
  raw.types.push_back(target);
  for (const AttrTypeSpec& a : spec.attr_types) {
    NodeTypeInfo info;
    info.name = a.name;
    info.count = a.count;
    raw.types.push_back(info);
  }

  raw.labels.resize(spec.target_count);
  for (int32_t i = 0; i < spec.target_count; ++i)
    raw.labels[i] = i % spec.classes;

  for (size_t t = 0; t < spec.attr_types.size(); ++t) {
    const AttrTypeSpec& a = spec.attr_types[t];
    RelationSpec rel;
    rel.name = "r" + std::to_string(t);
    rel.src_type = 0;
    rel.dst_type = int32_t(t + 1);
    raw.rels.push_back(rel);

    std::vector<std::pair<int32_t, int32_t>> e;
    for (int32_t i = 0; i < spec.target_count; ++i)
      for (int32_t j = 0; j < a.count; ++j) {
        double prob = raw.labels[i] == j % spec.classes ? a.p : a.q;
        if (rng.uniform() < prob) e.emplace_back(i, j);
      }
    raw.edges.push_back(std::move(e));
    raw.metapath_steps.push_back({rel.name, rel.name + "_rev"});
  }

  raw.features = Mat(spec.target_count, spec.feature_dim);
  for (int32_t i = 0; i < spec.target_count; ++i) {
    int mean_axis = raw.labels[i] % spec.feature_dim;
    for (int f = 0; f < spec.feature_dim; ++f)
      raw.features(i, f) = (f == mean_axis ? spec.separation : 0.0) +
                           spec.noise * rng.normal();
  }
  return raw;
}

}  // namespace

Dataset gen_synth(const SynthSpec& spec) {
  Raw raw = generate(spec);
  Dataset ds;
  std::map<std::string, Mat> features;
  features.emplace("t", raw.features);
  ds.graph = build_graph(raw.types, raw.rels, raw.edges, std::move(features), "t");
  ds.labels = std::move(raw.labels);
  for (size_t t = 0; t < raw.metapath_steps.size(); ++t)
    ds.metapaths.push_back(make_metapath(ds.graph, "M" + std::to_string(t),
                                         raw.metapath_steps[t]));
  return ds;
}

void gen_synth_dir(const SynthSpec& spec, const std::string& dir) {
  Raw raw = generate(spec);
  std::filesystem::create_directories(dir);

  nlohmann::json schema;
  schema["target_type"] = "t";
  for (const NodeTypeInfo& t : raw.types) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["count"] = t.count;
    if (t.attributed()) jt["feature_dim"] = *t.feature_dim;
    schema["types"].push_back(jt);
  }
  for (const RelationSpec& r : raw.rels) {
    nlohmann::json jr;
    jr["name"] = r.name;
    jr["src"] = raw.types[r.src_type].name;
    jr["dst"] = raw.types[r.dst_type].name;
    schema["relations"].push_back(jr);
  }
  for (size_t t = 0; t < raw.metapath_steps.size(); ++t) {
    nlohmann::json jm;
    jm["name"] = "M" + std::to_string(t);
    jm["steps"] = raw.metapath_steps[t];
    schema["metapaths"].push_back(jm);
  }
  std::ofstream out(dir + "/schema.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/schema.json");
  out << schema.dump(2) << "\n";
  out.close();
  if (!out) throw std::runtime_error("write failed: " + dir + "/schema.json");

  for (size_t t = 0; t < raw.rels.size(); ++t) {
    std::string path = dir + "/edges_" + raw.rels[t].name + ".txt";
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& [a, b] : raw.edges[t]) std::fprintf(f, "%d %d\n", a, b);
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
  }

  save_matrix(dir + "/features_t.txt", raw.features);
  save_labels(dir + "/labels.txt", raw.labels);
}

}  // namespace csgrl::io
