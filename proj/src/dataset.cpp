#include "csgrl/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace csgrl::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail_at(const std::string& file, int line,
                          const std::string& msg) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<std::pair<int32_t, int32_t>> read_edges(const std::string& path,
                                                    int32_t src_count,
                                                    int32_t dst_count) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::pair<int32_t, int32_t>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::istringstream ss(line);
    int64_t a, b;
    if (!(ss >> a >> b)) fail_at(path, lineno, "expected 'src dst'");
    std::string rest;
    if (ss >> rest) fail_at(path, lineno, "trailing content: " + rest);
    if (a < 0 || a >= src_count)
      fail_at(path, lineno,
              "source index " + std::to_string(a) + " out of range [0, " +
                  std::to_string(src_count) + ")");
    if (b < 0 || b >= dst_count)
      fail_at(path, lineno,
              "destination index " + std::to_string(b) + " out of range [0, " +
                  std::to_string(dst_count) + ")");
    edges.emplace_back(int32_t(a), int32_t(b));
  }
  return edges;
}

Mat read_features(const std::string& path, int32_t expect_rows) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) fail_at(path, 1, "missing 'N D' header");
  std::istringstream head(line);
  int64_t n, d;
  if (!(head >> n >> d) || n < 0 || d < 1)
    fail_at(path, 1, "malformed 'N D' header");
  if (n != expect_rows)
    fail_at(path, 1,
            "row count " + std::to_string(n) + " does not match schema count " +
                std::to_string(expect_rows));
  Mat m(static_cast<int>(n), static_cast<int>(d));
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail_at(path, i + 2, "unexpected end of file");
    std::istringstream ss(line);
    for (int j = 0; j < d; ++j)
      if (!(ss >> m(i, j)))
        fail_at(path, i + 2, "expected " + std::to_string(d) + " values");
    std::string rest;
    if (ss >> rest) fail_at(path, i + 2, "trailing content: " + rest);
  }
  return m;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  std::string schema_path = dir + "/schema.json";
  json schema;
  try {
    std::ifstream in = open_or_throw(schema_path);
    schema = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(schema_path + ": " + e.what());
  }

  std::vector<NodeTypeInfo> types;
  std::map<std::string, Mat> features;
  try {
    for (const json& t : schema.at("types")) {
      NodeTypeInfo info;
      info.name = t.at("name").get<std::string>();
      info.count = t.at("count").get<int32_t>();
      if (t.contains("feature_dim"))
        info.feature_dim = t.at("feature_dim").get<int32_t>();
      types.push_back(info);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(schema_path + ": types: " + e.what());
  }

  auto type_index = [&](const std::string& name) -> int32_t {
    for (size_t i = 0; i < types.size(); ++i)
      if (types[i].name == name) return int32_t(i);
    throw std::runtime_error(schema_path + ": unknown node type '" + name + "'");
  };

  std::vector<RelationSpec> rels;
  std::vector<std::vector<std::pair<int32_t, int32_t>>> edges;
  try {
    for (const json& r : schema.at("relations")) {
      RelationSpec spec;
      spec.name = r.at("name").get<std::string>();
      spec.src_type = type_index(r.at("src").get<std::string>());
      spec.dst_type = type_index(r.at("dst").get<std::string>());
      rels.push_back(spec);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(schema_path + ": relations: " + e.what());
  }

  for (const RelationSpec& r : rels)
    edges.push_back(read_edges(dir + "/edges_" + r.name + ".txt",
                               types[r.src_type].count,
                               types[r.dst_type].count));

  for (const NodeTypeInfo& t : types)
    if (t.attributed())
      features.emplace(t.name, read_features(dir + "/features_" + t.name + ".txt",
                                             t.count));

  std::string target;
  try {
    target = schema.at("target_type").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error(schema_path + ": target_type: " + e.what());
  }

  Dataset ds;
  ds.graph = build_graph(types, rels, edges, std::move(features), target);

  try {
    for (const json& m : schema.at("metapaths")) {
      std::string name = m.at("name").get<std::string>();
      std::vector<std::string> steps;
      for (const json& s : m.at("steps")) steps.push_back(s.get<std::string>());
      ds.metapaths.push_back(make_metapath(ds.graph, name, steps));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(schema_path + ": metapaths: " + e.what());
  }

  std::string labels_path = dir + "/labels.txt";
  if (std::ifstream probe(labels_path); probe) {
    ds.labels.assign(ds.graph.target_count(), -1);
    std::string line;
    int lineno = 0;
    while (std::getline(probe, line)) {
      ++lineno;
      if (blank(line)) continue;
      std::istringstream ss(line);
      int64_t node, label;
      if (!(ss >> node >> label)) fail_at(labels_path, lineno, "expected 'node label'");
      if (node < 0 || node >= ds.graph.target_count())
        fail_at(labels_path, lineno, "node index out of range");
      if (label < 0) fail_at(labels_path, lineno, "negative label");
      ds.labels[node] = int32_t(label);
    }
  }
  return ds;
}

void save_matrix(const std::string& path, const Mat& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fprintf(f, "%d %d\n", m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j)
      std::fprintf(f, j ? " %.17g" : "%.17g", m(i, j));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

Mat load_matrix(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) fail_at(path, 1, "missing 'N D' header");
  std::istringstream head(line);
  int64_t n, d;
  if (!(head >> n >> d) || n < 0 || d < 1)
    fail_at(path, 1, "malformed 'N D' header");
  Mat m(static_cast<int>(n), static_cast<int>(d));
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) fail_at(path, i + 2, "unexpected end of file");
    std::istringstream ss(line);
    for (int j = 0; j < d; ++j)
      if (!(ss >> m(i, j)))
        fail_at(path, i + 2, "expected " + std::to_string(d) + " values");
  }
  return m;
}

void save_labels(const std::string& path, const std::vector<int32_t>& labels) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  for (size_t i = 0; i < labels.size(); ++i)
    std::fprintf(f, "%zu %d\n", i, labels[i]);
  if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

}  // namespace csgrl::io
