#include "csgrl/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace csgrl::io {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'S', 'G', 'R', 'L', 'B', 'I', 'N'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<char*>(b), 8);
}

void put_f64(std::ostream& out, double d) {
  put_u64(out, std::bit_cast<uint64_t>(d));
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_block(std::ostream& out, const std::string& name, const Mat& m) {
  put_u64(out, name.size());
  out.write(name.data(), std::streamsize(name.size()));
  put_u32(out, uint32_t(m.rows));
  put_u32(out, uint32_t(m.cols));
  for (double d : m.v) put_f64(out, d);
}

json config_to_json(const train::TrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["tau"] = c.tau;
  j["epochs"] = c.epochs;
  j["d"] = c.d;
  j["d_att"] = c.d_att;
  j["d_pred"] = c.d_pred;
  j["k_pos"] = c.k_pos;
  j["include_self"] = c.include_self;
  j["activation"] = ad::to_string(c.activation);
  j["seed"] = c.seed;
  j["output_view"] = train::to_string(c.output_view);
  return j;
}

train::TrainConfig config_from_json(const json& j) {
  train::TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.tau = j.at("tau").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.d = j.at("d").get<int>();
  c.d_att = j.at("d_att").get<int>();
  c.d_pred = j.at("d_pred").get<int>();
  c.k_pos = j.at("k_pos").get<int>();
  c.include_self = j.at("include_self").get<bool>();
  c.activation = ad::activation_from_string(j.at("activation").get<std::string>());
  c.seed = j.at("seed").get<uint64_t>();
  c.output_view = train::embed_view_from_string(j.at("output_view").get<std::string>());
  return c;
}

}  // namespace

std::string graph_signature(const HeteroGraph& g) {
  std::ostringstream s;
  s << "target=" << g.types[g.target_type].name << ";types=";
  for (const NodeTypeInfo& t : g.types) {
    s << t.name << ":" << t.count << ":"
      << (t.attributed() ? std::to_string(*t.feature_dim) : "-") << ",";
  }
  s << ";relations=";
  for (const Relation& r : g.relations)
    s << r.name << ":" << g.types[r.src_type].name << ">"
      << g.types[r.dst_type].name << ",";
  return s.str();
}

void save_model(const std::string& path, const train::CsgrlModel& m,
                const HeteroGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);

  json header;
  header["config"] = config_to_json(m.cfg);
  header["graph"] = graph_signature(g);
  std::string header_str = header.dump();
  put_u64(out, header_str.size());
  out.write(header_str.data(), std::streamsize(header_str.size()));

  auto theta = m.theta.all();
  auto pi = m.pi.all();
  put_u64(out, theta.size() + pi.size());
  for (const opt::Parameter* p : theta) put_block(out, "theta/" + p->name, p->value);
  for (const opt::Parameter* p : pi) put_block(out, "pi/" + p->name, p->value);
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
}

train::CsgrlModel load_model(const std::string& path, const HeteroGraph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file " + path);
  in.seekg(0, std::ios::end);
  const uint64_t file_size = uint64_t(in.tellg());
  in.seekg(0);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw ModelError(path + ": not a model file");
  uint32_t version = get_u32(in);
  if (!in) throw ModelError(path + ": truncated header");
  if (version != kVersion)
    throw ModelError(path + ": unsupported model version " +
                     std::to_string(version));

  uint64_t header_len = get_u64(in);
  if (!in || header_len > file_size)
    throw ModelError(path + ": truncated header");
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), std::streamsize(header_len));
  if (!in) throw ModelError(path + ": truncated header");
  json header = json::parse(header_str);

  std::string stored_sig = header.at("graph").get<std::string>();
  if (stored_sig != graph_signature(g))
    throw IncompatibleModel(path + ": model was trained on a different graph (" +
                            stored_sig + ")");

  train::TrainConfig cfg = config_from_json(header.at("config"));
  train::CsgrlModel m = train::init_model(cfg, g);

  uint64_t count = get_u64(in);
  if (count != m.theta.size() + m.pi.size())
    throw ModelError(path + ": parameter count mismatch");
  for (uint64_t b = 0; b < count; ++b) {
    uint64_t name_len = get_u64(in);
    if (!in || name_len > file_size)
      throw ModelError(path + ": truncated parameter block");
    std::string name(name_len, '\0');
    in.read(name.data(), std::streamsize(name_len));
    uint32_t rows = get_u32(in);
    uint32_t cols = get_u32(in);
    if (!in) throw ModelError(path + ": truncated parameter block");
    opt::Parameter* p;
    if (name.rfind("theta/", 0) == 0 && m.theta.contains(name.substr(6)))
      p = &m.theta.at(name.substr(6));
    else if (name.rfind("pi/", 0) == 0 && m.pi.contains(name.substr(3)))
      p = &m.pi.at(name.substr(3));
    else
      throw ModelError(path + ": unknown parameter block " + name);
    if (int(rows) != p->value.rows || int(cols) != p->value.cols)
      throw ModelError(path + ": shape mismatch for " + name);
    for (double& d : p->value.v) d = get_f64(in);
  }
  if (!in) throw ModelError(path + ": truncated parameter data");
  return m;
}

}  // namespace csgrl::io
