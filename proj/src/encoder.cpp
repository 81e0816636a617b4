#include "csgrl/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace csgrl::enc {

ViewMode view_from_string(const std::string& s) {
  if (s == "schema") return ViewMode::Schema;
  if (s == "metapath") return ViewMode::MetaPath;
  throw std::invalid_argument("unknown view mode: " + s);
}

std::string to_string(ViewMode m) {
  return m == ViewMode::Schema ? "schema" : "metapath";
}

SchemaOperators build_schema_operators(const HeteroGraph& g) {
  // Union the edges of every target-outgoing relation per neighbor type.
  std::map<int32_t, std::vector<std::pair<int32_t, int32_t>>> edges_by_type;
  for (const Relation& r : g.relations) {
    if (r.src_type != g.target_type) continue;
    auto& edges = edges_by_type[r.dst_type];
    for (int i = 0; i < r.adjacency.rows; ++i)
      for (int32_t j : r.adjacency.row(i)) edges.emplace_back(i, j);
  }
  if (edges_by_type.empty())
    throw std::invalid_argument("target type has no incident relations");
  SchemaOperators sc;
  for (auto& [type, edges] : edges_by_type) {
    Csr u = Csr::from_edges(g.target_count(), g.types[type].count, edges);
    sc.neighbor_types.push_back(type);
    sc.ops.push_back(SparseMatrix::row_mean(u));
  }
  return sc;
}

std::vector<MetaPathOperator> build_metapath_operators(
    const std::vector<MetaPathGraph>& mpgs) {
  std::vector<MetaPathOperator> out;
  out.reserve(mpgs.size());
  for (const MetaPathGraph& m : mpgs) {
    MetaPathOperator op;
    op.agg = SparseMatrix(m.adjacency, m.edge_coeff);
    op.self_coeff = m.self_coeff;
    out.push_back(std::move(op));
  }
  return out;
}

void add_encoder_params(opt::ParamSet& ps, const std::string& prefix,
                        const HeteroGraph& g, const EncoderConfig& cfg,
                        Rng& rng) {
  for (size_t t = 0; t < g.types.size(); ++t) {
    const NodeTypeInfo& ti = g.types[t];
    if (ti.attributed()) {
      Mat w(*ti.feature_dim, cfg.d);
      opt::glorot_init(w, *ti.feature_dim, cfg.d, rng);
      ps.add(prefix + "W_" + ti.name, std::move(w));
      ps.add(prefix + "b_" + ti.name, Mat(1, cfg.d));
    } else {
      Mat e(ti.count, cfg.d);
      opt::glorot_init(e, ti.count, cfg.d, rng);
      ps.add(prefix + "emb_" + ti.name, std::move(e));
    }
  }
  for (const char* mode : {"sc", "mp"}) {
    Mat a(1, cfg.d_att);
    opt::glorot_init(a, cfg.d_att, 1, rng);
    Mat w(cfg.d_att, cfg.d);
    opt::glorot_init(w, cfg.d, cfg.d_att, rng);
    std::string base = prefix + "att_" + mode + "_";
    ps.add(base + "a", std::move(a));
    ps.add(base + "W", std::move(w));
    ps.add(base + "b", Mat(1, cfg.d_att));
  }
}

static ad::Tensor use(opt::ParamSet& ps, const std::string& name,
                      ad::Tape* tape) {
  ad::Parameter& p = ps.at(name);
  return tape ? tape->watch(p) : ad::constant(p.value);
}

std::map<int32_t, ad::Tensor> transform_features(const HeteroGraph& g,
                                                 const EncoderConfig& cfg,
                                                 opt::ParamSet& ps,
                                                 const std::string& prefix,
                                                 ad::Tape* tape) {
  std::map<int32_t, ad::Tensor> h;
  for (size_t t = 0; t < g.types.size(); ++t) {
    const NodeTypeInfo& ti = g.types[t];
    int32_t id = static_cast<int32_t>(t);
    if (ti.attributed()) {
      ad::Tensor x = ad::constant(g.features.at(id));
      ad::Tensor w = use(ps, prefix + "W_" + ti.name, tape);
      ad::Tensor b = use(ps, prefix + "b_" + ti.name, tape);
      h.emplace(id, ad::activation(ad::add_row_bias(ad::matmul(x, w), b),
                                   cfg.activation));
    } else {
      h.emplace(id, use(ps, prefix + "emb_" + ti.name, tape));
    }
  }
  return h;
}

EncodeResult schema_view(const SchemaOperators& sc,
                         const std::map<int32_t, ad::Tensor>& h,
                         const EncoderConfig& cfg, opt::ParamSet& ps,
                         const std::string& prefix, ad::Tape* tape) {
  std::vector<ad::Tensor> channels;
  channels.reserve(sc.neighbor_types.size());
  for (size_t m = 0; m < sc.neighbor_types.size(); ++m) {
    const ad::Tensor& hm = h.at(sc.neighbor_types[m]);
    channels.push_back(ad::activation(ad::spmm(sc.ops[m], hm), cfg.activation));
  }
  auto [z, beta] = attention_combine(channels, use(ps, prefix + "att_sc_a", tape),
                                     use(ps, prefix + "att_sc_W", tape),
                                     use(ps, prefix + "att_sc_b", tape));
  return {z, ViewMode::Schema, beta};
}

EncodeResult metapath_view(const ad::Tensor& h_target,
                           const std::vector<MetaPathOperator>& mops,
                           const EncoderConfig& cfg, opt::ParamSet& ps,
                           const std::string& prefix, ad::Tape* tape) {
  if (mops.empty()) throw std::invalid_argument("no meta-path graphs given");
  std::vector<ad::Tensor> channels;
  channels.reserve(mops.size());
  for (const MetaPathOperator& op : mops) {
    if (op.agg.rows() != h_target.rows())
      throw std::invalid_argument("meta-path graph node count mismatch");
    ad::Tensor self = ad::row_scale(h_target, op.self_coeff);
    channels.push_back(ad::activation(
        ad::add(self, ad::spmm(op.agg, h_target)), cfg.activation));
  }
  auto [z, beta] = attention_combine(channels, use(ps, prefix + "att_mp_a", tape),
                                     use(ps, prefix + "att_mp_W", tape),
                                     use(ps, prefix + "att_mp_b", tape));
  return {z, ViewMode::MetaPath, beta};
}

std::pair<ad::Tensor, std::vector<double>> attention_combine(
    const std::vector<ad::Tensor>& channels, const ad::Tensor& a,
    const ad::Tensor& W, const ad::Tensor& b) {
  if (channels.empty()) throw std::invalid_argument("empty channel list");
  ad::Tensor wt = ad::transpose(W);
  ad::Tensor at = ad::transpose(a);
  std::vector<ad::Tensor> scores;
  scores.reserve(channels.size());
  for (const ad::Tensor& h : channels) {
    ad::Tensor proj = ad::activation(ad::add_row_bias(ad::matmul(h, wt), b),
                                     ad::ActivationKind::Tanh);
    scores.push_back(ad::mean_rows(ad::matmul(proj, at)));
  }
  ad::Tensor beta = ad::softmax_vec(ad::concat_scalars(scores));
  ad::Tensor z = ad::weighted_sum(channels, beta);
  return {z, beta.value->v};
}

EncodeResult encode(const HeteroGraph& g, const SchemaOperators& sc,
                    const std::vector<MetaPathOperator>& mops,
                    const EncoderConfig& cfg, opt::ParamSet& ps,
                    const std::string& prefix, ViewMode mode, ad::Tape* tape) {
  std::map<int32_t, ad::Tensor> h =
      transform_features(g, cfg, ps, prefix, tape);
  if (mode == ViewMode::Schema)
    return schema_view(sc, h, cfg, ps, prefix, tape);
  return metapath_view(h.at(g.target_type), mops, cfg, ps, prefix, tape);
}

}  // namespace csgrl::enc
