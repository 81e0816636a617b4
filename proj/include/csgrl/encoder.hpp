#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "csgrl/autodiff.hpp"
#include "csgrl/hetgraph.hpp"
#include "csgrl/optim.hpp"
#include "csgrl/rng.hpp"

namespace csgrl::enc {

enum class ViewMode { Schema, MetaPath };

ViewMode view_from_string(const std::string& s);
std::string to_string(ViewMode m);

struct EncoderConfig {
  int d = 64;
  int d_att = 64;
  ad::ActivationKind activation = ad::ActivationKind::Elu;
};

/// One row-mean aggregation operator per neighbor type of the target,
/// built once per graph. Relations sharing a neighbor type are unioned.
struct SchemaOperators {
  std::vector<int32_t> neighbor_types;  // ascending type ids
  std::vector<SparseMatrix> ops;        // |V_target| x count(neighbor type)
};

SchemaOperators build_schema_operators(const HeteroGraph& g);

/// Degree-normalized aggregation operator for one composed meta-path graph.
struct MetaPathOperator {
  SparseMatrix agg;                // edge coefficients on the composed edges
  std::vector<double> self_coeff;  // per target node
};

std::vector<MetaPathOperator> build_metapath_operators(
    const std::vector<MetaPathGraph>& mpgs);

/// Registers every encoder parameter under `prefix`: W_<type> and b_<type>
/// for attributed types, a per-node table emb_<type> otherwise, plus the two
/// attention triples (att_sc_*, att_mp_*).
void add_encoder_params(opt::ParamSet& ps, const std::string& prefix,
                        const HeteroGraph& g, const EncoderConfig& cfg,
                        Rng& rng);

struct EncodeResult {
  ad::Tensor z;              // |V_target| x d
  ViewMode view;
  std::vector<double> beta;  // attention weight per channel
};

// The per-stage pieces are exposed for testing. `tape` may be null, which
// evaluates the same computation detached (constants only, no gradients).

/// h_type = sigma(X W + b) for attributed types, the table rows otherwise.
std::map<int32_t, ad::Tensor> transform_features(const HeteroGraph& g,
                                                 const EncoderConfig& cfg,
                                                 opt::ParamSet& ps,
                                                 const std::string& prefix,
                                                 ad::Tape* tape);

EncodeResult schema_view(const SchemaOperators& sc,
                         const std::map<int32_t, ad::Tensor>& h,
                         const EncoderConfig& cfg, opt::ParamSet& ps,
                         const std::string& prefix, ad::Tape* tape);

EncodeResult metapath_view(const ad::Tensor& h_target,
                           const std::vector<MetaPathOperator>& mops,
                           const EncoderConfig& cfg, opt::ParamSet& ps,
                           const std::string& prefix, ad::Tape* tape);

/// w_t = mean_i a^T tanh(W h_i + b), beta = softmax(w), z = sum_t beta_t h_t.
std::pair<ad::Tensor, std::vector<double>> attention_combine(
    const std::vector<ad::Tensor>& channels, const ad::Tensor& a,
    const ad::Tensor& W, const ad::Tensor& b);

EncodeResult encode(const HeteroGraph& g, const SchemaOperators& sc,
                    const std::vector<MetaPathOperator>& mops,
                    const EncoderConfig& cfg, opt::ParamSet& ps,
                    const std::string& prefix, ViewMode mode, ad::Tape* tape);

}  // namespace csgrl::enc
