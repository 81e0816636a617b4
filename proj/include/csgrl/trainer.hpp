#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csgrl/encoder.hpp"
#include "csgrl/hetgraph.hpp"
#include "csgrl/optim.hpp"

namespace csgrl::train {

enum class EmbedView { Schema, MetaPath, Mean };

EmbedView embed_view_from_string(const std::string& s);
std::string to_string(EmbedView v);

struct TrainConfig {
  double learning_rate = 1e-2;
  double weight_decay = 1e-5;
  double tau = 0.99;
  int epochs = 400;
  int d = 64;
  int d_att = 64;
  int d_pred = 64;
  int k_pos = 8;
  bool include_self = true;
  ad::ActivationKind activation = ad::ActivationKind::Elu;
  uint64_t seed = 0;
  EmbedView output_view = EmbedView::MetaPath;

  void validate() const;
};

/// Online parameters theta (encoder under "enc/", predictor under "pred/"),
/// target parameters pi (encoder copy, updated only by EMA), and the
/// optimizer state over theta.
struct CsgrlModel {
  TrainConfig cfg;
  enc::EncoderConfig enc_cfg;
  opt::ParamSet theta;
  opt::ParamSet pi;
  opt::AdamWState optimizer;
};

struct EpochRecord {
  double loss = 0.0;
  std::vector<double> beta_sc;  // online schema attention
  std::vector<double> beta_mp;  // online meta-path attention
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

CsgrlModel init_model(const TrainConfig& cfg, const HeteroGraph& g);

/// Two-layer predictor p_theta: act(z W1 + b1) W2 + b2.
ad::Tensor predict(CsgrlModel& m, const ad::Tensor& z, ad::Tape* tape);

struct StepResult {
  double loss = 0.0;
  std::vector<double> beta_sc;
  std::vector<double> beta_mp;
};

/// Builds the symmetrized loss on `tape` without touching any parameter:
/// cos-loss of (online schema, target meta-path) plus the swapped pairing.
/// The online attention weights land in beta_sc / beta_mp when given.
ad::Tensor symmetrized_loss(CsgrlModel& m, const HeteroGraph& g,
                            const enc::SchemaOperators& sc,
                            const std::vector<enc::MetaPathOperator>& mops,
                            const PositiveSet& positives, ad::Tape* tape,
                            std::vector<double>* beta_sc = nullptr,
                            std::vector<double>* beta_mp = nullptr);

/// One full-batch bootstrapping step: symmetrized cosine loss over both view
/// pairings, backward, AdamW on theta, EMA on pi.
StepResult train_step(CsgrlModel& m, const HeteroGraph& g,
                      const enc::SchemaOperators& sc,
                      const std::vector<enc::MetaPathOperator>& mops,
                      const PositiveSet& positives);

std::pair<CsgrlModel, TrainReport> train(const HeteroGraph& g,
                                         const std::vector<MetaPathGraph>& mpgs,
                                         const TrainConfig& cfg);

/// Online-encoder embedding in the requested view, tape-free.
Mat embed(CsgrlModel& m, const HeteroGraph& g,
          const std::vector<MetaPathGraph>& mpgs, EmbedView view);
Mat embed(CsgrlModel& m, const HeteroGraph& g,
          const std::vector<MetaPathGraph>& mpgs);

}  // namespace csgrl::train
