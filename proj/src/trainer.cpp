#include "csgrl/trainer.hpp"

#include <chrono>
#include <stdexcept>

#include "csgrl/rng.hpp"

namespace csgrl::train {

EmbedView embed_view_from_string(const std::string& s) {
  if (s == "schema") return EmbedView::Schema;
  if (s == "metapath") return EmbedView::MetaPath;
  if (s == "mean") return EmbedView::Mean;
  throw std::invalid_argument("unknown embedding view: " + s);
}

std::string to_string(EmbedView v) {
  switch (v) {
    case EmbedView::Schema: return "schema";
    case EmbedView::MetaPath: return "metapath";
    default: return "mean";
  }
}

void TrainConfig::validate() const {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in [0, 1]");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (d < 1 || d_att < 1 || d_pred < 1)
    throw std::invalid_argument("dimensions must be >= 1");
  if (k_pos < 0) throw std::invalid_argument("k_pos must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
}

CsgrlModel init_model(const TrainConfig& cfg, const HeteroGraph& g) {
  cfg.validate();
  CsgrlModel m;
  m.cfg = cfg;
  m.enc_cfg = {cfg.d, cfg.d_att, cfg.activation};
  Rng rng(cfg.seed);
  enc::add_encoder_params(m.theta, "enc/", g, m.enc_cfg, rng);

  Mat w1(cfg.d, cfg.d_pred);
  opt::glorot_init(w1, cfg.d, cfg.d_pred, rng);
  m.theta.add("pred/W1", std::move(w1));
  m.theta.add("pred/b1", Mat(1, cfg.d_pred));
  Mat w2(cfg.d_pred, cfg.d);
  opt::glorot_init(w2, cfg.d_pred, cfg.d, rng);
  m.theta.add("pred/W2", std::move(w2));
  m.theta.add("pred/b2", Mat(1, cfg.d));

  for (opt::Parameter* p : m.theta.with_prefix("enc/")) m.pi.add(p->name, p->value);

  opt::AdamWConfig oc;
  oc.lr = cfg.learning_rate;
  oc.weight_decay = cfg.weight_decay;
  m.optimizer = opt::AdamWState(oc);
  return m;
}

ad::Tensor predict(CsgrlModel& m, const ad::Tensor& z, ad::Tape* tape) {
  auto use = [&](const char* name) {
    ad::Parameter& p = m.theta.at(name);
    return tape ? tape->watch(p) : ad::constant(p.value);
  };
  ad::Tensor h = ad::activation(
      ad::add_row_bias(ad::matmul(z, use("pred/W1")), use("pred/b1")),
      m.enc_cfg.activation);
  return ad::add_row_bias(ad::matmul(h, use("pred/W2")), use("pred/b2"));
}

ad::Tensor symmetrized_loss(CsgrlModel& m, const HeteroGraph& g,
                            const enc::SchemaOperators& sc,
                            const std::vector<enc::MetaPathOperator>& mops,
                            const PositiveSet& positives, ad::Tape* tape,
                            std::vector<double>* beta_sc,
                            std::vector<double>* beta_mp) {
  // First term: online schema vs target meta-path; second term swaps.
  enc::EncodeResult z1 = enc::encode(g, sc, mops, m.enc_cfg, m.theta, "enc/",
                                     enc::ViewMode::Schema, tape);
  enc::EncodeResult z1s = enc::encode(g, sc, mops, m.enc_cfg, m.theta, "enc/",
                                      enc::ViewMode::MetaPath, tape);
  ad::Tensor p1 = predict(m, z1.z, tape);
  ad::Tensor p1s = predict(m, z1s.z, tape);

  enc::EncodeResult z2 = enc::encode(g, sc, mops, m.enc_cfg, m.pi, "enc/",
                                     enc::ViewMode::MetaPath, nullptr);
  enc::EncodeResult z2s = enc::encode(g, sc, mops, m.enc_cfg, m.pi, "enc/",
                                      enc::ViewMode::Schema, nullptr);

  if (beta_sc) *beta_sc = z1.beta;
  if (beta_mp) *beta_mp = z1s.beta;
  return ad::add(ad::cosine_pair_loss(p1, z2.z, positives),
                 ad::cosine_pair_loss(p1s, z2s.z, positives));
}

StepResult train_step(CsgrlModel& m, const HeteroGraph& g,
                      const enc::SchemaOperators& sc,
                      const std::vector<enc::MetaPathOperator>& mops,
                      const PositiveSet& positives) {
  ad::Tape tape;
  m.theta.zero_grads();
  m.pi.zero_grads();

  StepResult res;
  ad::Tensor total = symmetrized_loss(m, g, sc, mops, positives, &tape,
                                      &res.beta_sc, &res.beta_mp);
  tape.backward(total);

  opt::adamw_step(m.theta.all(), m.optimizer);
  std::vector<opt::Parameter*> enc_theta = m.theta.with_prefix("enc/");
  std::vector<const opt::Parameter*> online(enc_theta.begin(), enc_theta.end());
  opt::ema_update(m.pi.all(), online, m.cfg.tau);

  res.loss = total.scalar();
  return res;
}

std::pair<CsgrlModel, TrainReport> train(const HeteroGraph& g,
                                         const std::vector<MetaPathGraph>& mpgs,
                                         const TrainConfig& cfg) {
  if (mpgs.empty()) throw std::invalid_argument("at least one meta-path required");
  CsgrlModel model = init_model(cfg, g);
  enc::SchemaOperators sc = enc::build_schema_operators(g);
  std::vector<enc::MetaPathOperator> mops = enc::build_metapath_operators(mpgs);
  PositiveSet pos = mine_positives(mpgs, cfg.k_pos, cfg.include_self);

  TrainReport report;
  report.epochs.reserve(cfg.epochs);
  for (int e = 0; e < cfg.epochs; ++e) {
    auto t0 = std::chrono::steady_clock::now();
    StepResult s = train_step(model, g, sc, mops, pos);
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report.epochs.push_back({s.loss, std::move(s.beta_sc), std::move(s.beta_mp),
                             dt.count()});
  }
  return {std::move(model), std::move(report)};
}

Mat embed(CsgrlModel& m, const HeteroGraph& g,
          const std::vector<MetaPathGraph>& mpgs, EmbedView view) {
  enc::SchemaOperators sc = enc::build_schema_operators(g);
  std::vector<enc::MetaPathOperator> mops = enc::build_metapath_operators(mpgs);
  auto one = [&](enc::ViewMode mode) {
    return *enc::encode(g, sc, mops, m.enc_cfg, m.theta, "enc/", mode, nullptr)
                .z.value;
  };
  switch (view) {
    case EmbedView::Schema: return one(enc::ViewMode::Schema);
    case EmbedView::MetaPath: return one(enc::ViewMode::MetaPath);
    default: {
      Mat a = one(enc::ViewMode::Schema);
      Mat b = one(enc::ViewMode::MetaPath);
      for (size_t i = 0; i < a.size(); ++i) a.v[i] = 0.5 * (a.v[i] + b.v[i]);
      return a;
    }
  }
}

Mat embed(CsgrlModel& m, const HeteroGraph& g,
          const std::vector<MetaPathGraph>& mpgs) {
  return embed(m, g, mpgs, m.cfg.output_view);
}

}  // namespace csgrl::train
