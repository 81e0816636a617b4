// csgrl: self-supervised heterogeneous-graph embeddings and their evaluation.
//
// Exit codes:
//   0  success
//   2  bad usage (unknown flag / missing argument)
//   3  invalid configuration value
//   4  dataset or file error
//   5  model file missing, malformed, or trained on a different graph
//   6  non-finite numerics
//   7  gradient check failed

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csgrl/dataset.hpp"
#include "csgrl/eval.hpp"
#include "csgrl/model_io.hpp"
#include "csgrl/synth.hpp"
#include "csgrl/trainer.hpp"

namespace {

using namespace csgrl;
using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void apply_train_json(train::TrainConfig& cfg, const json& j) {
  try {
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("weight_decay")) cfg.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("d")) cfg.d = j["d"].get<int>();
    if (j.contains("d_att")) cfg.d_att = j["d_att"].get<int>();
    if (j.contains("d_pred")) cfg.d_pred = j["d_pred"].get<int>();
    if (j.contains("k_pos")) cfg.k_pos = j["k_pos"].get<int>();
    if (j.contains("include_self")) cfg.include_self = j["include_self"].get<bool>();
    if (j.contains("activation"))
      cfg.activation = ad::activation_from_string(j["activation"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("output_view"))
      cfg.output_view = train::embed_view_from_string(j["output_view"].get<std::string>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
}

struct EvalSettings {
  int labels_per_class = 20;
  int num_seeds = 5;
  uint64_t base_seed = 0;
  int restarts = 10;
};

void apply_eval_json(EvalSettings& ev, const json& j) {
  try {
    if (j.contains("labels_per_class")) ev.labels_per_class = j["labels_per_class"].get<int>();
    if (j.contains("seeds")) ev.num_seeds = j["seeds"].get<int>();
    if (j.contains("seed")) ev.base_seed = j["seed"].get<uint64_t>();
    if (j.contains("restarts")) ev.restarts = j["restarts"].get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("eval config: ") + e.what());
  }
}

std::vector<MetaPathGraph> compose_all(const io::Dataset& ds) {
  std::vector<MetaPathGraph> mpgs;
  mpgs.reserve(ds.metapaths.size());
  for (const MetaPath& mp : ds.metapaths)
    mpgs.push_back(compose_metapath(ds.graph, mp));
  return mpgs;
}

void require_labels(const io::Dataset& ds) {
  if (ds.labels.empty())
    throw std::runtime_error("dataset has no labels.txt; evaluation needs labels");
}

int num_classes(const std::vector<int32_t>& labels) {
  int k = 0;
  for (int32_t l : labels) {
    if (l < 0) throw std::runtime_error("dataset labels do not cover every node");
    k = std::max(k, int(l) + 1);
  }
  return k;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= double(xs.size());
  for (double x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / double(xs.size()));
  return s;
}

void write_metrics(const std::string& out_dir, const std::string& file,
                   const std::vector<std::pair<std::string, double>>& rows) {
  std::string text;
  char buf[64];
  for (const auto& [key, value] : rows) {
    std::snprintf(buf, sizeof buf, "%.12f", value);
    text += key + " " + buf + "\n";
  }
  if (out_dir.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::filesystem::create_directories(out_dir);
  std::string path = out_dir + "/" + file;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);
  std::printf("wrote %s\n", path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSGRL: bootstrapped self-supervised embeddings on heterogeneous graphs"};
  app.require_subcommand(1);

  // gen-synth
  io::SynthSpec synth;
  std::vector<int32_t> attr_counts{80, 120};
  double synth_p = 0.2, synth_q = 0.02;
  std::string gen_out;
  auto* cmd_gen = app.add_subcommand("gen-synth", "Write a planted-partition dataset");
  cmd_gen->add_option("--out", gen_out, "output dataset directory")->required();
  cmd_gen->add_option("--seed", synth.seed, "generator seed");
  cmd_gen->add_option("--classes", synth.classes, "number of planted classes");
  cmd_gen->add_option("--targets", synth.target_count, "target node count");
  cmd_gen->add_option("--attr-counts", attr_counts, "node count per attribute type")
      ->delimiter(',');
  cmd_gen->add_option("--p", synth_p, "intra-class edge probability");
  cmd_gen->add_option("--q", synth_q, "inter-class edge probability");
  cmd_gen->add_option("--feature-dim", synth.feature_dim, "target feature dimension");
  cmd_gen->add_option("--separation", synth.separation, "class mean separation");
  cmd_gen->add_option("--noise", synth.noise, "feature noise stddev");

  // shared storage for the remaining commands
  std::string data_dir, config_path, out_dir, model_path, emb_path, view_str;
  uint64_t seed = 0;
  int epochs = 0, dim = 0, k_pos = 8, d_att = 0, d_pred = 0;
  bool no_self = false, pca = false;
  double lr = 0.0, weight_decay = 0.0, tau = 0.0;
  std::string activation_str;
  int labels_per_class = 20, num_seeds = 5, restarts = 10, k_clusters = 0;

  auto add_data = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--data", data_dir, "dataset directory");
    if (required) o->required();
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "output directory");
  };
  auto add_view = [&](CLI::App* c) {
    c->add_option("--view", view_str, "embedding view: schema|metapath|mean");
  };
  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--seed", seed, "training seed");
    c->add_option("--epochs", epochs, "training epochs");
    c->add_option("--dim", dim, "embedding dimension");
    c->add_option("--k-pos", k_pos, "positives kept per node");
    c->add_flag("--no-self-positive", no_self,
                "drop the node itself from its positive set");
    c->add_option("--lr", lr, "learning rate");
    c->add_option("--weight-decay", weight_decay, "decoupled weight decay");
    c->add_option("--tau", tau, "target EMA coefficient");
    c->add_option("--d-att", d_att, "attention dimension");
    c->add_option("--d-pred", d_pred, "predictor hidden dimension");
    c->add_option("--activation", activation_str, "activation: elu|tanh");
  };
  auto add_eval_flags = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--model", model_path, "trained model file");
    c->add_option("--embedding", emb_path, "embedding matrix file");
    c->add_option("--labels-per-class", labels_per_class, "training labels per class");
    c->add_option("--eval-seeds", num_seeds, "number of averaged seeds");
    c->add_option("--seed", seed, "base evaluation seed");
  };

  auto* cmd_train = app.add_subcommand("train", "Train a model on a dataset");
  add_data(cmd_train, false);
  add_out(cmd_train);
  add_view(cmd_train);
  add_train_flags(cmd_train);

  auto* cmd_embed = app.add_subcommand("embed", "Write embeddings from a trained model");
  add_data(cmd_embed, true);
  add_out(cmd_embed);
  add_view(cmd_embed);
  cmd_embed->add_option("--model", model_path, "trained model file")->required();
  cmd_embed->add_flag("--pca", pca, "also write a 2-D projection");

  auto* cmd_probe = app.add_subcommand("eval-probe", "Linear-probe classification metrics");
  add_data(cmd_probe, false);
  add_out(cmd_probe);
  add_view(cmd_probe);
  add_eval_flags(cmd_probe);

  auto* cmd_cluster = app.add_subcommand("eval-cluster", "K-means clustering metrics");
  add_data(cmd_cluster, false);
  add_out(cmd_cluster);
  add_view(cmd_cluster);
  add_eval_flags(cmd_cluster);
  cmd_cluster->add_option("--k", k_clusters, "cluster count (default: #classes)");
  cmd_cluster->add_option("--restarts", restarts, "k-means restarts");

  auto* cmd_inspect = app.add_subcommand("inspect-metapath", "Composed meta-path statistics");
  add_data(cmd_inspect, true);
  cmd_inspect->add_option("--k-pos", k_pos, "positives kept per node");
  cmd_inspect->add_flag("--no-self-positive", no_self,
                        "drop the node itself from its positive set");

  auto* cmd_grad = app.add_subcommand("check-grad", "Finite-difference gradient check");
  cmd_grad->add_option("--seed", seed, "seed for the check instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json cfg_json = json::object();
    if (!config_path.empty()) cfg_json = read_json_file(config_path);

    auto resolve_data = [&]() -> std::string {
      if (!data_dir.empty()) return data_dir;
      if (cfg_json.contains("dataset")) return cfg_json["dataset"].get<std::string>();
      throw std::invalid_argument("--data (or config key \"dataset\") is required");
    };
    auto resolve_out = [&]() -> std::string {
      if (!out_dir.empty()) return out_dir;
      if (cfg_json.contains("out")) return cfg_json["out"].get<std::string>();
      return "";
    };
    auto given = [](CLI::App* c, const std::string& name) {
      const CLI::Option* o = c->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    auto resolve_train_cfg = [&](CLI::App* c) {
      train::TrainConfig tc;
      if (cfg_json.contains("train")) apply_train_json(tc, cfg_json["train"]);
      if (given(c, "--seed")) tc.seed = seed;
      if (given(c, "--epochs")) tc.epochs = epochs;
      if (given(c, "--dim")) tc.d = dim;
      if (given(c, "--k-pos")) tc.k_pos = k_pos;
      if (given(c, "--no-self-positive")) tc.include_self = false;
      if (given(c, "--lr")) tc.learning_rate = lr;
      if (given(c, "--weight-decay")) tc.weight_decay = weight_decay;
      if (given(c, "--tau")) tc.tau = tau;
      if (given(c, "--d-att")) tc.d_att = d_att;
      if (given(c, "--d-pred")) tc.d_pred = d_pred;
      if (given(c, "--activation"))
        tc.activation = ad::activation_from_string(activation_str);
      if (given(c, "--view"))
        tc.output_view = train::embed_view_from_string(view_str);
      tc.validate();
      return tc;
    };
    auto resolve_eval = [&](CLI::App* c) {
      EvalSettings ev;
      if (cfg_json.contains("eval")) apply_eval_json(ev, cfg_json["eval"]);
      if (given(c, "--labels-per-class")) ev.labels_per_class = labels_per_class;
      if (given(c, "--eval-seeds")) ev.num_seeds = num_seeds;
      if (given(c, "--seed")) ev.base_seed = seed;
      if (given(c, "--restarts")) ev.restarts = restarts;
      if (ev.labels_per_class < 1 || ev.num_seeds < 1 || ev.restarts < 1)
        throw std::invalid_argument("evaluation settings must be positive");
      return ev;
    };
    auto resolve_embedding = [&](const io::Dataset& ds) -> Mat {
      if (!model_path.empty() && !emb_path.empty())
        throw std::invalid_argument("give either --model or --embedding, not both");
      if (model_path.empty() && emb_path.empty())
        throw std::invalid_argument("one of --model or --embedding is required");
      if (!emb_path.empty()) {
        Mat m = io::load_matrix(emb_path);
        if (m.rows != ds.graph.target_count())
          throw std::runtime_error(emb_path + ": row count does not match target nodes");
        return m;
      }
      train::CsgrlModel model = io::load_model(model_path, ds.graph);
      std::vector<MetaPathGraph> mpgs = compose_all(ds);
      if (view_str.empty()) return train::embed(model, ds.graph, mpgs);
      return train::embed(model, ds.graph, mpgs,
                          train::embed_view_from_string(view_str));
    };

    if (cmd_gen->parsed()) {
      synth.attr_types.clear();
      for (size_t i = 0; i < attr_counts.size(); ++i)
        synth.attr_types.push_back(
            {"a" + std::to_string(i), attr_counts[i], synth_p, synth_q});
      io::gen_synth_dir(synth, gen_out);
      io::Dataset ds = io::load_dataset(gen_out);
      int64_t edges = 0;
      for (const Relation& r : ds.graph.relations) edges += r.adjacency.nnz();
      std::printf("wrote %s: %d target nodes, %zu relations, %lld directed edges\n",
                  gen_out.c_str(), ds.graph.target_count(),
                  ds.graph.relations.size(), (long long)edges);
    } else if (cmd_train->parsed()) {
      io::Dataset ds = io::load_dataset(resolve_data());
      std::vector<MetaPathGraph> mpgs = compose_all(ds);
      train::TrainConfig tc = resolve_train_cfg(cmd_train);
      auto [model, report] = train::train(ds.graph, mpgs, tc);

      std::string out = resolve_out();
      if (out.empty()) throw std::invalid_argument("--out (or config key \"out\") is required");
      std::filesystem::create_directories(out);
      io::save_model(out + "/model.bin", model, ds.graph);
      {
        std::string path = out + "/train_log.txt";
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + path);
        for (size_t e = 0; e < report.epochs.size(); ++e) {
          const train::EpochRecord& r = report.epochs[e];
          std::fprintf(f, "%zu %.12e", e, r.loss);
          for (double b : r.beta_sc) std::fprintf(f, " %.12f", b);
          for (double b : r.beta_mp) std::fprintf(f, " %.12f", b);
          std::fputc('\n', f);
        }
        if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
      }
      double total_s = 0.0;
      for (const auto& r : report.epochs) total_s += r.seconds;
      std::printf("trained %d epochs in %.1fs: loss %.6f -> %.6f; wrote %s/model.bin\n",
                  tc.epochs, total_s, report.epochs.front().loss,
                  report.epochs.back().loss, out.c_str());
    } else if (cmd_embed->parsed()) {
      io::Dataset ds = io::load_dataset(resolve_data());
      train::CsgrlModel model = io::load_model(model_path, ds.graph);
      std::vector<MetaPathGraph> mpgs = compose_all(ds);
      Mat e = view_str.empty()
                  ? train::embed(model, ds.graph, mpgs)
                  : train::embed(model, ds.graph, mpgs,
                                 train::embed_view_from_string(view_str));
      std::string out = resolve_out();
      if (out.empty()) throw std::invalid_argument("--out is required");
      std::filesystem::create_directories(out);
      io::save_matrix(out + "/embedding.txt", e);
      std::printf("wrote %s/embedding.txt (%d x %d)\n", out.c_str(), e.rows, e.cols);
      if (pca) {
        Mat pr = eval::pca_project(e, 2);
        std::string path = out + "/projection.txt";
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + path);
        for (int i = 0; i < pr.rows; ++i) {
          int32_t label = ds.labels.empty() ? -1 : ds.labels[i];
          std::fprintf(f, "%d %.12e %.12e %d\n", i, pr(i, 0), pr(i, 1), label);
        }
        if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
        std::printf("wrote %s\n", path.c_str());
      }
    } else if (cmd_probe->parsed()) {
      io::Dataset ds = io::load_dataset(resolve_data());
      require_labels(ds);
      Mat e = resolve_embedding(ds);
      EvalSettings ev = resolve_eval(cmd_probe);
      std::vector<double> macro, micro, auc;
      for (int s = 0; s < ev.num_seeds; ++s) {
        eval::ProbeSplit split = eval::make_probe_split(
            ds.labels, ev.labels_per_class, ev.base_seed + uint64_t(s));
        eval::ProbeMetrics pm = eval::linear_probe(e, ds.labels, split);
        macro.push_back(pm.macro_f1);
        micro.push_back(pm.micro_f1);
        auc.push_back(pm.auc);
      }
      Stats ma = stats_of(macro), mi = stats_of(micro), au = stats_of(auc);
      write_metrics(resolve_out(), "metrics_probe.txt",
                    {{"macro_f1_mean", ma.mean},
                     {"macro_f1_std", ma.stddev},
                     {"micro_f1_mean", mi.mean},
                     {"micro_f1_std", mi.stddev},
                     {"auc_mean", au.mean},
                     {"auc_std", au.stddev}});
    } else if (cmd_cluster->parsed()) {
      io::Dataset ds = io::load_dataset(resolve_data());
      require_labels(ds);
      Mat e = resolve_embedding(ds);
      EvalSettings ev = resolve_eval(cmd_cluster);
      int k = k_clusters > 0 ? k_clusters : num_classes(ds.labels);
      std::vector<double> nmis, aris, sils;
      for (int s = 0; s < ev.num_seeds; ++s) {
        std::vector<int32_t> cl =
            eval::kmeans_cluster(e, k, ev.base_seed + uint64_t(s), ev.restarts);
        nmis.push_back(eval::nmi(cl, ds.labels));
        aris.push_back(eval::ari(cl, ds.labels));
        sils.push_back(eval::silhouette(e, cl));
      }
      Stats n = stats_of(nmis), a = stats_of(aris), si = stats_of(sils);
      write_metrics(resolve_out(), "metrics_cluster.txt",
                    {{"nmi_mean", n.mean},
                     {"nmi_std", n.stddev},
                     {"ari_mean", a.mean},
                     {"ari_std", a.stddev},
                     {"silhouette_mean", si.mean},
                     {"silhouette_std", si.stddev}});
    } else if (cmd_inspect->parsed()) {
      io::Dataset ds = io::load_dataset(data_dir);
      std::vector<MetaPathGraph> mpgs = compose_all(ds);
      for (size_t m = 0; m < mpgs.size(); ++m) {
        const MetaPathGraph& g = mpgs[m];
        int64_t max_deg = 0, total_inst = 0;
        for (int i = 0; i < g.adjacency.rows; ++i)
          max_deg = std::max(max_deg, g.adjacency.degree(i));
        for (int64_t c : g.instance_counts) total_inst += c;
        std::printf("%s: %d nodes, %lld edges, %lld path instances, max degree %lld\n",
                    ds.metapaths[m].name.c_str(), g.adjacency.rows,
                    (long long)g.adjacency.nnz(), (long long)total_inst,
                    (long long)max_deg);
      }
      PositiveSet pos = mine_positives(mpgs, k_pos, !no_self);
      int64_t total = pos.total_size();
      size_t mn = SIZE_MAX, mx = 0;
      for (const auto& p : pos.neighbors) {
        mn = std::min(mn, p.size());
        mx = std::max(mx, p.size());
      }
      std::printf("positives (k_pos=%d%s): %lld total, %.2f per node, list sizes %zu..%zu\n",
                  k_pos, no_self ? "" : ", self included", (long long)total,
                  double(total) / double(pos.neighbors.size()), mn, mx);
    } else if (cmd_grad->parsed()) {
      io::SynthSpec s;
      s.classes = 2;
      s.target_count = 13;
      s.attr_types = {{"a", 6, 0.5, 0.1}, {"b", 5, 0.5, 0.1}};
      s.feature_dim = 3;
      s.separation = 1.0;
      s.noise = 0.5;
      s.seed = seed;
      io::Dataset ds = io::gen_synth(s);
      std::vector<MetaPathGraph> mpgs = compose_all(ds);

      train::TrainConfig tc;
      tc.d = 6;
      tc.d_att = 5;
      tc.d_pred = 4;
      tc.k_pos = 3;
      tc.seed = seed;
      train::CsgrlModel model = train::init_model(tc, ds.graph);
      enc::SchemaOperators sc = enc::build_schema_operators(ds.graph);
      std::vector<enc::MetaPathOperator> mops = enc::build_metapath_operators(mpgs);
      PositiveSet pos = mine_positives(mpgs, tc.k_pos, tc.include_self);

      double err = ad::finite_diff_check(
          [&](ad::Tape& t) {
            return train::symmetrized_loss(model, ds.graph, sc, mops, pos, &t);
          },
          model.theta.all(), 1e-5);
      std::printf("max_rel_err %.3e (threshold 1e-4)\n", err);
      if (!(err < 1e-4)) {
        std::fprintf(stderr, "gradient check FAILED\n");
        return 7;
      }
    }
  } catch (const io::ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return 5;
  } catch (const ad::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 6;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 3;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
