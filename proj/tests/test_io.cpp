#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csgrl/dataset.hpp"
#include "csgrl/model_io.hpp"
#include "csgrl/rng.hpp"
#include "csgrl/synth.hpp"
#include "csgrl/trainer.hpp"
#include "doctest.h"

using namespace csgrl;

namespace {

std::string fresh_dir(const std::string& tag) {
  static int counter = 0;
  std::string dir = (std::filesystem::temp_directory_path() /
                     ("csgrl_io_" + tag + "_" + std::to_string(counter++)))
                        .string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

io::SynthSpec tiny_spec() {
  io::SynthSpec spec;
  spec.classes = 2;
  spec.target_count = 14;
  spec.attr_types = {{"a", 6, 0.6, 0.1}, {"b", 5, 0.5, 0.05}};
  spec.feature_dim = 3;
  spec.separation = 1.0;
  spec.noise = 0.4;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("matrix roundtrip preserves every bit") {
    std::string dir = fresh_dir("mat");
    Mat m(7, 5);
    Rng rng(123);
    for (double& v : m.v) v = rng.normal() * 1e3;
    m(0, 0) = 1.0 / 3.0;
    m(1, 1) = 1e-308;
    m(2, 2) = -7.25e17;
    m(3, 3) = 0.0;
    m(4, 4) = 0.1;

    std::string path = dir + "/m.txt";
    io::save_matrix(path, m);
    Mat back = io::load_matrix(path);
    REQUIRE(back.rows == m.rows);
    REQUIRE(back.cols == m.cols);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * m.v.size()) == 0);

    std::istringstream head(slurp(path));
    int n = 0, d = 0;
    head >> n >> d;
    CHECK(n == 7);
    CHECK(d == 5);
  }

  TEST_CASE("matrix loader reports file and line on damage") {
    std::string dir = fresh_dir("badmat");

    SUBCASE("missing file") {
      CHECK_THROWS_WITH_AS(io::load_matrix(dir + "/nope.txt"),
                           doctest::Contains("nope.txt"), std::runtime_error);
    }
    SUBCASE("bad header") {
      spit(dir + "/h.txt", "3\n");
      CHECK_THROWS_WITH_AS(io::load_matrix(dir + "/h.txt"),
                           doctest::Contains("h.txt:1"), std::runtime_error);
    }
    SUBCASE("short row") {
      spit(dir + "/s.txt", "2 3\n1 2 3\n4 5\n");
      CHECK_THROWS_WITH_AS(io::load_matrix(dir + "/s.txt"),
                           doctest::Contains("s.txt:3"), std::runtime_error);
    }
    SUBCASE("missing row") {
      spit(dir + "/t.txt", "2 2\n1 2\n");
      CHECK_THROWS_WITH_AS(io::load_matrix(dir + "/t.txt"),
                           doctest::Contains("t.txt:3"), std::runtime_error);
    }
    SUBCASE("non numeric entry") {
      spit(dir + "/x.txt", "1 2\n1 frog\n");
      CHECK_THROWS_WITH_AS(io::load_matrix(dir + "/x.txt"),
                           doctest::Contains("x.txt:2"), std::runtime_error);
    }
  }

  TEST_CASE("synthetic directory round trips through the loader") {
    io::SynthSpec spec = tiny_spec();
    io::Dataset mem = io::gen_synth(spec);
    std::string dir = fresh_dir("synth");
    io::gen_synth_dir(spec, dir);
    io::Dataset disk = io::load_dataset(dir);

    REQUIRE(disk.graph.types.size() == mem.graph.types.size());
    for (size_t t = 0; t < mem.graph.types.size(); ++t) {
      CHECK(disk.graph.types[t].name == mem.graph.types[t].name);
      CHECK(disk.graph.types[t].count == mem.graph.types[t].count);
      CHECK(disk.graph.types[t].feature_dim == mem.graph.types[t].feature_dim);
    }
    CHECK(disk.graph.target_type == mem.graph.target_type);
    CHECK(disk.labels == mem.labels);

    REQUIRE(disk.graph.relations.size() == mem.graph.relations.size());
    for (size_t r = 0; r < mem.graph.relations.size(); ++r) {
      const Relation& x = disk.graph.relations[r];
      const Relation& y = mem.graph.relations[r];
      CHECK(x.name == y.name);
      CHECK(x.src_type == y.src_type);
      CHECK(x.dst_type == y.dst_type);
      CHECK(x.reverse == y.reverse);
      CHECK(x.adjacency.row_offsets == y.adjacency.row_offsets);
      CHECK(x.adjacency.col_indices == y.adjacency.col_indices);
    }

    const Mat& fx = disk.graph.features.at(disk.graph.target_type);
    const Mat& fy = mem.graph.features.at(mem.graph.target_type);
    REQUIRE(fx.rows == fy.rows);
    REQUIRE(fx.cols == fy.cols);
    CHECK(std::memcmp(fx.data(), fy.data(), sizeof(double) * fy.v.size()) == 0);

    REQUIRE(disk.metapaths.size() == mem.metapaths.size());
    for (size_t m = 0; m < mem.metapaths.size(); ++m) {
      CHECK(disk.metapaths[m].name == mem.metapaths[m].name);
      CHECK(disk.metapaths[m].steps == mem.metapaths[m].steps);
    }
  }

  TEST_CASE("same seed regenerates byte identical files") {
    io::SynthSpec spec = tiny_spec();
    std::string d1 = fresh_dir("regen1");
    std::string d2 = fresh_dir("regen2");
    io::gen_synth_dir(spec, d1);
    io::gen_synth_dir(spec, d2);
    for (const char* name : {"schema.json", "edges_r0.txt", "edges_r1.txt",
                             "features_t.txt", "labels.txt"}) {
      CAPTURE(name);
      CHECK(slurp(d1 + "/" + name) == slurp(d2 + "/" + name));
    }

    spec.seed = 78;
    std::string d3 = fresh_dir("regen3");
    io::gen_synth_dir(spec, d3);
    CHECK(slurp(d1 + "/edges_r0.txt") != slurp(d3 + "/edges_r0.txt"));
  }

  TEST_CASE("extreme block probabilities give the exact planted structure") {
    io::SynthSpec spec;
    spec.classes = 3;
    spec.target_count = 9;
    spec.attr_types = {{"a", 6, 1.0, 0.0}};
    spec.feature_dim = 2;
    spec.seed = 5;
    io::Dataset ds = io::gen_synth(spec);

    int32_t rel = ds.graph.relation_id("r0");
    for (int32_t i = 0; i < 9; ++i) {
      std::vector<int32_t> want;
      for (int32_t j = 0; j < 6; ++j)
        if (ds.labels[i] == j % 3) want.push_back(j);
      CHECK(typed_neighbors(ds.graph, rel, i) == want);
    }
  }

  TEST_CASE("generator rejects bad specs") {
    io::SynthSpec spec = tiny_spec();
    SUBCASE("one class") {
      spec.classes = 1;
      CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("p not above q") {
      spec.attr_types[0].p = 0.1;
      spec.attr_types[0].q = 0.1;
      CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("no attribute types") {
      spec.attr_types.clear();
      CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
    SUBCASE("negative noise") {
      spec.noise = -0.5;
      CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    }
  }

  TEST_CASE("dataset loader flags malformed edge files") {
    io::SynthSpec spec = tiny_spec();
    std::string dir = fresh_dir("edges");
    io::gen_synth_dir(spec, dir);

    SUBCASE("garbage token") {
      spit(dir + "/edges_r0.txt", "0 0\n1 one\n");
      CHECK_THROWS_WITH_AS(io::load_dataset(dir),
                           doctest::Contains("edges_r0.txt:2"),
                           std::runtime_error);
    }
    SUBCASE("out of range endpoint") {
      spit(dir + "/edges_r1.txt", "0 0\n2 5\n");
      CHECK_THROWS_WITH_AS(io::load_dataset(dir),
                           doctest::Contains("edges_r1.txt:2"),
                           std::runtime_error);
    }
    SUBCASE("trailing junk") {
      spit(dir + "/edges_r0.txt", "0 0 extra\n");
      CHECK_THROWS_WITH_AS(io::load_dataset(dir),
                           doctest::Contains("edges_r0.txt:1"),
                           std::runtime_error);
    }
    SUBCASE("missing edge file") {
      std::filesystem::remove(dir + "/edges_r0.txt");
      CHECK_THROWS_AS(io::load_dataset(dir), std::runtime_error);
    }
    SUBCASE("feature row count clash") {
      Mat wrong(3, 2);
      io::save_matrix(dir + "/features_t.txt", wrong);
      CHECK_THROWS_WITH_AS(io::load_dataset(dir),
                           doctest::Contains("does not match schema count"),
                           std::runtime_error);
    }
    SUBCASE("bad label line") {
      spit(dir + "/labels.txt", "0 1\n99 0\n");
      CHECK_THROWS_WITH_AS(io::load_dataset(dir),
                           doctest::Contains("labels.txt:2"),
                           std::runtime_error);
    }
  }

  TEST_CASE("dataset without labels file loads with empty labels") {
    io::SynthSpec spec = tiny_spec();
    std::string dir = fresh_dir("nolabel");
    io::gen_synth_dir(spec, dir);
    std::filesystem::remove(dir + "/labels.txt");
    io::Dataset ds = io::load_dataset(dir);
    CHECK(ds.labels.empty());
    CHECK(ds.graph.target_count() == spec.target_count);
  }

  TEST_CASE("model file round trip restores both parameter sets") {
    io::Dataset ds = io::gen_synth(tiny_spec());
    train::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.d = 4;
    cfg.d_att = 3;
    cfg.d_pred = 4;
    cfg.k_pos = 2;
    cfg.seed = 9;
    cfg.tau = 0.95;
    cfg.output_view = train::EmbedView::Mean;
    cfg.activation = ad::ActivationKind::Tanh;

    std::vector<MetaPathGraph> mpgs;
    for (const MetaPath& mp : ds.metapaths)
      mpgs.push_back(compose_metapath(ds.graph, mp));
    auto [m, report] = train::train(ds.graph, mpgs, cfg);

    std::string dir = fresh_dir("model");
    std::string path = dir + "/model.bin";
    io::save_model(path, m, ds.graph);
    train::CsgrlModel back = io::load_model(path, ds.graph);

    CHECK(back.cfg.d == cfg.d);
    CHECK(back.cfg.d_att == cfg.d_att);
    CHECK(back.cfg.d_pred == cfg.d_pred);
    CHECK(back.cfg.tau == cfg.tau);
    CHECK(back.cfg.output_view == cfg.output_view);
    CHECK(back.cfg.activation == cfg.activation);

    REQUIRE(back.theta.size() == m.theta.size());
    auto ta = m.theta.all();
    auto tb = back.theta.all();
    for (size_t i = 0; i < ta.size(); ++i) {
      CAPTURE(ta[i]->name);
      REQUIRE(tb[i]->name == ta[i]->name);
      REQUIRE(tb[i]->value.rows == ta[i]->value.rows);
      REQUIRE(tb[i]->value.cols == ta[i]->value.cols);
      CHECK(std::memcmp(tb[i]->value.data(), ta[i]->value.data(),
                        sizeof(double) * ta[i]->value.v.size()) == 0);
    }
    REQUIRE(back.pi.size() == m.pi.size());
    auto pa = m.pi.all();
    auto pb = back.pi.all();
    for (size_t i = 0; i < pa.size(); ++i) {
      CAPTURE(pa[i]->name);
      REQUIRE(pb[i]->name == pa[i]->name);
      CHECK(std::memcmp(pb[i]->value.data(), pa[i]->value.data(),
                        sizeof(double) * pa[i]->value.v.size()) == 0);
    }

    Mat ze = train::embed(m, ds.graph, mpgs);
    Mat zb = train::embed(back, ds.graph, mpgs);
    CHECK(std::memcmp(ze.data(), zb.data(), sizeof(double) * ze.v.size()) == 0);
  }

  TEST_CASE("model loader rejects foreign graphs and damaged files") {
    io::Dataset ds = io::gen_synth(tiny_spec());
    train::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.d = 4;
    cfg.d_att = 3;
    cfg.d_pred = 4;
    cfg.k_pos = 2;
    train::CsgrlModel m = train::init_model(cfg, ds.graph);

    std::string dir = fresh_dir("badmodel");
    std::string path = dir + "/model.bin";
    io::save_model(path, m, ds.graph);

    SUBCASE("graph with a different shape") {
      io::SynthSpec other = tiny_spec();
      other.target_count = 15;
      io::Dataset ds2 = io::gen_synth(other);
      CHECK_THROWS_AS(io::load_model(path, ds2.graph), io::IncompatibleModel);
    }
    SUBCASE("missing file") {
      CHECK_THROWS_AS(io::load_model(dir + "/absent.bin", ds.graph),
                      io::ModelError);
    }
    SUBCASE("wrong magic") {
      spit(path, "not a model at all, just text padding beyond eight bytes");
      CHECK_THROWS_WITH_AS(io::load_model(path, ds.graph),
                           doctest::Contains("not a model file"),
                           io::ModelError);
    }
    SUBCASE("truncated parameter data") {
      std::string whole = slurp(path);
      spit(path, whole.substr(0, whole.size() - 16));
      CHECK_THROWS_AS(io::load_model(path, ds.graph), io::ModelError);
    }
    SUBCASE("truncated header") {
      std::string whole = slurp(path);
      spit(path, whole.substr(0, 12));
      CHECK_THROWS_AS(io::load_model(path, ds.graph), io::ModelError);
    }
  }

  TEST_CASE("graph signature tracks shape not content") {
    io::SynthSpec spec = tiny_spec();
    io::Dataset a = io::gen_synth(spec);
    spec.seed = 1234;
    io::Dataset b = io::gen_synth(spec);
    CHECK(io::graph_signature(a.graph) == io::graph_signature(b.graph));

    spec.attr_types[0].count = 7;
    io::Dataset c = io::gen_synth(spec);
    CHECK(io::graph_signature(a.graph) != io::graph_signature(c.graph));
  }
}
