#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "illc/compress.hpp"
#include "illc/errors.hpp"
#include "illc/kernel.hpp"

using namespace illc;
using illc::testing::random_inputs;
using illc::testing::random_mlp;

namespace {

// Direct evaluation of the local edge aggregation sum, kept independent of
// the library's implementation.
double local_oracle(const Matrix& w, const std::vector<std::size_t>& c1, const std::vector<std::size_t>& c2,
                    const Matrix& acts, const std::vector<double>& cluster_act, const std::vector<double>& pi) {
  double total = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) {
    for (std::size_t i : c1) {
      const double ratio = cluster_act[s] > 1e-9 ? acts(s, i) / cluster_act[s] : 1.0;
      double inner = 0.0;
      for (std::size_t j : c2) inner += w(j, i);
      total += pi[s] * ratio * inner / static_cast<double>(c2.size());
    }
  }
  return total;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

CompressOptions global_options(double gamma, std::uint64_t seed = 0) {
  CompressOptions o;
  o.gamma = gamma;
  o.seed = seed;
  return o;
}

CompressOptions local_options(double gamma, const Matrix& x, std::size_t row) {
  CompressOptions o;
  o.gamma = gamma;
  o.mode = Mode::local;
  o.anchor = LocalAnchor{{x.row(row).begin(), x.row(row).end()}, median_pairwise_distance(x), row};
  return o;
}

// 3-4-1 network whose hidden neurons 1 and 3 are exact duplicates.
Mlp duplicated_model() {
  return Mlp({3, 4, 1},
             {Matrix::from_rows({{0.3, -0.7, 1.1}, {0.9, 0.4, -0.2}, {-1.3, 0.5, 0.8}, {0.9, 0.4, -0.2}}),
              Matrix::from_rows({{0.6, -1.2, 0.75, 2.1}})},
             {{0.1, -0.05, 0.2, -0.05}, {-0.3}});
}

}  // namespace

TEST_CASE("agg_bias_global") {
  const std::vector<double> b{0.2, 0.4, 7.0};
  const std::vector<std::size_t> both{0, 1}, single{2}, none{};
  CHECK(agg_bias_global(b, both) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(agg_bias_global(b, single) == 7.0);
  const std::vector<double> zeros(100, 0.0);
  std::vector<std::size_t> all(100);
  for (std::size_t i = 0; i < 100; ++i) all[i] = i;
  CHECK(agg_bias_global(zeros, all) == 0.0);
  CHECK_THROWS_AS(agg_bias_global(b, none), ValidationError);
}

TEST_CASE("agg_edge_global") {
  const Matrix w = Matrix::from_rows({{1.0, 2.0, 9.0}, {3.0, 4.0, -9.0}});
  const std::vector<std::size_t> a{2}, b{1}, src{0, 1}, tgt{0, 1}, none{};
  CHECK(agg_edge_global(w, a, b) == -9.0);
  const Matrix into_one = Matrix::from_rows({{1.0, 3.0}});
  const std::vector<std::size_t> t0{0};
  CHECK(agg_edge_global(into_one, src, t0) == 4.0);
  double oracle = 0.0;
  for (std::size_t i : src)
    for (std::size_t j : tgt) oracle += w(j, i) / static_cast<double>(tgt.size());
  CHECK(agg_edge_global(w, src, tgt) == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(agg_edge_global(w, src, tgt) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(agg_edge_global(w, none, tgt), ValidationError);
}

TEST_CASE("agg_edge_local reduces to the global value on a uniform single sample") {
  const Matrix w = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const std::vector<std::size_t> src{0, 1}, tgt{0, 1};
  // Each member carries half of the cluster activation so the ratio sum is 1 per member pair.
  const Matrix acts = Matrix::from_rows({{0.5, 0.5}});
  const std::vector<double> cluster{0.5}, pi{1.0};
  CHECK(agg_edge_local(w, src, tgt, acts, cluster, pi) == doctest::Approx(agg_edge_global(w, src, tgt)));
}

TEST_CASE("agg_edge_local favours the stronger member") {
  const Matrix w = Matrix::from_rows({{1.0, 3.0}});
  const std::vector<std::size_t> src{0, 1}, tgt{0};
  const Matrix acts = Matrix::from_rows({{0.9, 0.1}});
  const std::vector<double> cluster{0.5}, pi{1.0};
  const double v = agg_edge_local(w, src, tgt, acts, cluster, pi);
  CHECK(v == doctest::Approx(local_oracle(w, src, tgt, acts, cluster, pi)).epsilon(1e-14));
  CHECK(v == doctest::Approx(2.4).epsilon(1e-14));
  CHECK(v < agg_edge_global(w, src, tgt));

  // Equal outgoing weights: a's share dominates the result.
  const Matrix eq = Matrix::from_rows({{1.0, 1.0}});
  const std::vector<std::size_t> only_a{0}, only_b{1};
  CHECK(agg_edge_local(eq, only_a, tgt, acts, cluster, pi) > agg_edge_local(eq, only_b, tgt, acts, cluster, pi));
}

TEST_CASE("agg_edge_local on several weighted samples matches the oracle") {
  SplitMix64 rng(3);
  const Matrix w = random_inputs(4, 5, 1);
  const Matrix acts = random_inputs(6, 5, 2);
  Matrix pos = acts;
  for (double& v : pos.data()) v = std::abs(v);
  std::vector<double> cluster(6), pi(6);
  double z = 0.0;
  for (std::size_t s = 0; s < 6; ++s) {
    cluster[s] = s == 2 ? 0.0 : rng.uniform() + 0.1;
    pi[s] = rng.uniform();
    z += pi[s];
  }
  for (double& p : pi) p /= z;
  const std::vector<std::size_t> c1{0, 3, 4}, c2{1, 2};
  CHECK(agg_edge_local(w, c1, c2, pos, cluster, pi) ==
        doctest::Approx(local_oracle(w, c1, c2, pos, cluster, pi)).epsilon(1e-13));
}

TEST_CASE("kernel weights") {
  const Matrix x = Matrix::from_rows({{0.0, 0.0}, {3.0, 4.0}});
  const std::vector<double> anchor{0.0, 0.0};
  const auto pi = kernel_weights(x, anchor, 5.0);
  const double far = std::exp(-1.0);
  CHECK(pi[0] == doctest::Approx(1.0 / (1.0 + far)));
  CHECK(pi[1] == doctest::Approx(far / (1.0 + far)));
  CHECK_THROWS_AS(kernel_weights(x, anchor, 0.0), ValidationError);
  CHECK(median_pairwise_distance(Matrix::from_rows({{0.0}, {1.0}, {3.0}})) == 2.0);
}

TEST_CASE("gamma one reproduces the original model for both methods") {
  const Mlp m = random_mlp({4, 6, 5, 1}, 7);
  const Matrix x = random_inputs(20, 4, 8);
  for (Method method : {Method::illc, Method::oneshot}) {
    const ClusteredMlp c = compress(method, m, x, global_options(1.0));
    CHECK(c.model == m);
    CHECK(predict(c.model, x) == predict(m, x));
    const ClusteredMlp l = compress(method, m, x, local_options(1.0, x, 3));
    CHECK(max_abs_diff(predict(l.model, x), predict(m, x)) <= 1e-12);
  }
}

TEST_CASE("duplicate neurons merge without changing outputs") {
  const Mlp m = duplicated_model();
  const Matrix x = random_inputs(100, 3, 5, 2.0);
  for (Method method : {Method::illc, Method::oneshot}) {
    const ClusteredMlp c = compress(method, m, x, global_options(0.75));
    REQUIRE(c.model.layer_sizes()[1] == 3);
    CHECK(c.clustering[0].labels[1] == c.clustering[0].labels[3]);
    CHECK(max_abs_diff(predict(c.model, x), predict(m, x)) <= 1e-12);
    const auto merged = c.clustering[0].labels[1];
    CHECK(c.model.weights(1)(0, merged) == doctest::Approx(-1.2 + 2.1).epsilon(1e-15));
  }
}

TEST_CASE("single hidden layer: both methods coincide bitwise") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Mlp m = random_mlp({5, 12, 2}, seed);
    const Matrix x = random_inputs(30, 5, seed + 50);
    const ClusteredMlp a = compress_illc(m, x, global_options(0.25, seed));
    const ClusteredMlp b = compress_oneshot(m, x, global_options(0.25, seed));
    CHECK(a.model == b.model);
    CHECK(a.clustering == b.clustering);
  }
}

TEST_CASE("ILLC re-clusters layer two from compressed activations") {
  const Mlp m = random_mlp({2, 4, 4, 1}, 3, Activation::relu, 1.0, 0.5);
  const Matrix x = random_inputs(12, 2, 4);
  const CompressOptions o = global_options(0.5);
  const ClusteredMlp illc = compress_illc(m, x, o);
  const ClusteredMlp one = compress_oneshot(m, x, o);
  CHECK(illc.clustering[0] == one.clustering[0]);

  // Step-by-step oracle: A_2 from the original network vs from the network
  // whose first hidden layer was merged.
  const auto orig = forward_collect(m, x);
  const LayerClustering c1 = cluster_layer(orig.post[1], 1, 0.5, 1);
  const auto members = c1.members();
  Matrix w0(members.size(), 2), w1(4, members.size());
  std::vector<double> b0(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (std::size_t i : members[c]) {
      for (std::size_t t = 0; t < 2; ++t) w0(c, t) += m.weights(0)(i, t) / static_cast<double>(members[c].size());
      b0[c] += m.bias(0)[i] / static_cast<double>(members[c].size());
      for (std::size_t j = 0; j < 4; ++j) w1(j, c) += m.weights(1)(j, i);
    }
  }
  Matrix a2(x.rows(), 4);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> h(members.size());
    for (std::size_t c = 0; c < members.size(); ++c)
      h[c] = std::max(0.0, x(r, 0) * w0(c, 0) + x(r, 1) * w0(c, 1) + b0[c]);
    for (std::size_t j = 0; j < 4; ++j) {
      double s = m.bias(1)[j];
      for (std::size_t c = 0; c < members.size(); ++c) s += h[c] * w1(j, c);
      a2(r, j) = std::max(0.0, s);
    }
  }
  const LayerClustering expect_illc = cluster_layer(a2, 2, 0.5, 2);
  const LayerClustering expect_one = cluster_layer(orig.post[2], 2, 0.5, 2);
  CHECK(illc.clustering[1].labels == expect_illc.labels);
  CHECK(one.clustering[1].labels == expect_one.labels);
  CHECK(illc.clustering[1].labels != one.clustering[1].labels);
}

TEST_CASE("cluster counts agree and counters equal depth") {
  const Mlp m = random_mlp({6, 20, 20, 20, 1}, 4);
  const Matrix x = random_inputs(25, 6, 9);
  ForwardCounter ci, co;
  const ClusteredMlp a = compress_illc(m, x, global_options(0.2), &ci);
  const ClusteredMlp b = compress_oneshot(m, x, global_options(0.2), &co);
  CHECK(a.model.layer_sizes() == b.model.layer_sizes());
  CHECK(a.model.layer_sizes() == std::vector<std::size_t>{6, 4, 4, 4, 1});
  CHECK(ci.value() == 3);
  CHECK(co.value() == 3);
  CHECK(a.layer_evaluations == 3);
  CHECK(b.layer_evaluations == 3);
  for (std::size_t l = 0; l < 3; ++l) CHECK(a.clustering[l].k == a.model.layer_sizes()[l + 1]);
}

TEST_CASE("one-shot merged weights equal the global edge aggregation") {
  const Mlp m = random_mlp({3, 10, 8, 2}, 6);
  const Matrix x = random_inputs(15, 3, 7);
  const ClusteredMlp c = compress_oneshot(m, x, global_options(0.4));
  const auto m1 = c.clustering[0].members();
  const auto m2 = c.clustering[1].members();
  for (std::size_t a = 0; a < m1.size(); ++a)
    for (std::size_t b = 0; b < m2.size(); ++b)
      CHECK(c.model.weights(1)(b, a) == doctest::Approx(agg_edge_global(m.weights(1), m1[a], m2[b])).epsilon(1e-12));
  for (std::size_t b = 0; b < m2.size(); ++b)
    for (std::size_t o = 0; o < 2; ++o) {
      const std::vector<std::size_t> out{o};
      CHECK(c.model.weights(2)(o, b) == doctest::Approx(agg_edge_global(m.weights(2), m2[b], out)).epsilon(1e-12));
    }
}

TEST_CASE("local mode changes outgoing weights only") {
  const Mlp m = random_mlp({3, 10, 8, 1}, 2);
  const Matrix x = random_inputs(15, 3, 3);
  for (Method method : {Method::illc, Method::oneshot}) {
    const ClusteredMlp g = compress(method, m, x, global_options(0.3));
    ForwardCounter counter;
    const ClusteredMlp l = compress(method, m, x, local_options(0.3, x, 0), &counter);
    // ILLC clusters later layers from the locally merged prefix, so only
    // the first layer is shared with the global run.
    CHECK(l.clustering[0] == g.clustering[0]);
    if (method == Method::oneshot) CHECK(l.clustering == g.clustering);
    CHECK(l.model.weights(0) == g.model.weights(0));
    CHECK(l.model.bias(0) == g.model.bias(0));
    CHECK(predict(l.model, x).all_finite());
    CHECK(counter.value() == (method == Method::illc ? 4u : 2u));
  }
  CompressOptions bad = global_options(0.3);
  bad.mode = Mode::local;
  CHECK_THROWS_AS(compress_illc(m, x, bad), ConfigError);
}

TEST_CASE("compression argument checks") {
  const Mlp m = random_mlp({3, 4, 1}, 1);
  CHECK_THROWS_AS(compress_illc(m, Matrix(0, 3), global_options(0.5)), ValidationError);
  CHECK_THROWS_AS(compress_illc(m, Matrix(2, 4), global_options(0.5)), DimensionError);
  CHECK_THROWS_AS(compress_oneshot(m, Matrix(2, 3), global_options(0.0)), ConfigError);
  CHECK_THROWS_AS(parse_method("prune"), ConfigError);
  CHECK_THROWS_AS(parse_mode("regional"), ConfigError);
}

TEST_CASE("sidecar round trip") {
  const Mlp m = random_mlp({3, 10, 8, 1}, 5);
  const Matrix x = random_inputs(15, 3, 6);
  const auto dir = std::filesystem::temp_directory_path();
  for (Mode mode : {Mode::global, Mode::local}) {
    const CompressOptions o = mode == Mode::global ? global_options(0.3, 4) : local_options(0.3, x, 2);
    const ClusteredMlp c = compress_illc(m, x, o);
    const auto model_path = dir / "illc_test_compressed.json";
    const auto sidecar_path = default_sidecar_path(model_path);
    CHECK(sidecar_path.filename() == "illc_test_compressed.sidecar.json");
    save_clustered(c, model_path, sidecar_path);
    const ClusteredMlp back = clustered_from_files(model_path, sidecar_path);
    CHECK(back.model == c.model);
    CHECK(back.clustering == c.clustering);
    CHECK(back.origin_hash == model_hash(m));
    CHECK(back.method == Method::illc);
    CHECK(back.mode == mode);
    CHECK(back.gamma == 0.3);
    CHECK(back.seed == c.seed);
    CHECK(back.layer_evaluations == c.layer_evaluations);
    CHECK(back.anchor.has_value() == (mode == Mode::local));
    if (back.anchor) {
      CHECK(back.anchor->x == c.anchor->x);
      CHECK(back.anchor->sigma == c.anchor->sigma);
      CHECK(back.anchor->sample_index == std::optional<std::size_t>(2));
    }
    std::filesystem::remove(model_path);
    std::filesystem::remove(sidecar_path);
  }
}
