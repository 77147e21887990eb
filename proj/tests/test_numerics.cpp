#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "spdlab/gradcheck.hpp"
#include "spdlab/losses.hpp"
#include "spdlab/network.hpp"
#include "spdlab/optimizer.hpp"
#include "spdlab/serialize.hpp"

using namespace spdlab;

namespace {

// Straight-line re-evaluation of a dense stack, independent of Network's
// forward path. Used as the oracle for forward().
std::vector<double> scalar_loop_eval(const NetworkSpec& spec, const ParameterSet& params,
                                     std::vector<double> x) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + "/";
    if (auto* d = std::get_if<DenseSpec>(&spec.layers[i])) {
      const Array& W = params.get(p + "W");
      const Array& b = params.get(p + "b");
      std::vector<double> y(d->out, 0.0);
      for (std::size_t o = 0; o < d->out; ++o) {
        double s = b[o];
        for (std::size_t j = 0; j < d->in; ++j) s += W.at(o, j) * x[j];
        y[o] = apply_activation(d->act, s);
      }
      x = y;
    } else if (std::holds_alternative<SoftmaxSpec>(spec.layers[i])) {
      double m = x[0];
      for (double v : x) m = std::max(m, v);
      double sum = 0;
      for (double& v : x) {
        v = std::exp(v - m);
        sum += v;
      }
      for (double& v : x) v /= sum;
    }
  }
  return x;
}

OutputLoss sum_loss() {
  return [](const Array& out) {
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i];
    return std::make_pair(s, Array::full({out.size()}, 1.0));
  };
}

OutputLoss quadratic_loss() {
  return [](const Array& out) {
    double s = 0;
    Array g({out.size()});
    for (std::size_t i = 0; i < out.size(); ++i) {
      s += 0.5 * out[i] * out[i];
      g[i] = out[i];
    }
    return std::make_pair(s, g);
  };
}

Array random_input(std::size_t n, Rng& rng) {
  Array x({n});
  for (auto& v : x.values()) v = rng.next_double(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("array shape and data stay consistent") {
  Array a({2, 3});
  REQUIRE(a.size() == 6);
  a.at(1, 2) = 4.5;
  REQUIRE(a[5] == 4.5);
  REQUIRE_THROWS_AS(Array({2, 2}, {1.0, 2.0}), DimensionError);
  REQUIRE(a.all_finite());
  a[0] = std::nan("");
  REQUIRE_FALSE(a.all_finite());
}

TEST_CASE("softmax on zero logits is uniform") {
  Array out = Network::softmax(Array({2}, {0.0, 0.0}));
  REQUIRE(out[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(out[1] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("softmax outputs are nonnegative and sum to one") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.next_uint(6);
    Array logits = random_input(n, rng);
    for (auto& v : logits.values()) v *= 10.0;
    Array p = Network::softmax(logits);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(p[i] >= 0.0);
      sum += p[i];
    }
    REQUIRE(std::fabs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("dense layer with identity weights passes input through") {
  NetworkSpec spec;
  spec.layers.push_back(DenseSpec{3, 3, Activation::linear});
  spec.seed = 1;
  Network net(spec);
  Array& W = net.params_mut().get_mut("layer0/W");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) W.at(i, j) = i == j ? 1.0 : 0.0;
  Array x({3}, {0.3, -1.2, 2.5});
  Array y = net.forward(x);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(y[i] == x[i]);
}

TEST_CASE("two-layer net matches independent scalar-loop evaluator") {
  NetworkSpec spec = mlp_spec(4, {5}, 3, Activation::tanh, Activation::linear, 7);
  Network net(spec);
  Array x({4}, {0.25, -0.5, 0.75, 1.0});
  Array y = net.forward(x);
  auto oracle = scalar_loop_eval(spec, net.params(), {0.25, -0.5, 0.75, 1.0});
  REQUIRE(y.size() == oracle.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    REQUIRE(y[i] == Catch::Approx(oracle[i]).margin(1e-14));
}

TEST_CASE("forward rejects mismatched input shape naming the layer") {
  Network net(mlp_spec(4, {5}, 3, Activation::relu, Activation::linear, 3));
  REQUIRE_THROWS_AS(net.forward(Array({3}, {1, 2, 3})), DimensionError);
  try {
    net.forward(Array({3}, {1, 2, 3}));
  } catch (const DimensionError& e) {
    REQUIRE(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("backward of single linear layer gives input outer-product gradient") {
  NetworkSpec spec;
  spec.layers.push_back(DenseSpec{3, 2, Activation::linear});
  spec.seed = 5;
  Network net(spec);
  Array x({3}, {1.0, -2.0, 0.5});
  Tape tape;
  net.forward(x, &tape);
  // loss = sum(output): upstream of ones; dW[o][j] = x[j], db[o] = 1
  ParameterSet grads = net.backward(tape, Array::full({2}, 1.0));
  const Array& dW = grads.get("layer0/W");
  const Array& db = grads.get("layer0/b");
  for (std::size_t o = 0; o < 2; ++o) {
    REQUIRE(db[o] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(dW.at(o, j) == x[j]);
  }
}

TEST_CASE("zero upstream gradient yields all-zero parameter gradient") {
  Network net(policy_spec(6, 8, 4, 21));
  Rng rng(3);
  Tape tape;
  net.forward(random_input(6, rng), &tape);
  ParameterSet grads = net.backward(tape, Array::zeros({4}));
  for (std::size_t e = 0; e < grads.count(); ++e)
    for (double v : grads.value_at(e).values()) REQUIRE(v == 0.0);
}

TEST_CASE("stale tape is rejected after a parameter update") {
  Network net(critic_spec(4, 6, 9));
  Rng rng(4);
  Array x = random_input(4, rng);
  Tape tape;
  net.forward(x, &tape);
  OptimizerState opt = OptimizerState::make(OptKind::sgd, 0.1, net.params());
  ParameterSet grads = net.params().zeros_like();
  optimizer_step(net.params_mut(), grads, opt);
  REQUIRE_THROWS_AS(net.backward(tape, Array::full({1}, 1.0)), StalenessError);
}

TEST_CASE("every layer type passes finite-difference checks over seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 977);

    NetworkSpec dense = mlp_spec(4, {5}, 3, Activation::relu, Activation::tanh, seed);
    Network dnet(dense);
    auto r1 = gradient_check(dnet, quadratic_loss(), random_input(4, rng), 1e-4);
    INFO("dense seed " << seed << " worst " << r1.worst_param << " err " << r1.max_rel_err);
    REQUIRE(r1.pass);

    NetworkSpec soft = policy_spec(4, 6, 3, seed + 100);
    Network snet(soft);
    auto r2 = gradient_check(snet, quadratic_loss(), random_input(4, rng), 1e-4);
    REQUIRE(r2.pass);

    NetworkSpec rec;
    rec.layers.push_back(RecurrentSpec{3, 4});
    rec.layers.push_back(DenseSpec{4, 2, Activation::linear});
    rec.seed = seed + 200;
    Network rnet(rec);
    Array seq({5, 3});
    for (auto& v : seq.values()) v = rng.next_double(-1.0, 1.0);
    auto r3 = gradient_check(rnet, quadratic_loss(), seq, 1e-4);
    INFO("gru seed " << seed << " worst " << r3.worst_param << " err " << r3.max_rel_err);
    REQUIRE(r3.pass);
  }
}

TEST_CASE("gradient check on linear net with quadratic loss is tight") {
  NetworkSpec spec;
  spec.layers.push_back(DenseSpec{4, 3, Activation::linear});
  spec.seed = 17;
  Network net(spec);
  Rng rng(6);
  auto report = gradient_check(net, quadratic_loss(), random_input(4, rng), 1e-6);
  REQUIRE(report.max_rel_err < 1e-6);
  REQUIRE(report.pass);
}

TEST_CASE("recurrent cell unrolled five steps passes gradient check") {
  NetworkSpec spec;
  spec.layers.push_back(DenseSpec{2, 3, Activation::tanh});
  spec.layers.push_back(RecurrentSpec{3, 4});
  spec.layers.push_back(DenseSpec{4, 1, Activation::linear});
  spec.seed = 23;
  Network net(spec);
  Rng rng(8);
  Array seq({5, 2});
  for (auto& v : seq.values()) v = rng.next_double(-1.0, 1.0);
  auto report = gradient_check(net, sum_loss(), seq, 1e-4);
  INFO("worst " << report.worst_param << " err " << report.max_rel_err);
  REQUIRE(report.pass);
}

TEST_CASE("corrupted gradient fails the check") {
  NetworkSpec spec;
  spec.layers.push_back(DenseSpec{3, 2, Activation::tanh});
  spec.seed = 31;
  Network net(spec);
  Rng rng(9);
  Array x = random_input(3, rng);
  Tape tape;
  const Array out = net.forward(x, &tape);
  auto loss = quadratic_loss();
  ParameterSet analytic = net.backward(tape, loss(out).second);
  analytic.scale(2.0);  // injected fault
  auto scalar = [&]() { return loss(net.forward(x)).first; };
  auto report = check_gradients_against(net.params_mut(), scalar, analytic, 1e-5, 1e-4);
  REQUIRE_FALSE(report.pass);
}

TEST_CASE("weighted binary cross entropy values and domain") {
  REQUIRE(weighted_binary_cross_entropy(0.5, 1, 1, 2) ==
          Catch::Approx(0.6931471805599453).margin(1e-12));
  REQUIRE(weighted_binary_cross_entropy(0.5, 0, 1, 2) ==
          Catch::Approx(1.3862943611198906).margin(1e-12));
  REQUIRE_THROWS_AS(weighted_binary_cross_entropy(1.5, 1, 1, 2), DomainError);
  REQUIRE_THROWS_AS(weighted_binary_cross_entropy(-0.1, 0, 1, 2), DomainError);
}

TEST_CASE("weighted bce is monotone in p1") {
  double prev1 = weighted_binary_cross_entropy(0.01, 1, 1.0, 2.0);
  double prev0 = weighted_binary_cross_entropy(0.01, 0, 1.0, 2.0);
  for (double p = 0.02; p < 1.0; p += 0.01) {
    const double l1 = weighted_binary_cross_entropy(p, 1, 1.0, 2.0);
    const double l0 = weighted_binary_cross_entropy(p, 0, 1.0, 2.0);
    REQUIRE(l1 < prev1);  // decreasing when label = 1
    REQUIRE(l0 > prev0);  // increasing when label = 0
    prev1 = l1;
    prev0 = l0;
  }
}

TEST_CASE("sgd step and zero-gradient identity") {
  ParameterSet params;
  params.add("w", Array({1}, {1.0}));
  OptimizerState opt = OptimizerState::make(OptKind::sgd, 0.1, params);
  ParameterSet grads = params.zeros_like();
  grads.get_mut("w")[0] = 1.0;
  optimizer_step(params, grads, opt);
  REQUIRE(params.get("w")[0] == Catch::Approx(0.9).margin(1e-15));

  ParameterSet zero = params.zeros_like();
  const double before = params.get("w")[0];
  optimizer_step(params, zero, opt);
  REQUIRE(params.get("w")[0] == before);
}

TEST_CASE("adam first step moves by about lr in the gradient sign") {
  for (double g : {0.001, 0.5, 3.0, -7.0}) {
    ParameterSet params;
    params.add("w", Array({1}, {1.0}));
    OptimizerState opt = OptimizerState::make(OptKind::adam, 0.05, params);
    ParameterSet grads = params.zeros_like();
    grads.get_mut("w")[0] = g;
    optimizer_step(params, grads, opt);
    const double expected = 1.0 - 0.05 * (g > 0 ? 1.0 : -1.0);
    REQUIRE(params.get("w")[0] == Catch::Approx(expected).margin(1e-8));
  }
}

TEST_CASE("optimizer_step rejects mismatched shapes") {
  ParameterSet params;
  params.add("w", Array({2}, {1.0, 2.0}));
  ParameterSet bad;
  bad.add("w", Array({3}, {1.0, 2.0, 3.0}));
  OptimizerState opt = OptimizerState::make(OptKind::sgd, 0.1, params);
  REQUIRE_THROWS_AS(optimizer_step(params, bad, opt), DimensionError);
}

TEST_CASE("soft update blends target toward online") {
  auto blend = [](double tau) {
    ParameterSet target;
    target.add("w", Array({1}, {0.0}));
    ParameterSet online;
    online.add("w", Array({1}, {1.0}));
    soft_update(target, online, tau);
    return target.get("w")[0];
  };
  REQUIRE(blend(0.05) == Catch::Approx(0.05).margin(1e-15));
  REQUIRE(blend(0.001) == Catch::Approx(0.001).margin(1e-15));
  REQUIRE(blend(1.0) == 1.0);
  REQUIRE(blend(0.0) == 0.0);
  ParameterSet t, o;
  t.add("w", Array({1}, {0.0}));
  o.add("w", Array({1}, {1.0}));
  REQUIRE_THROWS_AS(soft_update(t, o, 1.5), DomainError);
  REQUIRE_THROWS_AS(soft_update(t, o, -0.1), DomainError);
}

TEST_CASE("equal seeds give bit-identical initial parameters") {
  Network a(policy_spec(10, 16, 4, 321));
  Network b(policy_spec(10, 16, 4, 321));
  REQUIRE(parameters_to_string(a.params()) == parameters_to_string(b.params()));
  Network c(policy_spec(10, 16, 4, 322));
  REQUIRE(parameters_to_string(a.params()) != parameters_to_string(c.params()));
}

TEST_CASE("parameter serialization round-trips bit-exactly") {
  Network net(policy_spec(7, 9, 5, 99));
  std::ostringstream os(std::ios::binary);
  write_parameters(os, net.params());
  std::istringstream is(os.str(), std::ios::binary);
  ParameterSet back = read_parameters(is);
  REQUIRE(parameters_to_string(back) == os.str());
  REQUIRE(back.count() == net.params().count());
  for (std::size_t e = 0; e < back.count(); ++e) {
    REQUIRE(back.name_at(e) == net.params().name_at(e));
    const Array& x = back.value_at(e);
    const Array& y = net.params().value_at(e);
    REQUIRE(x.same_shape(y));
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(x[i] == y[i]);
  }
}

TEST_CASE("parameter reader rejects a bad magic header") {
  std::istringstream is("NOTMAGIC", std::ios::binary);
  REQUIRE_THROWS_AS(read_parameters(is), IoError);
}
