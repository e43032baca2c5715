#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lvtts/errors.hpp"
#include "lvtts/nn/activation.hpp"
#include "lvtts/nn/attention.hpp"
#include "lvtts/nn/checkpoint.hpp"
#include "lvtts/nn/conv.hpp"
#include "lvtts/nn/dropout.hpp"
#include "lvtts/nn/gradcheck.hpp"
#include "lvtts/nn/linear.hpp"
#include "lvtts/nn/recurrent.hpp"

using namespace lvtts;
using namespace lvtts::nn;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void randomize(const ParamList& params, Rng& rng) {
  for (Param* p : params) {
    for (double& v : p->value.values()) v = rng.uniform(-1.0, 1.0);
  }
}

}  // namespace

TEST_CASE("linear forward examples") {
  Linear layer("l", 2, 2);
  const Tensor x = Tensor({1, 2}, {1.0, 1.0});

  SUBCASE("zero map") {
    Rng rng(3);
    const Tensor xr = random_tensor({5, 2}, rng);
    const Tensor y = layer.forward(xr);
    for (double v : y.values()) CHECK(v == 0.0);
  }
  SUBCASE("identity") {
    layer.weight.value = Tensor({2, 2}, {1, 0, 0, 1});
    Rng rng(4);
    const Tensor xr = random_tensor({5, 2}, rng);
    CHECK(max_abs_diff(layer.forward(xr), xr) == 0.0);
  }
  SUBCASE("hand arithmetic") {
    layer.weight.value = Tensor({2, 2}, {1, 2, 3, 4});
    layer.bias.value = Tensor({2}, {1, 1});
    const Tensor y = layer.forward(x);
    CHECK(y[0] == 4.0);
    CHECK(y[1] == 8.0);
  }
  SUBCASE("batched (batch, time, channels) input keeps leading dims") {
    Rng rng(5);
    const Tensor xr = random_tensor({2, 3, 2}, rng);
    const Tensor y = layer.forward(xr);
    CHECK(y.shape() == Shape{2, 3, 2});
  }
}

TEST_CASE("linear shape mismatch names both shapes") {
  Linear layer("l", 3, 2);
  try {
    layer.forward(Tensor::matrix(4, 5));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(4, 5)") != std::string::npos);
    CHECK(msg.find("(2, 3)") != std::string::npos);
  }
}

TEST_CASE("relu") {
  const Tensor y = relu(Tensor::of({-1.0, 0.0, 2.0}));
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
  const Tensor neg = relu(Tensor::of({-3.0, -0.5, -1e-9}));
  for (double v : neg.values()) CHECK(v == 0.0);

  // Finite differences at x > 0 give 1, at x < 0 give 0.
  const double eps = 1e-4;
  for (double x0 : {0.7, -0.7}) {
    const double numeric =
        (relu(Tensor::of({x0 + eps}))[0] - relu(Tensor::of({x0 - eps}))[0]) / (2 * eps);
    const Tensor analytic = relu_backward(Tensor::of({x0}), Tensor::of({1.0}));
    CHECK(analytic[0] == doctest::Approx(numeric).epsilon(1e-12));
    CHECK(analytic[0] == (x0 > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("gru step gate convention") {
  GruCell cell("g", 2, 3);
  const std::vector<double> x = {0.3, -0.2};
  SUBCASE("zero weights, zero state") {
    for (double v : cell.step(x, std::vector<double>(3, 0.0))) CHECK(v == 0.0);
  }
  SUBCASE("zero weights, unit state: z = 0.5, candidate 0") {
    for (double v : cell.step(x, std::vector<double>(3, 1.0))) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(cell.step(std::vector<double>(3, 0.0), std::vector<double>(3, 0.0)), DimensionError);
    CHECK_THROWS_AS(cell.step(x, std::vector<double>(2, 0.0)), DimensionError);
  }
}

TEST_CASE("gru sequence equals repeated steps") {
  Rng rng(11);
  GruCell cell("g", 3, 4);
  ParamList params;
  cell.collect(params);
  randomize(params, rng);
  const Tensor x = random_tensor({6, 3}, rng);
  std::vector<double> h(4, 0.1);
  const Tensor seq = cell.forward(x, h, nullptr);
  std::vector<double> hs(4, 0.1);
  for (std::size_t t = 0; t < 6; ++t) {
    hs = cell.step(x.row(t), hs);
    for (std::size_t j = 0; j < 4; ++j) CHECK(seq.at(t, j) == hs[j]);
  }
  CHECK(h == hs);
}

TEST_CASE("lstm step") {
  LstmCell cell("l", 2, 3);
  const std::vector<double> x = {0.5, -1.0};
  SUBCASE("zero weights, zero states") {
    const LstmState s = cell.step(x, cell.zero_state());
    for (double v : s.h) CHECK(v == 0.0);
    for (double v : s.c) CHECK(v == 0.0);
  }
  SUBCASE("saturated forget gate keeps the cell and adds the input contribution") {
    // gate rows: [input | forget | cell | output]
    for (std::size_t j = 0; j < 3; ++j) {
      cell.b_ih.value[j] = 0.3;
      cell.b_ih.value[3 + j] = 50.0;
      cell.b_ih.value[6 + j] = 0.7;
    }
    LstmState prev = cell.zero_state();
    prev.c = {0.4, -0.2, 1.5};
    const LstmState s = cell.step(x, prev);
    const double add = sigmoid(0.3) * std::tanh(0.7);
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.c[j] == doctest::Approx(prev.c[j] + add).epsilon(1e-12));
  }
}

TEST_CASE("conv1d") {
  SUBCASE("identity kernel") {
    Conv1d conv("c", 1, 1, 1);
    conv.weight.value[0] = 1.0;
    const Tensor x({4, 1}, {1, -2, 3, 0.5});
    CHECK(max_abs_diff(conv.forward(x), x) == 0.0);
  }
  SUBCASE("kernel [1,1]") {
    Conv1d conv("c", 1, 1, 2);
    conv.weight.value.fill(1.0);
    const Tensor y = conv.forward(Tensor({3, 1}, {1, 2, 3}));
    REQUIRE(y.rows() == 2);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 5.0);
  }
  SUBCASE("zero kernel") {
    Conv1d conv("c", 2, 3, 2);
    Rng rng(1);
    const Tensor y = conv.forward(random_tensor({5, 2}, rng));
    for (double v : y.values()) CHECK(v == 0.0);
  }
  SUBCASE("input shorter than kernel") {
    Conv1d conv("c", 1, 1, 4);
    CHECK_THROWS_AS(conv.forward(Tensor({3, 1}, {1, 2, 3})), DimensionError);
  }
  SUBCASE("strided framing") {
    Conv1d conv("c", 1, 1, 4, 4);
    conv.weight.value.fill(1.0);
    const Tensor y = conv.forward(Tensor({8, 1}, {1, 1, 1, 1, 2, 2, 2, 2}));
    REQUIRE(y.rows() == 2);
    CHECK(y[0] == 4.0);
    CHECK(y[1] == 8.0);
  }
}

TEST_CASE("transposed conv1d") {
  SUBCASE("shape contract r = 4") {
    TransposedConv1d up("u", 3, 2, 4);
    CHECK(up.forward(Tensor::matrix(1, 3)).rows() == 4);
    CHECK(up.forward(Tensor::matrix(5, 3)).rows() == 20);
  }
  SUBCASE("kernel [1,0,0,0]") {
    TransposedConv1d up("u", 1, 1, 4);
    up.weight.value = Tensor({1, 1, 4}, {1, 0, 0, 0});
    const Tensor y = up.forward(Tensor({1, 1}, {5.0}));
    REQUIRE(y.rows() == 4);
    CHECK(y[0] == 5.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.0);
  }
  SUBCASE("output length is ratio * input length") {
    for (std::size_t r = 1; r <= 8; ++r) {
      TransposedConv1d up("u", 2, 3, r);
      for (std::size_t t = 1; t <= 12; ++t) CHECK(up.forward(Tensor::matrix(t, 2)).rows() == r * t);
    }
  }
}

TEST_CASE("multi-head attention") {
  Rng rng(21);
  SUBCASE("single position attends to itself") {
    MultiHeadAttention mha("a", 4, 2);
    mha.init(rng);
    MultiHeadAttention::Trace trace;
    const Tensor x = random_tensor({1, 4}, rng);
    const Tensor y = mha.forward(x, {}, rng, &trace);
    for (const Tensor& w : trace.weights) CHECK(w[0] == 1.0);
    CHECK(max_abs_diff(trace.context, mha.value.forward(x)) < 1e-15);
    CHECK(max_abs_diff(y, mha.output.forward(mha.value.forward(x))) < 1e-15);
  }
  SUBCASE("zero query and key projections give uniform attention") {
    MultiHeadAttention mha("a", 4, 2);
    mha.init(rng);
    mha.query.weight.value.fill(0.0);
    mha.key.weight.value.fill(0.0);
    MultiHeadAttention::Trace trace;
    const Tensor x = random_tensor({5, 4}, rng);
    mha.forward(x, {}, rng, &trace);
    const Tensor v = mha.value.forward(x);
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < 5; ++t) mean += v.at(t, c) / 5.0;
      for (std::size_t t = 0; t < 5; ++t) CHECK(trace.context.at(t, c) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
  SUBCASE("two positions, one head, hand oracle") {
    MultiHeadAttention mha("a", 2, 1);
    mha.query.weight.value = Tensor({2, 2}, {1, 0, 0, 1});
    mha.key.weight.value = Tensor({2, 2}, {0.5, 0, 0, 1});
    mha.value.weight.value = Tensor({2, 2}, {1, 1, 0, 2});
    mha.output.weight.value = Tensor({2, 2}, {1, 0, 0, 1});
    MultiHeadAttention::Trace trace;
    const Tensor y = mha.forward(Tensor({2, 2}, {1, 2, 3, -1}), {}, rng, &trace);
    // softmax(QK^T / sqrt(2)) V evaluated at 30 digits
    CHECK(trace.weights[0].at(0, 0) == doctest::Approx(0.97168208145735430182).epsilon(1e-14));
    CHECK(trace.weights[0].at(1, 1) == doctest::Approx(0.98583396412331159721).epsilon(1e-14));
    CHECK(y.at(0, 0) == doctest::Approx(2.9716820814573543018).epsilon(1e-14));
    CHECK(y.at(0, 1) == doctest::Approx(3.8300924887441258109).epsilon(1e-14));
    CHECK(y.at(1, 0) == doctest::Approx(2.0141660358766884028).epsilon(1e-14));
    CHECK(y.at(1, 1) == doctest::Approx(-1.9150037847398695832).epsilon(1e-14));
  }
  SUBCASE("width not divisible by heads") {
    CHECK_THROWS_AS(MultiHeadAttention("a", 6, 4), DimensionError);
  }
  SUBCASE("attention rows sum to one") {
    for (int trial = 0; trial < 50; ++trial) {
      MultiHeadAttention mha("a", 8, 4);
      ParamList params;
      mha.collect(params);
      for (Param* p : params) {
        for (double& v : p->value.values()) v = rng.uniform(-3.0, 3.0);
      }
      const std::size_t len = 1 + rng.below(12);
      Tensor x = random_tensor({len, 8}, rng);
      x *= 5.0;
      MultiHeadAttention::Trace trace;
      mha.forward(x, {}, rng, &trace);
      for (const Tensor& w : trace.weights) {
        for (std::size_t i = 0; i < len; ++i) {
          double s = 0.0;
          for (double v : w.row(i)) s += v;
          CHECK(std::abs(s - 1.0) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("softmax cross entropy") {
  SUBCASE("uniform logits over 256 classes") {
    const std::vector<double> logits(256, 0.37);
    CHECK(softmax_xent(logits, 17).loss == doctest::Approx(std::log(256.0)).epsilon(1e-14));
  }
  SUBCASE("certainty limit") {
    std::vector<double> logits(256, 0.0);
    logits[3] = 1e3;
    const XentResult r = softmax_xent(logits, 3);
    CHECK(r.loss < 1e-300);
    CHECK(r.loss >= 0.0);
  }
  SUBCASE("three classes, high-precision oracle") {
    const std::vector<double> logits = {1.0, 2.0, 3.0};
    const XentResult r = softmax_xent(logits, 2);
    CHECK(r.loss == doctest::Approx(0.407605964444380304482919904545).epsilon(1e-14));
    double s = 0.0;
    for (double g : r.grad) s += g;
    CHECK(std::abs(s) < 1e-15);
  }
  SUBCASE("target out of range") {
    const std::vector<double> logits = {1.0, 2.0};
    CHECK_THROWS_AS(softmax_xent(logits, 2), DomainError);
  }
}

TEST_CASE("dropout") {
  Rng rng(5);
  const Tensor x = random_tensor({100, 10}, rng);
  SUBCASE("inference is the identity, bit for bit") {
    Tensor mask;
    const Tensor y = dropout_forward(x, {0.5, false}, rng, &mask);
    CHECK(y.storage() == x.storage());
    CHECK(mask.empty());
  }
  SUBCASE("train mode drop fraction matches the rate") {
    for (double p : {0.1, 0.5}) {
      const Tensor ones({100000}, 1.0);
      Tensor mask;
      const Tensor y = dropout_forward(ones, {p, true}, rng, &mask);
      std::size_t zeros = 0;
      for (double v : y.values()) zeros += v == 0.0;
      const double frac = static_cast<double>(zeros) / 100000.0;
      CHECK(std::abs(frac - p) < 0.01);
    }
  }
  SUBCASE("rate outside [0, 1)") {
    CHECK_THROWS_AS(dropout_forward(x, {1.0, true}, rng, nullptr), DomainError);
  }
}

TEST_CASE("gradient_check examples") {
  CHECK(check_linear(1, 1e-4).max_relative_error < 1e-6);
  CHECK(check_gru(2, 1e-4, 4).max_relative_error < 1e-4);
  CHECK(check_attention(3, 1e-4).max_relative_error < 1e-4);
  CHECK_THROWS_AS(gradient_check([] {}, [] { return 0.0; }, {}, 0.5), DomainError);
}

TEST_CASE("every layer passes finite differences over 10 seeds") {
  for (const LayerCheck& c : check_layers(2024, 10, 1e-4)) {
    INFO(c.layer);
    CHECK(c.entries > 0);
    CHECK(c.max_relative_error < 1e-4);
  }
}

TEST_CASE("forward passes are deterministic") {
  Rng a(9), b(9);
  MultiHeadAttention m1("a", 4, 2), m2("a", 4, 2);
  m1.init(a);
  m2.init(b);
  const Tensor x = random_tensor({6, 4}, a);
  Rng d1(77), d2(77);
  const Tensor y1 = m1.forward(x, {0.1, true}, d1, nullptr);
  const Tensor y2 = m2.forward(x, {0.1, true}, d2, nullptr);
  CHECK(y1.storage() == y2.storage());
}

TEST_CASE("checkpoint round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "lvtts_test_ckpt.lvnn").string();
  Rng rng(8);
  GruCell cell("tier.gru", 3, 5);
  cell.init(rng);
  ParamList params;
  cell.collect(params);
  save_params(path, params);

  GruCell other("tier.gru", 3, 5);
  ParamList other_params;
  other.collect(other_params);
  load_params(path, other_params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(params[i]->value.storage() == other_params[i]->value.storage());
  }

  std::ifstream is(path, std::ios::binary);
  char magic[5];
  is.read(magic, 5);
  CHECK(std::string(magic, 5) == "LVNN1");

  GruCell wrong("tier.gru", 3, 6);
  ParamList wrong_params;
  wrong.collect(wrong_params);
  CHECK_THROWS_AS(load_params(path, wrong_params), FormatError);

  {
    std::ofstream bad(path, std::ios::binary | std::ios::trunc);
    bad << "NOPE!";
  }
  CHECK_THROWS_AS(read_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}
