#include <cmath>
#include <limits>

#include "afresnet/adam.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace afresnet;

namespace {

std::vector<Parameter> scalar_param(double value, double grad) {
  std::vector<Parameter> p;
  p.emplace_back("x", Tensor({1}, value));
  p[0].grad[0] = grad;
  return p;
}

// Textbook Adam on one scalar, kept separate from the library kernel.
struct ReferenceAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr = 1e-3, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("first step closed form") {
  auto p = scalar_param(0.0, 1.0);
  AdamState s = make_adam_state(p);
  CHECK(s.options.lr == 1e-3);
  CHECK(s.options.beta1 == 0.9);
  CHECK(s.options.beta2 == 0.999);
  CHECK(s.options.epsilon == 1e-8);
  adam_step(p, s);
  CHECK(s.step == 1);
  CHECK(p[0].value[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("zero gradient leaves parameters and decays moments") {
  auto p = scalar_param(2.5, 1.0);
  AdamState s = make_adam_state(p);
  adam_step(p, s);
  const double after_first = p[0].value[0];
  const double m1 = s.first_moment[0][0], v1 = s.second_moment[0][0];
  p[0].grad[0] = 0.0;
  adam_step(p, s);
  CHECK(s.first_moment[0][0] == doctest::Approx(0.9 * m1).epsilon(1e-15));
  CHECK(s.second_moment[0][0] == doctest::Approx(0.999 * v1).epsilon(1e-15));
  // The bias-corrected first moment is not zero, so a genuinely zero state is
  // needed to see no movement at all.
  auto q = scalar_param(2.5, 0.0);
  AdamState fresh = make_adam_state(q);
  for (int i = 0; i < 5; ++i) adam_step(q, fresh);
  CHECK(q[0].value[0] == 2.5);
  CHECK(after_first != 2.5);
}

TEST_CASE("matches the reference recurrence") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  auto p = scalar_param(0.3, 0.0);
  AdamState s = make_adam_state(p, AdamOptions{0.01, 0.8, 0.99, 1e-6});
  ReferenceAdam ref;
  double x = 0.3;
  for (int i = 0; i < 200; ++i) {
    const double grad = g(rng);
    p[0].grad[0] = grad;
    adam_step(p, s);
    x = ref.step(x, grad, 0.01, 0.8, 0.99, 1e-6);
    CHECK(p[0].value[0] == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("deterministic over 100 steps") {
  auto run = [] {
    std::vector<Parameter> p;
    p.emplace_back("a", testing::random_tensor({3, 4}, 1));
    p.emplace_back("b", testing::random_tensor({5}, 2));
    AdamState s = make_adam_state(p);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      for (auto& q : p)
        for (double& v : q.grad.values()) v = g(rng);
      adam_step(p, s);
    }
    return p;
  };
  const auto a = run(), b = run();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].value.size(); ++j) CHECK(a[i].value[j] == b[i].value[j]);
}

TEST_CASE("non-finite gradient is rejected and names the parameter") {
  std::vector<Parameter> p;
  p.emplace_back("ok", Tensor({2}, 1.0));
  p.emplace_back("bad.weight", Tensor({2}, 1.0));
  p[1].grad[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState s = make_adam_state(p);
  try {
    adam_step(p, s);
    FAIL("accepted NaN");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("bad.weight") != std::string::npos);
  }
  CHECK(p[0].value[0] == 1.0);
  CHECK(s.step == 0);
}

TEST_CASE("moment buffers match parameter shapes") {
  std::vector<Parameter> p;
  p.emplace_back("a", Tensor({2, 3, 4}));
  p.emplace_back("b", Tensor({7}));
  const AdamState s = make_adam_state(p);
  REQUIRE(s.first_moment.size() == 2);
  CHECK(s.first_moment[0].dims() == Shape{2, 3, 4});
  CHECK(s.second_moment[1].dims() == Shape{7});
  CHECK(s.step == 0);
}
