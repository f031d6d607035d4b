#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "stgc/autograd.hpp"

using namespace stgc;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Checks every input's tape gradient against central finite differences of a
// fixed random linear functional of the op output.
void check_grads(const std::vector<Tensor>& ins, const Builder& build,
                 double tol = 2e-6) {
  Tensor w;
  {
    Tape t;
    std::vector<Var> vs;
    for (const auto& x : ins) vs.push_back(t.leaf(x));
    Var out = build(t, vs);
    Rng wr(99);
    if (t.value(out).size() > 1)
      w = random_uniform(t.value(out).shape(), -1.0, 1.0, wr);
  }
  auto eval = [&](const std::vector<Tensor>& cur) {
    Tape t;
    std::vector<Var> vs;
    for (const auto& x : cur) vs.push_back(t.leaf(x));
    Var out = build(t, vs);
    if (!w.empty()) out = t.weighted_sum(out, w);
    return t.value(out)[0];
  };

  Tape t;
  std::vector<Var> vs;
  for (const auto& x : ins) vs.push_back(t.leaf(x, true));
  Var out = build(t, vs);
  if (!w.empty()) out = t.weighted_sum(out, w);
  t.backward(out);

  const double h = 1e-6;
  for (std::size_t i = 0; i < ins.size(); ++i) {
    const Tensor& g = t.grad(vs[i]);
    REQUIRE(g.size() == ins[i].size());
    for (std::size_t e = 0; e < ins[i].size(); ++e) {
      std::vector<Tensor> pert = ins;
      pert[i][e] += h;
      const double up = eval(pert);
      pert[i][e] -= 2 * h;
      const double dn = eval(pert);
      const double num = (up - dn) / (2 * h);
      CHECK(std::abs(g[e] - num) / std::max(1.0, std::abs(num)) < tol);
    }
  }
}

Tensor rnd(std::vector<int> shape, unsigned long long seed, double lo = -1.5,
           double hi = 1.5) {
  Rng rng(seed);
  return random_uniform(std::move(shape), lo, hi, rng);
}

}  // namespace

TEST_CASE("elementwise op gradients") {
  Tensor a = rnd({3, 4}, 1), b = rnd({3, 4}, 2);
  check_grads({a, b}, [](Tape& t, const std::vector<Var>& v) {
    return t.add(v[0], v[1]);
  });
  check_grads({a, b}, [](Tape& t, const std::vector<Var>& v) {
    return t.sub(v[0], v[1]);
  });
  check_grads({a, b}, [](Tape& t, const std::vector<Var>& v) {
    return t.mul(v[0], v[1]);
  });
  check_grads({a}, [](Tape& t, const std::vector<Var>& v) {
    return t.scale(v[0], -1.3);
  });
  check_grads({a, Tensor::scalar(0.7)}, [](Tape& t, const std::vector<Var>& v) {
    return t.scale_by(v[0], v[1]);
  });
  check_grads({a, Tensor::scalar(0.25)}, [](Tape& t, const std::vector<Var>& v) {
    return t.prelu(v[0], v[1]);
  });
}

TEST_CASE("prelu forward splits at zero") {
  Tape t;
  Var x = t.leaf(Tensor::from({3}, {-2.0, 0.0, 5.0}));
  Var y = t.prelu(x, t.leaf(Tensor::scalar(0.1)));
  CHECK(t.value(y)[0] == doctest::Approx(-0.2));
  CHECK(t.value(y)[1] == 0.0);
  CHECK(t.value(y)[2] == 5.0);
}

TEST_CASE("linear algebra op gradients") {
  check_grads({rnd({3, 4}, 3), rnd({4, 2}, 4)},
              [](Tape& t, const std::vector<Var>& v) {
                return t.matmul(v[0], v[1]);
              });
  check_grads({rnd({5, 3}, 5), rnd({3, 2}, 6), rnd({2}, 7)},
              [](Tape& t, const std::vector<Var>& v) {
                return t.linear(v[0], v[1], v[2]);
              });
  check_grads({rnd({5, 3}, 8), rnd({3, 2}, 9)},
              [](Tape& t, const std::vector<Var>& v) {
                return t.linear(v[0], v[1], Var{});
              });
}

TEST_CASE("reshape-family ops move data as documented") {
  Tape t;
  // rows_to_front: out(s, p, q) = in(p*R + q, s), R=2 S=3
  Var in = t.leaf(Tensor::from({4, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
  Var out = t.rows_to_front(in, 2);
  CHECK(t.value(out).shape() == std::vector<int>{3, 2, 2});
  CHECK(t.value(out)(0, 0, 0) == 0.0);
  CHECK(t.value(out)(0, 1, 0) == 6.0);
  CHECK(t.value(out)(2, 0, 1) == 5.0);
  CHECK(t.value(out)(1, 1, 1) == 10.0);

  // pair_concat_rows: row p*R+q = [a_p | b_q], R=2 W=2
  Var a = t.leaf(Tensor::from({2, 2}, {1, 2, 3, 4}));
  Var b = t.leaf(Tensor::from({2, 2}, {5, 6, 7, 8}));
  Var pc = t.pair_concat_rows(a, b);
  CHECK(t.value(pc).shape() == std::vector<int>{4, 4});
  CHECK(t.value(pc)(0, 0) == 1.0);  // row (0,0) = [1 2 | 5 6]
  CHECK(t.value(pc)(0, 3) == 6.0);
  CHECK(t.value(pc)(1, 1) == 2.0);  // row (0,1) = [1 2 | 7 8]
  CHECK(t.value(pc)(1, 2) == 7.0);
  CHECK(t.value(pc)(2, 0) == 3.0);  // row (1,0) = [3 4 | 5 6]
  CHECK(t.value(pc)(3, 3) == 8.0);  // row (1,1) = [3 4 | 7 8]

  Var sw = t.swap01(t.leaf(Tensor::from({2, 3, 1}, {0, 1, 2, 3, 4, 5})));
  CHECK(t.value(sw).shape() == std::vector<int>{3, 2, 1});
  CHECK(t.value(sw)(1, 1, 0) == 4.0);

  Var ex = t.expand_front(t.leaf(Tensor::from({2, 2}, {1, 2, 3, 4})), 3);
  CHECK(t.value(ex).shape() == std::vector<int>{3, 2, 2});
  CHECK(t.value(ex)(2, 1, 0) == 3.0);
}

TEST_CASE("reshape-family op gradients") {
  check_grads({rnd({9, 2}, 10)}, [](Tape& t, const std::vector<Var>& v) {
    return t.rows_to_front(v[0], 3);
  });
  check_grads({rnd({3, 4}, 11), rnd({3, 4}, 12)},
              [](Tape& t, const std::vector<Var>& v) {
                return t.pair_concat_rows(v[0], v[1]);
              });
  check_grads({rnd({3, 2, 4}, 13)}, [](Tape& t, const std::vector<Var>& v) {
    return t.swap01(v[0]);
  });
  check_grads({rnd({2, 3}, 14)}, [](Tape& t, const std::vector<Var>& v) {
    return t.expand_front(v[0], 4);  // broadcast grads must sum over copies
  });
  check_grads({rnd({2, 6}, 15)}, [](Tape& t, const std::vector<Var>& v) {
    return t.reshape(v[0], {3, 4});
  });
}

TEST_CASE("aggregation forwards match plain loop references") {
  const int J = 3, T = 4, C = 2;
  Tensor f = rnd({J, T, C}, 20);
  Tensor as = rnd({T, J, J}, 21);
  Tensor at = rnd({J, T, T}, 22);

  Tape t;
  Var vf = t.leaf(f), vas = t.leaf(as), vat = t.leaf(at);

  Tensor want({J, T, C});
  for (int q = 0; q < J; ++q)
    for (int n = 0; n < T; ++n)
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int p = 0; p < J; ++p) s += as(n, p, q) * f(p, n, c);
        want(q, n, c) = s;
      }
  CHECK(max_abs_diff(t.value(t.frame_aggregate(vf, vas)), want) < 1e-14);

  for (int q = 0; q < J; ++q)
    for (int n = 0; n < T; ++n)
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int m = 0; m < T; ++m) s += at(q, m, n) * f(q, m, c);
        want(q, n, c) = s;
      }
  CHECK(max_abs_diff(t.value(t.joint_aggregate(vf, vat)), want) < 1e-14);

  const int V = J * T;
  Tensor ff = rnd({V, C}, 23), af = rnd({V, V}, 24);
  Tensor wantf({V, C});
  for (int v = 0; v < V; ++v)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int u = 0; u < V; ++u) s += af(u, v) * ff(u, c);
      wantf(v, c) = s;
    }
  CHECK(max_abs_diff(t.value(t.full_aggregate(t.leaf(ff), t.leaf(af))), wantf) <
        1e-13);
}

TEST_CASE("factored aggregation follows the index convention") {
  const int J = 3, T = 3, C = 2;
  Tensor f = rnd({J, T, C}, 30);
  Tensor as = rnd({T, J, J}, 31);
  Tensor at = rnd({J, T, T}, 32);
  Tape t;
  Var vf = t.leaf(f), vas = t.leaf(as), vat = t.leaf(at);

  auto reference = [&](IndexConvention conv) {
    Tensor want({J, T, C});
    for (int q = 0; q < J; ++q)
      for (int n = 0; n < T; ++n)
        for (int c = 0; c < C; ++c) {
          double acc = 0;
          for (int p = 0; p < J; ++p)
            for (int m = 0; m < T; ++m) {
              double s = 0, tt = 0;
              switch (conv) {
                case IndexConvention::SourceFrame:
                  s = as(m, p, q), tt = at(q, m, n);
                  break;
                case IndexConvention::OutputFrame:
                  s = as(n, p, q), tt = at(q, m, n);
                  break;
                case IndexConvention::OutputJointTemporal:
                  s = as(n, p, q), tt = at(p, m, n);
                  break;
              }
              acc += s * tt * f(p, m, c);
            }
          want(q, n, c) = acc;
        }
    return want;
  };
  for (IndexConvention conv :
       {IndexConvention::SourceFrame, IndexConvention::OutputFrame,
        IndexConvention::OutputJointTemporal}) {
    Var y = t.factored_aggregate(vf, vas, vat, conv);
    CHECK(max_abs_diff(t.value(y), reference(conv)) < 1e-13);
  }
}

TEST_CASE("aggregation op gradients") {
  const int J = 3, T = 3, C = 2;
  Tensor f = rnd({J, T, C}, 40), as = rnd({T, J, J}, 41), at = rnd({J, T, T}, 42);
  check_grads({f, as}, [](Tape& t, const std::vector<Var>& v) {
    return t.frame_aggregate(v[0], v[1]);
  });
  check_grads({f, at}, [](Tape& t, const std::vector<Var>& v) {
    return t.joint_aggregate(v[0], v[1]);
  });
  check_grads({rnd({6, 2}, 43), rnd({6, 6}, 44)},
              [](Tape& t, const std::vector<Var>& v) {
                return t.full_aggregate(v[0], v[1]);
              });
  for (IndexConvention conv :
       {IndexConvention::SourceFrame, IndexConvention::OutputFrame,
        IndexConvention::OutputJointTemporal}) {
    check_grads({f, as, at}, [conv](Tape& t, const std::vector<Var>& v) {
      return t.factored_aggregate(v[0], v[1], v[2], conv);
    });
  }
}

TEST_CASE("reduction gradients and reuse accumulation") {
  check_grads({rnd({3, 4}, 50)}, [](Tape& t, const std::vector<Var>& v) {
    return t.sum(v[0]);
  });
  // x feeding two ops accumulates both contributions
  Tape t;
  Var x = t.leaf(Tensor::from({2}, {1.0, 2.0}), true);
  Var y = t.sum(t.add(x, t.mul(x, x)));  // d/dx (x + x^2) = 1 + 2x
  t.backward(y);
  CHECK(t.grad(x)[0] == doctest::Approx(3.0));
  CHECK(t.grad(x)[1] == doctest::Approx(5.0));
}

TEST_CASE("mean_joint_distance value and gradient") {
  const int J = 2, T = 3;
  Tensor truth({J, T, 3}, 0.0);
  Tensor pred({J, T, 3}, 0.0);
  // one joint-frame displaced by (3,4,0) -> distance 5 over the window mean
  pred(0, 1, 0) = 3.0;
  pred(0, 1, 1) = 4.0;
  Tape t;
  Var vp = t.leaf(pred, true);
  Var d = t.mean_joint_distance(vp, truth, 1, 3);
  CHECK(t.value(d)[0] == doctest::Approx(5.0 / (J * 2)));
  t.backward(d);
  CHECK(t.grad(vp)(0, 1, 0) == doctest::Approx(0.6 / (J * 2)));
  CHECK(t.grad(vp)(0, 0, 0) == 0.0);  // outside the window

  Tensor pr = rnd({J, T, 3}, 60);
  Tensor tr = rnd({J, T, 3}, 61);
  check_grads({pr}, [&](Tape& tp, const std::vector<Var>& v) {
    return tp.mean_joint_distance(v[0], tr, 0, T);
  });
}
