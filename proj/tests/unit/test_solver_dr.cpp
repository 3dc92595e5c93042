/*
 * Copyright 2026 The NRTO Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nrto/solver_dr.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace nrto;
using namespace nrto::testing;

namespace {

Vec randn(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

SpMat sparse(const Mat& m) { return m.sparseView(); }

DrSettings tight() {
  DrSettings s;
  s.eps = 1e-10;
  s.max_iters = 200000;
  return s;
}

}  // namespace

TEST_CASE("kkt factor solves a 2x2 system") {
  for (int threshold : {0, 1000}) {
    KktFactor kkt;
    kkt.factor(sparse(Mat::Constant(1, 1, 1.0)), sparse(Mat::Constant(1, 1, 1.0)), 1.0, 1.0, threshold);  // [[2, 1], [1, -1]]
    CHECK(kkt.is_dense() == (threshold > 0));
    const Vec x = kkt.solve((Vec(2) << 3.0, 0.0).finished());
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(1.0));
  }
}

TEST_CASE("kkt factor matches the dense inverse") {
  std::mt19937_64 rng(2);
  const ConicQP qp = random_conic_qp(rng, 8, 2, 3);
  const double sigma = 1e-3, r_s = 0.5;
  Mat k = Mat::Zero(qp.n() + qp.m(), qp.n() + qp.m());
  k.topLeftCorner(qp.n(), qp.n()) = Mat(qp.p) + sigma * Mat::Identity(qp.n(), qp.n());
  k.bottomLeftCorner(qp.m(), qp.n()) = Mat(qp.a);
  k.topRightCorner(qp.n(), qp.m()) = Mat(qp.a).transpose();
  k.bottomRightCorner(qp.m(), qp.m()) = -Mat::Identity(qp.m(), qp.m()) / r_s;
  const Vec rhs = randn(rng, k.rows());
  const Vec ref = k.fullPivLu().solve(rhs);
  for (int threshold : {0, 1000}) {
    KktFactor kkt;
    kkt.factor(qp.p, qp.a, sigma, r_s, threshold);
    CHECK((kkt.solve(rhs) - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
  }
}

TEST_CASE("prox step matches the dense normal equations") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const ConicQP qp = random_conic_qp(rng, 6 + trial, 2, 2);
    DrSettings s;
    s.scaling_iters = 0;
    s.sigma = 0.1;
    const DrSolver solver(qp, s);
    const DrState st{randn(rng, qp.n()), randn(rng, qp.m())};
    const auto prox = solver.prox_affine(st);
    const auto ref = dense_prox_oracle(qp, st.chi_tilde, st.s_tilde, s.sigma, s.r_s);
    CHECK((prox.chi - ref.chi).norm() <= 1e-9 * (1.0 + ref.chi.norm()));
    CHECK((prox.s - ref.s).norm() <= 1e-9 * (1.0 + ref.s.norm()));
  }
}

TEST_CASE("unconstrained diagonal QP returns -P^-1 q") {
  ConicQP qp;
  qp.p = sparse(Vec((Vec(3) << 1.0, 2.0, 4.0).finished()).asDiagonal().toDenseMatrix());
  qp.q = (Vec(3) << 1.0, -2.0, 4.0).finished();
  qp.a = sparse(-Mat::Identity(3, 3));
  qp.b = Vec::Constant(3, 100.0);
  qp.cones = {ConeSpec::nonneg(3)};
  const DrResult r = solve_dr(qp, tight());
  CHECK(r.status == DrStatus::converged);
  CHECK((r.chi - (Vec(3) << -1.0, 1.0, -1.0).finished()).norm() < 1e-6);
  CHECK(r.y.norm() < 1e-6);
}

TEST_CASE("converged iterate is a fixed point") {
  std::mt19937_64 rng(4);
  const ConicQP qp = random_conic_qp(rng, 10, 3, 4);
  DrSolver solver(qp, tight());
  const DrResult r = solver.solve();
  REQUIRE(r.status == DrStatus::converged);
  DrState st = solver.state();
  CHECK(solver.step(st) <= 1e-9);
}

TEST_CASE("random conic QPs agree with the projected gradient oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial % 9;
    const ConicQP qp = random_conic_qp(rng, n, 1 + trial % 3, trial % 4);
    const DrResult r = solve_dr(qp, tight());
    REQUIRE(r.status == DrStatus::converged);
    CHECK(conic_kkt_certificate(qp, r.chi, r.s, r.y).passes(1e-5, 1e-5));
    const PgResult ref = projected_gradient_oracle(qp);
    CHECK((r.chi - ref.chi).norm() <= 1e-4 * (1.0 + ref.chi.norm()));
    CHECK(std::abs(qp.objective(r.chi) - ref.objective) <= 1e-4 * (1.0 + std::abs(ref.objective)));
  }
}

TEST_CASE("changing q or b keeps the factorization") {
  std::mt19937_64 rng(6);
  ConicQP qp = random_conic_qp(rng, 8, 2, 2);
  DrSolver solver(qp, tight());
  solver.solve();
  solver.update_q(randn(rng, qp.n()));
  solver.update_b(qp.b + 0.1 * randn(rng, qp.m()).cwiseAbs());
  const DrResult r = solver.solve();
  CHECK(solver.factorizations() == 1);
  CHECK(conic_kkt_certificate(solver.problem(), r.chi, r.s, r.y).passes(1e-5, 1e-5));
}

TEST_CASE("ruiz scaling keeps soc blocks uniform") {
  std::mt19937_64 rng(7);
  const ConicQP qp = random_conic_qp(rng, 10, 3, 3);
  const Scaling sc = ruiz_scaling(qp, 10);
  Eigen::Index off = 0;
  for (const auto& c : qp.cones) {
    if (c.kind == ConeKind::soc) {
      const Vec block = sc.e.segment(off, c.dim);
      CHECK(block.maxCoeff() == block.minCoeff());
    }
    off += c.dim;
  }
  CHECK(sc.d.minCoeff() > 0.0);
  CHECK(sc.c > 0.0);
}

TEST_CASE("standard form of a one-constraint block") {
  const LinearizedSubproblem sub = hand_subproblem(1, 1, Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 0.7),
                                                   Vec::Constant(1, -1.0), 1.0);
  const ConicQP qp = to_standard_form(sub, 3.0, Vec::Constant(1, 0.5), Vec::Constant(1, 0.6));
  CHECK(Mat(qp.a) == (Mat(2, 2) << 0.0, -1.0, -1.0, 0.0).finished());
  CHECK(qp.b == (Vec(2) << 0.0, 0.7).finished());
  CHECK(Mat(qp.p) == (Mat(2, 2) << 2.0, 0.0, 0.0, 3.0).finished());
  CHECK(qp.q(0) == 0.0);
  CHECK(qp.q(1) == doctest::Approx(-3.0 * (0.5 + 0.6 / 3.0)));
  REQUIRE(qp.cones.size() == 1);
  CHECK(qp.cones[0].kind == ConeKind::soc);
}

TEST_CASE("malformed problems are rejected") {
  std::mt19937_64 rng(8);
  ConicQP qp = random_conic_qp(rng, 5, 1, 1);
  qp.b.conservativeResize(qp.m() + 1);
  CHECK_THROWS_AS(qp.check(), DimensionError);
  DrSettings s;
  s.alpha = 1.5;
  CHECK_THROWS(DrSolver(random_conic_qp(rng, 5, 1, 1), s));
}
