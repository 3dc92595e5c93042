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

#ifndef NRTO_SOLVER_DR_HPP
#define NRTO_SOLVER_DR_HPP

#include "nrto/cone.hpp"
#include "nrto/core.hpp"
#include "nrto/linearize.hpp"

#include <Eigen/SparseCholesky>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace nrto {

/// min 0.5 chi' P chi + q' chi  s.t.  A chi + s = b,  s in K.
struct ConicQP {
  SpMat p;  // full symmetric storage
  Vec q;
  SpMat a;
  Vec b;
  std::vector<ConeSpec> cones;

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(b.size()); }
  void check() const;
  double objective(const Vec& chi) const;
};

struct DrSettings {
  double alpha = 0.9;   // relaxation, kept in (0, 1)
  double sigma = 1e-6;  // R_chi = sigma I
  double r_s = 0.5;     // R_s = r_s I
  double eps = 1e-4;    // fixed-point residual tolerance
  int max_iters = 100;
  bool warm_start = true;
  int dense_threshold = 200;  // dense LDL' below this KKT dimension
  int scaling_iters = 10;     // Ruiz equilibration passes, 0 disables
};

/// Diagonal equilibration chi = D chi_s, s = E^{-1} s_s, cost scaled by c.
/// E is constant on every soc block so the cones are preserved.
struct Scaling {
  Vec d;
  Vec e;
  double c = 1.0;
};

/// Ruiz equilibration of the KKT matrix [P A'; A 0].
Scaling ruiz_scaling(const ConicQP& qp, int iters);

enum class DrStatus { converged, max_iters };
std::string to_string(DrStatus status);

/// Factorization of [P + sigma I, A'; A, -I / r_s]. The matrix is
/// quasi-definite, so any symmetric ordering admits an LDL' factorization.
class KktFactor {
 public:
  void factor(const SpMat& p, const SpMat& a, double sigma, double r_s, int dense_threshold);
  Vec solve(const Vec& rhs) const;

  int dim() const { return dim_; }
  bool is_dense() const { return dense_; }
  bool ready() const { return ready_; }

  /// Process-wide number of factorizations performed (instrumentation).
  static long total_factorizations();

 private:
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> sparse_;
  Eigen::LDLT<Mat> dense_ldlt_;
  int dim_ = 0;
  bool dense_ = false;
  bool ready_ = false;
};

/// Shadow iterate xi_tilde = (chi_tilde, s_tilde).
struct DrState {
  Vec chi_tilde;
  Vec s_tilde;
};

struct DrResult {
  Vec chi;
  Vec s;  // in K
  Vec y;  // in K*, orthogonal to s
  int iterations = 0;
  DrStatus status = DrStatus::max_iters;
  double residual = 0.0;
  double projection_seconds = 0.0;  // time spent in the cone projection stage
};

struct DrTraceRow {
  int iteration = 0;
  double residual = 0.0;
  double objective = 0.0;
};

/// Relaxed Douglas-Rachford on a fixed (P, A, cones). q and b may change
/// between solves without refactoring.
class DrSolver {
 public:
  DrSolver() = default;
  DrSolver(ConicQP qp, DrSettings settings);

  void update_q(const Vec& q);
  void update_b(const Vec& b);

  const ConicQP& problem() const { return qp_; }
  const Scaling& scaling() const { return scale_; }
  const DrSettings& settings() const { return settings_; }
  DrState& state() { return state_; }
  const DrState& state() const { return state_; }
  void reset_state();
  int factorizations() const { return factorizations_; }

  /// Exact minimizer of the regularized equality-constrained QP around
  /// (chi_tilde, s_tilde). Returns (chi, s, y) of the scaled problem; the
  /// shadow iterate lives in scaled coordinates too.
  struct Prox {
    Vec chi;
    Vec s;
    Vec y;
  };
  Prox prox_affine(const DrState& st) const;

  /// One relaxed DR update of st. Returns the fixed-point residual
  /// |s_tilde_new - s_tilde_old|; `out` (optional) receives the recovered
  /// primal/dual pair of this iteration.
  double step(DrState& st, DrResult* out = nullptr) const;

  DrResult solve();

  void set_trace(std::vector<DrTraceRow>* sink) { trace_ = sink; }

 private:
  ConicQP qp_;      // as given
  ConicQP scaled_;  // equilibrated copy the iteration runs on
  Scaling scale_;
  DrSettings settings_;
  KktFactor kkt_;
  DrState state_;
  int factorizations_ = 0;
  std::vector<DrTraceRow>* trace_ = nullptr;
};

/// One-shot convenience wrapper. When warm is given it seeds and receives
/// the shadow iterate.
DrResult solve_dr(const ConicQP& qp, const DrSettings& settings, DrState* warm = nullptr);

struct KktCertificate {
  double primal = 0.0;           // |A chi + s - b| / (1 + |b|)
  double dual = 0.0;             // |P chi + q + A' y| / (1 + |q|)
  double cone_s = 0.0;           // violation of s in K
  double cone_y = 0.0;           // violation of y in K*
  double complementarity = 0.0;  // |<s, y>| / (1 + |s||y|)

  bool passes(double primal_tol = 1e-6, double dual_tol = 1e-5) const {
    return primal <= primal_tol && dual <= dual_tol && cone_s <= primal_tol && cone_y <= dual_tol &&
           complementarity <= dual_tol;
  }
};

KktCertificate conic_kkt_certificate(const ConicQP& qp, const Vec& chi, const Vec& s, const Vec& y);

/// (k_v, p_tilde) block of the inner problem in standard form:
/// chi = [k_v; p_tilde], P = blkdiag(Q_v, rho I), q = [0; -rho (p + lambda / rho)],
/// one soc block (p_tilde_j, A_hat_j k_v + b_hat_j) per constraint.
ConicQP to_standard_form(const LinearizedSubproblem& sub, double rho, const Vec& p_prev, const Vec& lambda_prev);
Vec block1_linear_term(const LinearizedSubproblem& sub, double rho, const Vec& p_prev, const Vec& lambda_prev);

void write_trace_csv(std::ostream& os, const std::vector<DrTraceRow>& rows);

}  // namespace nrto

#endif  // NRTO_SOLVER_DR_HPP
