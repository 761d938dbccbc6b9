#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/network.hpp"
#include "hetnet/signal.hpp"

namespace hetnet {

/// Beamformers of one cell: per user of the cell, the stacked M*Q vector.
using CellBeamformers = std::vector<Eigen::VectorXcd>;

/// One cell's quadratically constrained group-LASSO data:
///   min sum_i (v_i^H J v_i - 2 Re(v_i^H d_i)) + lambda sum_{i,q} ||v_i[q]||
///   s.t. sum_i ||v_i[q]||^2 <= P_q for every BS q.
struct QcGroupLassoInstance {
  int num_bs = 1;     // Q_k
  int num_users = 1;  // I_k
  int antennas = 1;   // M
  Eigen::MatrixXcd J;                 // (M Q) x (M Q), Hermitian PSD
  std::vector<Eigen::VectorXcd> d;    // per user, length M Q
  double lambda = 0.0;
  std::vector<double> power;          // per BS

  /// Optional (user, BS) mask; blocks with allowed == false are pinned to 0.
  /// Empty means every block is free.
  std::vector<std::vector<bool>> allowed;

  auto J_block(int q, int p) const {
    return J.block(q * antennas, p * antennas, antennas, antennas);
  }
  auto d_block(int user, int q) const { return d[static_cast<std::size_t>(user)].segment(q * antennas, antennas); }
  bool is_allowed(int user, int q) const {
    return allowed.empty() || allowed[static_cast<std::size_t>(user)][static_cast<std::size_t>(q)];
  }
};

/// J_k and d_i from the current receivers and weights. J sums over every
/// user of the network; d covers the users of `cell`.
QcGroupLassoInstance build_instance(const ChannelSet& channels, const ReceiverSet& u,
                                    const WeightSet& w, int cell, double lambda,
                                    double power);

/// c_i = d_i[q] - sum_{p != q} J[q,p] v_i[p].
Eigen::VectorXcd residual_c(const QcGroupLassoInstance& inst, const CellBeamformers& v,
                            int q, int user);

/// True when the block must be zero: ||c|| <= lambda / 2.
bool shrink_test(const Eigen::VectorXcd& c, double lambda);

/// Eigendecomposition of a Hermitian PSD block, used to evaluate
/// (J + eta I)^{-1} c for many eta at O(M) cost each.
struct HermitianSpectrum {
  Eigen::VectorXd eigenvalues;  // ascending, clamped at 0
  Eigen::MatrixXcd eigenvectors;

  explicit HermitianSpectrum(const Eigen::MatrixXcd& hermitian);
  double spectral_radius() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }
  Eigen::VectorXcd rotate(const Eigen::VectorXcd& c) const { return eigenvectors.adjoint() * c; }
  /// ||(J + eta I)^{-1} c|| given c_hat = rotate(c); +inf if singular with
  /// a null-space component.
  double shifted_solve_norm(const Eigen::VectorXcd& c_hat, double eta) const;
  Eigen::VectorXcd shifted_solve(const Eigen::VectorXcd& c_hat, double eta) const;
};

/// h(delta, mu) = delta * ||(J + (lambda delta / 2 + mu) I)^{-1} c||.
double h_value(const HermitianSpectrum& spectrum, const Eigen::VectorXcd& c_hat,
               double lambda, double delta, double mu);

struct BisectionTolerances {
  double delta = 1e-8;  // relative width of the delta bracket
  double mu = 1e-8;     // width of the mu bracket relative to (1 + mu_hi)
  int max_halvings = 200;
};

/// Upper bracket for delta valid for every multiplier in [0, mu_bar]:
/// 2 (rho(J) + mu_bar) / (||c|| - lambda/2).
double delta_upper_bound(double spectral_radius, double c_norm, double lambda,
                         double mu_bar);

/// Upper bracket for mu: 2 sqrt(A / P) max_{active} ||c||.
double mu_upper_bound(double power, int active_count, double max_c_norm);

/// Root of h(delta, mu) = 1 by bisection on [0, delta_bar]. Requires
/// ||c|| > lambda/2 and lambda > 0; throws std::invalid_argument otherwise.
double solve_delta(const Eigen::MatrixXcd& J_qq, const Eigen::VectorXcd& c,
                   double lambda, double mu, double tol);

/// Same, with a precomputed spectrum and explicit bracket.
double solve_delta(const HermitianSpectrum& spectrum, const Eigen::VectorXcd& c_hat,
                   double lambda, double mu, double delta_bar,
                   const BisectionTolerances& tol);

struct BlockSolveState {
  double mu = 0.0;
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  std::vector<double> delta;      // per user; 0 for inactive users
  std::vector<double> delta_hi;   // initial delta bracket per active user
  std::vector<bool> active;
  std::vector<double> c_norm;
  int mu_halvings = 0;
  bool mu_shortcut = false;  // accepted at mu = 0 without bisection
};

/// Exact minimization over the BS-q block of every user of the cell, other
/// blocks fixed. Writes the new blocks into `v`.
BlockSolveState block_update(const QcGroupLassoInstance& inst, CellBeamformers& v,
                             int q, const BisectionTolerances& tol = {});

/// Closed form for one user, one antenna: 0 below the threshold, otherwise
/// the unconstrained shrinkage or the power-saturated point.
std::complex<double> scalar_block_update(double J_qq, std::complex<double> c,
                                         double lambda, double power);

struct P3Options {
  double inner_tol = -1.0;  // <= 0 means 1e-6 * sqrt(max P)
  int max_passes = 50;
  BisectionTolerances bisection;
};

struct P3Result {
  CellBeamformers v;
  int passes = 0;
  bool converged = false;
};

/// Cyclic block updates over BS 0..Q-1 until the largest per-BS change is
/// below inner_tol or max_passes is reached.
P3Result solve_p3(const QcGroupLassoInstance& inst, CellBeamformers v_init,
                  const P3Options& options = {});

double p3_objective(const QcGroupLassoInstance& inst, const CellBeamformers& v);

/// Smooth part of the objective: sum_i (v_i^H J v_i - 2 Re(v_i^H d_i)).
double p3_smooth(const QcGroupLassoInstance& inst, const CellBeamformers& v);

}  // namespace hetnet
