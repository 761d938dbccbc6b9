#include "hetnet/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hetnet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

QcGroupLassoInstance build_instance(const ChannelSet& channels, const ReceiverSet& u,
                                    const WeightSet& w, int cell, double lambda,
                                    double power) {
  const NetworkDims& dims = channels.dims();
  if (static_cast<int>(u.size()) != dims.num_users() ||
      static_cast<int>(w.size()) != dims.num_users()) {
    throw std::invalid_argument("build_instance: receiver/weight count mismatch");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("build_instance: lambda must be >= 0");
  QcGroupLassoInstance inst;
  inst.num_bs = dims.Q;
  inst.num_users = dims.I;
  inst.antennas = dims.M;
  inst.lambda = lambda;
  inst.power.assign(static_cast<std::size_t>(dims.Q), power);
  const int n = dims.cell_antennas();
  inst.J = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < dims.num_users(); ++j) {
    const double wj = w[static_cast<std::size_t>(j)];
    if (!(wj > 0.0)) throw std::invalid_argument("build_instance: weights must be > 0");
    const Eigen::VectorXcd a = channels.toward(j, cell).adjoint() * u[static_cast<std::size_t>(j)];
    inst.J.noalias() += wj * (a * a.adjoint());
  }
  inst.d.reserve(static_cast<std::size_t>(dims.I));
  for (int i = 0; i < dims.I; ++i) {
    const int user = dims.user_index(cell, i);
    inst.d.push_back(w[static_cast<std::size_t>(user)] *
                     (channels.toward(user, cell).adjoint() * u[static_cast<std::size_t>(user)]));
  }
  return inst;
}

Eigen::VectorXcd residual_c(const QcGroupLassoInstance& inst, const CellBeamformers& v,
                            int q, int user) {
  const int m = inst.antennas;
  const auto& vu = v[static_cast<std::size_t>(user)];
  Eigen::VectorXcd c = inst.d_block(user, q);
  for (int p = 0; p < inst.num_bs; ++p) {
    if (p == q) continue;
    c.noalias() -= inst.J_block(q, p) * vu.segment(p * m, m);
  }
  return c;
}

bool shrink_test(const Eigen::VectorXcd& c, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("shrink_test: lambda must be >= 0");
  return c.norm() <= 0.5 * lambda;
}

HermitianSpectrum::HermitianSpectrum(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hermitian);
  eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  eigenvectors = eig.eigenvectors();
}

double HermitianSpectrum::shifted_solve_norm(const Eigen::VectorXcd& c_hat,
                                             double eta) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < c_hat.size(); ++j) {
    const double mag2 = std::norm(c_hat(j));
    const double denom = eigenvalues(j) + eta;
    if (denom <= 0.0) {
      if (mag2 > 0.0) return kInf;
      continue;
    }
    s += mag2 / (denom * denom);
  }
  return std::sqrt(s);
}

Eigen::VectorXcd HermitianSpectrum::shifted_solve(const Eigen::VectorXcd& c_hat,
                                                  double eta) const {
  Eigen::VectorXcd scaled(c_hat.size());
  for (Eigen::Index j = 0; j < c_hat.size(); ++j) {
    const double denom = eigenvalues(j) + eta;
    // Pseudo-inverse on an exactly singular direction.
    scaled(j) = denom > 0.0 ? c_hat(j) / denom : std::complex<double>(0.0, 0.0);
  }
  return eigenvectors * scaled;
}

double h_value(const HermitianSpectrum& spectrum, const Eigen::VectorXcd& c_hat,
               double lambda, double delta, double mu) {
  if (delta <= 0.0) return 0.0;
  return delta * spectrum.shifted_solve_norm(c_hat, 0.5 * lambda * delta + mu);
}

double delta_upper_bound(double spectral_radius, double c_norm, double lambda,
                         double mu_bar) {
  return 2.0 * (spectral_radius + mu_bar) / (c_norm - 0.5 * lambda);
}

double mu_upper_bound(double power, int active_count, double max_c_norm) {
  return 2.0 * std::sqrt(static_cast<double>(active_count) / power) * max_c_norm;
}

double solve_delta(const HermitianSpectrum& spectrum, const Eigen::VectorXcd& c_hat,
                   double lambda, double mu, double delta_bar,
                   const BisectionTolerances& tol) {
  if (!(delta_bar > 0.0)) return 0.0;  // J = 0 and mu = 0: no finite-norm root
  double lo = 0.0;
  double hi = delta_bar;
  for (int it = 0; it < tol.max_halvings && hi - lo > tol.delta * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (h_value(spectrum, c_hat, lambda, mid, mu) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double solve_delta(const Eigen::MatrixXcd& J_qq, const Eigen::VectorXcd& c,
                   double lambda, double mu, double tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_delta: lambda must be > 0");
  if (!(mu >= 0.0)) throw std::invalid_argument("solve_delta: mu must be >= 0");
  const double cn = c.norm();
  if (cn <= 0.5 * lambda) {
    throw std::invalid_argument("solve_delta: ||c|| <= lambda/2, block must be shrunk");
  }
  HermitianSpectrum spectrum(J_qq);
  BisectionTolerances t;
  t.delta = tol;
  const double bar = delta_upper_bound(spectrum.spectral_radius(), cn, lambda, mu);
  return solve_delta(spectrum, spectrum.rotate(c), lambda, mu, bar, t);
}

BlockSolveState block_update(const QcGroupLassoInstance& inst, CellBeamformers& v,
                             int q, const BisectionTolerances& tol) {
  const int m = inst.antennas;
  const int users = inst.num_users;
  const double lambda = inst.lambda;
  const double power = inst.power[static_cast<std::size_t>(q)];
  const auto n_users = static_cast<std::size_t>(users);

  BlockSolveState st;
  st.delta.assign(n_users, 0.0);
  st.delta_hi.assign(n_users, 0.0);
  st.active.assign(n_users, false);
  st.c_norm.assign(n_users, 0.0);

  std::vector<Eigen::VectorXcd> c(n_users);
  int active_count = 0;
  double max_c = 0.0;
  for (int i = 0; i < users; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    c[iu] = residual_c(inst, v, q, i);
    st.c_norm[iu] = c[iu].norm();
    if (inst.is_allowed(i, q) && !shrink_test(c[iu], lambda)) {
      st.active[iu] = true;
      ++active_count;
      max_c = std::max(max_c, st.c_norm[iu]);
    } else {
      v[iu].segment(q * m, m).setZero();
    }
  }
  if (active_count == 0) return st;

  const HermitianSpectrum spectrum(inst.J_block(q, q));
  std::vector<Eigen::VectorXcd> c_hat(n_users);
  for (int i = 0; i < users; ++i) {
    if (st.active[static_cast<std::size_t>(i)]) {
      c_hat[static_cast<std::size_t>(i)] = spectrum.rotate(c[static_cast<std::size_t>(i)]);
    }
  }

  const double mu_bar = mu_upper_bound(power, active_count, max_c);
  st.mu_hi = mu_bar;
  if (lambda > 0.0) {
    for (int i = 0; i < users; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (st.active[iu]) {
        st.delta_hi[iu] =
            delta_upper_bound(spectrum.spectral_radius(), st.c_norm[iu], lambda, mu_bar);
      }
    }
  }

  // Sum over active users of ||v_i(mu)||^2, with ||v_i|| = 1/delta_i when
  // lambda > 0. Fills st.delta as a side effect.
  auto total_power = [&](double mu) {
    double total = 0.0;
    for (int i = 0; i < users; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (!st.active[iu]) continue;
      if (lambda > 0.0) {
        const double delta =
            solve_delta(spectrum, c_hat[iu], lambda, mu, st.delta_hi[iu], tol);
        st.delta[iu] = delta;
        total += delta > 0.0 ? 1.0 / (delta * delta) : kInf;
      } else {
        const double n = spectrum.shifted_solve_norm(c_hat[iu], mu);
        total += n * n;
      }
    }
    return total;
  };

  // The delta roots carry relative error tol.delta, so ||v||^2 = 1/delta^2 is
  // only known to about 2 tol.delta; the power guard below absorbs the rest.
  double mu = 0.0;
  if (total_power(0.0) <= power * (1.0 + 4.0 * tol.delta)) {
    st.mu_shortcut = true;
    st.mu_hi = 0.0;
  } else {
    double lo = 0.0;
    double hi = mu_bar;
    int it = 0;
    for (; it < tol.max_halvings && hi - lo > tol.mu * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (total_power(mid) < power) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    st.mu_halvings = it;
    st.mu_lo = lo;
    st.mu_hi = hi;
    mu = hi;
    total_power(mu);
  }
  st.mu = mu;

  double block_power = 0.0;
  for (int i = 0; i < users; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (!st.active[iu]) continue;
    const double eta = 0.5 * lambda * st.delta[iu] + mu;
    auto blk = v[iu].segment(q * m, m);
    blk = spectrum.shifted_solve(c_hat[iu], eta);
    block_power += blk.squaredNorm();
  }
  if (block_power > power) {
    const double scale = std::sqrt(power / block_power);
    for (int i = 0; i < users; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (st.active[iu]) v[iu].segment(q * m, m) *= scale;
    }
  }
  return st;
}

std::complex<double> scalar_block_update(double J_qq, std::complex<double> c,
                                         double lambda, double power) {
  const double mag = std::abs(c);
  if (mag <= 0.5 * lambda) return {0.0, 0.0};
  const std::complex<double> phase = c / mag;
  const double unconstrained = J_qq > 0.0 ? (mag - 0.5 * lambda) / J_qq : kInf;
  const double root_p = std::sqrt(power);
  return phase * (unconstrained <= root_p ? unconstrained : root_p);
}

double p3_smooth(const QcGroupLassoInstance& inst, const CellBeamformers& v) {
  double f = 0.0;
  for (int i = 0; i < inst.num_users; ++i) {
    const auto& vi = v[static_cast<std::size_t>(i)];
    f += vi.dot(inst.J * vi).real() - 2.0 * vi.dot(inst.d[static_cast<std::size_t>(i)]).real();
  }
  return f;
}

double p3_objective(const QcGroupLassoInstance& inst, const CellBeamformers& v) {
  double pen = 0.0;
  for (int i = 0; i < inst.num_users; ++i) {
    for (int q = 0; q < inst.num_bs; ++q) {
      pen += v[static_cast<std::size_t>(i)].segment(q * inst.antennas, inst.antennas).norm();
    }
  }
  return p3_smooth(inst, v) + inst.lambda * pen;
}

P3Result solve_p3(const QcGroupLassoInstance& inst, CellBeamformers v_init,
                  const P3Options& options) {
  double inner_tol = options.inner_tol;
  if (!(inner_tol > 0.0)) {
    const double p_max = *std::max_element(inst.power.begin(), inst.power.end());
    inner_tol = 1e-6 * std::sqrt(p_max);
  }
  P3Result out;
  out.v = std::move(v_init);
  const int m = inst.antennas;
  for (int pass = 0; pass < options.max_passes; ++pass) {
    double max_change = 0.0;
    for (int q = 0; q < inst.num_bs; ++q) {
      std::vector<Eigen::VectorXcd> before;
      before.reserve(static_cast<std::size_t>(inst.num_users));
      for (int i = 0; i < inst.num_users; ++i) {
        before.push_back(out.v[static_cast<std::size_t>(i)].segment(q * m, m));
      }
      block_update(inst, out.v, q, options.bisection);
      double change2 = 0.0;
      for (int i = 0; i < inst.num_users; ++i) {
        change2 += (out.v[static_cast<std::size_t>(i)].segment(q * m, m) -
                    before[static_cast<std::size_t>(i)]).squaredNorm();
      }
      max_change = std::max(max_change, std::sqrt(change2));
    }
    out.passes = pass + 1;
    if (max_change < inner_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace hetnet
