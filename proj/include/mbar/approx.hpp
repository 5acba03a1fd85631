#pragma once

// Closed-form Gaussian error propagation for metric distributions.
//
// The RMSE route condenses all ratings into Z = mean((X - pi)^2), takes the
// first two moments of Z exactly and pushes them through sqrt with a
// first-order Taylor step. The MAE route needs no square root: it averages
// folded-normal moments directly.

#include "mbar/core.hpp"
#include "mbar/error.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace mbar {

/// Central moments m_0..m_k of a scalar random variable and derivatives
/// g(mu), g'(mu), ... of a mapping at its mean.
template <typename Scalar>
struct TaylorMoments {
  std::vector<Scalar> central_moments;
  std::vector<Scalar> derivatives;

  /// Moments m_0..m_4 of N(mu, variance).
  static TaylorMoments gaussian(Scalar variance, std::vector<Scalar> derivatives) {
    return {{Scalar(1), Scalar(0), variance, Scalar(0), Scalar(3) * variance * variance}, std::move(derivatives)};
  }
};

/// sqrt and its first two derivatives at x.
template <typename Scalar>
std::vector<Scalar> sqrt_derivatives(Scalar x) {
  const Scalar r = std::sqrt(x);
  return {r, Scalar(1) / (Scalar(2) * r), Scalar(-1) / (Scalar(4) * x * r)};
}

namespace detail {

template <typename Scalar>
void require_taylor_inputs(const TaylorMoments<Scalar>& tm, int order, int moments_needed) {
  if (order < 0) throw std::invalid_argument("taylor: negative order");
  if (static_cast<int>(tm.central_moments.size()) <= moments_needed) {
    throw std::invalid_argument("taylor: central moment m_" + std::to_string(moments_needed) + " missing");
  }
  if (static_cast<int>(tm.derivatives.size()) <= order) {
    throw std::invalid_argument("taylor: derivative of order " + std::to_string(order) + " missing");
  }
}

template <typename Scalar>
Scalar factorial(int k) {
  Scalar f{1};
  for (int i = 2; i <= k; ++i) f *= Scalar(i);
  return f;
}

}  // namespace detail

/// E[g(X)] truncated after the order-th Taylor term: sum g^(k)(mu)/k! * m_k.
template <typename Scalar>
Scalar taylor_expectation(const TaylorMoments<Scalar>& tm, int order) {
  detail::require_taylor_inputs(tm, order, order);
  Scalar e{0};
  for (int k = 0; k <= order; ++k) {
    e += tm.derivatives[k] / detail::factorial<Scalar>(k) * tm.central_moments[k];
  }
  return e;
}

/// V[g(X)] truncated after the order-th term: sum (g^(k)(mu)/k!)^2 (m_2k - m_k^2).
template <typename Scalar>
Scalar taylor_variance(const TaylorMoments<Scalar>& tm, int order) {
  detail::require_taylor_inputs(tm, order, 2 * order);
  Scalar v{0};
  for (int k = 1; k <= order; ++k) {
    const Scalar c = tm.derivatives[k] / detail::factorial<Scalar>(k);
    v += c * c * (tm.central_moments[2 * k] - tm.central_moments[k] * tm.central_moments[k]);
  }
  return v;
}

/// Mean and variance of Z = (1/N) sum Y_nu, given per-pair E[Y_nu], V[Y_nu].
template <typename Scalar>
struct CondensedMoments {
  Scalar mean{0};
  Scalar variance{0};
};

/// First-order sqrt step: N(sqrt(E[Z]), V[Z] / (4 E[Z])).
template <typename Scalar>
GaussianSummary<Scalar> sqrt_propagate(const CondensedMoments<Scalar>& z) {
  if (!(z.mean > Scalar(0))) throw DegenerateError("degenerate barrier: E[Z] is zero");
  const auto tm = TaylorMoments<Scalar>::gaussian(z.variance, sqrt_derivatives(z.mean));
  return {taylor_expectation(tm, 1), taylor_variance(tm, 1)};
}

/// Moments of Z for squared residuals with per-pair variance s2 and offset
/// d = mu - pi: E[Y] = s2 + d^2, V[Y] = 2 s2^2 + 4 d^2 s2 (noncentral chi-square).
template <typename VarDerived, typename OffDerived>
CondensedMoments<typename VarDerived::Scalar> squared_residual_moments(const Eigen::MatrixBase<VarDerived>& variances,
                                                                       const Eigen::MatrixBase<OffDerived>& offsets) {
  using Scalar = typename VarDerived::Scalar;
  if (variances.size() != offsets.size()) throw std::invalid_argument("variances and offsets differ in length");
  if (variances.size() == 0) throw std::invalid_argument("no rating distributions");
  if ((variances.array() < Scalar(0)).any()) throw std::invalid_argument("negative variance");
  const Scalar n = static_cast<Scalar>(variances.size());
  const auto d2 = offsets.array().square();
  const Scalar sum_e = compensated_sum((variances.array() + d2).matrix());
  const Scalar sum_v =
      compensated_sum((Scalar(2) * variances.array().square() + Scalar(4) * d2 * variances.array()).matrix());
  return {sum_e / n, sum_v / (n * n)};
}

/// Approximate distribution of the optimal recommender's RMSE:
/// N( sqrt(sum s2 / N), sum s2^2 / (2 N sum s2) ).
/// Throws DegenerateError when every variance is zero.
template <typename Derived>
GaussianSummary<typename Derived::Scalar> magic_barrier_rmse(const Eigen::MatrixBase<Derived>& variances) {
  using Scalar = typename Derived::Scalar;
  if (variances.size() == 0) throw std::invalid_argument("magic_barrier_rmse: no variances");
  if ((variances.array() < Scalar(0)).any()) throw std::invalid_argument("magic_barrier_rmse: negative variance");
  const Scalar n = static_cast<Scalar>(variances.size());
  const Scalar sum2 = compensated_sum(variances);
  if (!(sum2 > Scalar(0))) throw DegenerateError("degenerate barrier: all variances are zero");
  const Scalar sum4 = compensated_sum(variances.array().square().matrix());
  return {std::sqrt(sum2 / n), sum4 / (Scalar(2) * n * sum2)};
}

inline Gaussian magic_barrier_rmse(std::span<const double> variances) {
  return magic_barrier_rmse(Eigen::Map<const Eigen::VectorXd>(variances.data(), static_cast<Eigen::Index>(variances.size())));
}

/// Barrier moments with the second-order Taylor corrections alongside the
/// first-order values used by magic_barrier_rmse.
template <typename Scalar>
struct BarrierDiagnostics {
  CondensedMoments<Scalar> z;
  GaussianSummary<Scalar> first_order;
  GaussianSummary<Scalar> second_order;
};

template <typename Derived>
BarrierDiagnostics<typename Derived::Scalar> barrier_diagnostics(const Eigen::MatrixBase<Derived>& variances) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto z = squared_residual_moments(variances, Vec::Zero(variances.size()));
  if (!(z.mean > Scalar(0))) throw DegenerateError("degenerate barrier: all variances are zero");
  const auto tm = TaylorMoments<Scalar>::gaussian(z.variance, sqrt_derivatives(z.mean));
  return {z,
          {taylor_expectation(tm, 1), taylor_variance(tm, 1)},
          {taylor_expectation(tm, 2), taylor_variance(tm, 2)}};
}

/// RMSE distribution of a (possibly biased) predictor with per-pair offsets
/// d = mu - pi. Zero offsets reproduce magic_barrier_rmse.
template <typename VarDerived, typename OffDerived>
GaussianSummary<typename VarDerived::Scalar> rmse_distribution(const Eigen::MatrixBase<VarDerived>& variances,
                                                               const Eigen::MatrixBase<OffDerived>& offsets) {
  using Scalar = typename VarDerived::Scalar;
  const auto z = squared_residual_moments(variances, offsets);
  if (!(z.mean > Scalar(0))) throw DegenerateError("degenerate RMSE distribution: no variance and no offset");
  // Same closed form as the barrier, rearranged so d = 0 matches it bit for bit.
  if ((offsets.array() == Scalar(0)).all()) return magic_barrier_rmse(variances);
  return sqrt_propagate(z);
}

Gaussian rmse_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors);

/// E|N(d, s2)| and V|N(d, s2)| (folded normal).
template <typename Scalar>
GaussianSummary<Scalar> folded_normal_moments(Scalar offset, Scalar variance) {
  const Scalar second = offset * offset + variance;
  if (!(variance > Scalar(0))) return {std::abs(offset), Scalar(0)};
  const Scalar s = std::sqrt(variance);
  const Scalar mean = s * std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>) *
                          std::exp(-offset * offset / (Scalar(2) * variance)) +
                      offset * (Scalar(1) - Scalar(2) * standard_normal_cdf(-offset / s));
  return {mean, std::max(Scalar(0), second - mean * mean)};
}

/// MAE distribution: averaged folded-normal moments.
template <typename VarDerived, typename OffDerived>
GaussianSummary<typename VarDerived::Scalar> mae_distribution(const Eigen::MatrixBase<VarDerived>& variances,
                                                              const Eigen::MatrixBase<OffDerived>& offsets) {
  using Scalar = typename VarDerived::Scalar;
  if (variances.size() != offsets.size()) throw std::invalid_argument("variances and offsets differ in length");
  if (variances.size() == 0) throw std::invalid_argument("no rating distributions");
  const Eigen::Index n = variances.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> means(n), vars(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto m = folded_normal_moments<Scalar>(offsets[i], variances[i]);
    means[i] = m.mean;
    vars[i] = m.variance;
  }
  const Scalar count = static_cast<Scalar>(n);
  return {compensated_sum(means) / count, compensated_sum(vars) / (count * count)};
}

Gaussian mae_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors);

/// Closed-form metric distribution for either kind.
Gaussian metric_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                             MetricKind metric);

}  // namespace mbar
