#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "alignlab/errors.hpp"
#include "alignlab/rng.hpp"

namespace alignlab {

enum class Block { dominant, bulk };

inline const char* block_name(Block b) {
  return b == Block::dominant ? "D" : "B";
}

/// Hessian eigenvalues in descending order, split after index `k` into a
/// dominant block (the first k) and a bulk block (the remaining d - k).
///
/// Invariants: every eigenvalue is finite and positive, the list is
/// non-increasing, and lambda_k > lambda_{k+1} strictly.
template <typename Scalar = double>
class Spectrum {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  Spectrum(Vector lambdas, Index k) : lambdas_(std::move(lambdas)), k_(k) {
    const Index d = lambdas_.size();
    if (d < 2) throw ParameterError("spectrum needs at least two eigenvalues");
    if (k_ < 1 || k_ > d - 1)
      throw ParameterError("split index k must satisfy 1 <= k <= d-1");
    for (Index i = 0; i < d; ++i) {
      if (!std::isfinite(double(lambdas_[i])) || !(lambdas_[i] > Scalar(0)))
        throw ParameterError("eigenvalues must be finite and positive");
      if (i > 0 && lambdas_[i] > lambdas_[i - 1])
        throw ParameterError("eigenvalues must be sorted in non-increasing order");
    }
    if (!(lambdas_[k_ - 1] > lambdas_[k_]))
      throw ParameterError("spectrum needs a strict gap lambda_k > lambda_{k+1}");
  }

  const Vector& lambdas() const { return lambdas_; }
  Index dim() const { return lambdas_.size(); }
  Index k() const { return k_; }
  Index bulk_size() const { return dim() - k_; }

  auto dominant() const { return lambdas_.head(k_); }
  auto bulk() const { return lambdas_.tail(dim() - k_); }

  Scalar lambda_max() const { return lambdas_[0]; }
  Scalar lambda_min() const { return lambdas_[dim() - 1]; }
  /// lambda_k, the smallest dominant eigenvalue.
  Scalar lambda_k() const { return lambdas_[k_ - 1]; }
  /// lambda_{k+1}, the largest bulk eigenvalue.
  Scalar lambda_k1() const { return lambdas_[k_]; }

  Scalar gap1() const { return lambda_k() - lambda_k1(); }
  Scalar gap2() const { return lambda_k() * lambda_k() - lambda_k1() * lambda_k1(); }
  /// m = lambda_k / lambda_{k+1} > 1.
  Scalar gap_ratio() const { return lambda_k() / lambda_k1(); }
  /// rho = k / (d - k).
  Scalar block_ratio() const { return Scalar(k_) / Scalar(dim() - k_); }

  /// psi_D = sum of squared dominant eigenvalues.
  Scalar psi_dominant() const { return dominant().squaredNorm(); }
  Scalar psi_bulk() const { return bulk().squaredNorm(); }
  Scalar psi(Block b) const { return b == Block::dominant ? psi_dominant() : psi_bulk(); }

  /// lambda_1^2 - lambda_d^2.
  Scalar spread2() const {
    return lambda_max() * lambda_max() - lambda_min() * lambda_min();
  }

  bool operator==(const Spectrum& o) const {
    return k_ == o.k_ && lambdas_ == o.lambdas_;
  }

 private:
  Vector lambdas_;
  Index k_;
};

/// Per-eigendirection noise variances kappa_i^2 together with the spectral
/// bounds s_min <= min kappa^2 and s_max >= max kappa^2 of the covariance.
template <typename Scalar = double>
class NoiseProfile {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit NoiseProfile(Vector kappa2)
      : kappa2_(std::move(kappa2)),
        s_min_(kappa2_.size() ? kappa2_.minCoeff() : Scalar(0)),
        s_max_(kappa2_.size() ? kappa2_.maxCoeff() : Scalar(0)) {
    validate();
  }

  NoiseProfile(Vector kappa2, Scalar s_min, Scalar s_max)
      : kappa2_(std::move(kappa2)), s_min_(s_min), s_max_(s_max) {
    validate();
  }

  const Vector& kappa2() const { return kappa2_; }
  Eigen::Index dim() const { return kappa2_.size(); }
  Scalar s_min() const { return s_min_; }
  Scalar s_max() const { return s_max_; }
  Scalar trace() const { return kappa2_.sum(); }

  /// e_S = sum_{i in S} lambda_i^2 kappa_i^2.
  Scalar energy(const Spectrum<Scalar>& spec, Block b) const {
    check_dim(spec);
    const auto lam2 = spec.lambdas().array().square();
    return b == Block::dominant
               ? (lam2.head(spec.k()) * kappa2_.array().head(spec.k())).sum()
               : (lam2.tail(spec.bulk_size()) * kappa2_.array().tail(spec.bulk_size())).sum();
  }

  /// n^loss_S = sum_{i in S} lambda_i kappa_i^2.
  Scalar loss_energy(const Spectrum<Scalar>& spec, Block b) const {
    check_dim(spec);
    const auto& lam = spec.lambdas().array();
    return b == Block::dominant
               ? (lam.head(spec.k()) * kappa2_.array().head(spec.k())).sum()
               : (lam.tail(spec.bulk_size()) * kappa2_.array().tail(spec.bulk_size())).sum();
  }

  void check_dim(const Spectrum<Scalar>& spec) const {
    if (spec.dim() != dim())
      throw ParameterError("noise profile and spectrum dimensions differ");
  }

  bool operator==(const NoiseProfile& o) const {
    return s_min_ == o.s_min_ && s_max_ == o.s_max_ && kappa2_ == o.kappa2_;
  }

 private:
  void validate() const {
    if (kappa2_.size() == 0) throw ParameterError("noise profile is empty");
    for (Eigen::Index i = 0; i < kappa2_.size(); ++i)
      if (!std::isfinite(double(kappa2_[i])) || kappa2_[i] < Scalar(0))
        throw ParameterError("noise variances must be finite and non-negative");
    if (!(s_min_ >= Scalar(0)) || s_min_ > kappa2_.minCoeff() ||
        s_max_ < kappa2_.maxCoeff() || s_min_ > s_max_ || !std::isfinite(double(s_max_)))
      throw ParameterError("noise bounds must satisfy 0 <= s_min <= min kappa^2 <= max kappa^2 <= s_max");
  }

  Vector kappa2_;
  Scalar s_min_;
  Scalar s_max_;
};

/// Synthetic spectrum with a prescribed gap ratio m = lambda_k / lambda_{k+1}.
///
/// Bulk eigenvalues are uniform on [lo, hi]; lambda_{k+1} is the largest bulk
/// draw and lambda_k is pinned to m * lambda_{k+1}. The other k - 1 dominant
/// eigenvalues are uniform on [lambda_k, lambda_k * (1 + top_spread)].
/// Bulk values are drawn before dominant ones, so for a fixed seed the bulk
/// is identical across different m and the dominant block scales with m.
template <typename Scalar = double>
Spectrum<Scalar> build_spectrum(Eigen::Index d, Eigen::Index k, Scalar m,
                                std::pair<Scalar, Scalar> bulk_range,
                                Scalar top_spread, std::uint64_t seed) {
  using Vector = typename Spectrum<Scalar>::Vector;
  const auto [lo, hi] = bulk_range;
  if (k < 1 || k > d - 1) throw ParameterError("need 1 <= k <= d-1");
  if (!(m > Scalar(1)) || !std::isfinite(double(m)))
    throw ParameterError("gap ratio m must be finite and > 1");
  if (!(lo > Scalar(0)) || lo > hi || !std::isfinite(double(hi)))
    throw ParameterError("bulk range must satisfy 0 < lo <= hi");
  if (!(top_spread >= Scalar(0))) throw ParameterError("top_spread must be >= 0");

  NormalStream rng(seed);
  Vector lambdas(d);
  for (Eigen::Index i = k; i < d; ++i)
    lambdas[i] = Scalar(rng.uniform(double(lo), double(hi)));
  std::sort(lambdas.data() + k, lambdas.data() + d, std::greater<>());

  const Scalar lk = m * lambdas[k];
  lambdas[k - 1] = lk;
  for (Eigen::Index i = 0; i < k - 1; ++i)
    lambdas[i] = lk * (Scalar(1) + top_spread * Scalar(rng.uniform(0.0, 1.0)));
  std::sort(lambdas.data(), lambdas.data() + k - 1, std::greater<>());
  return Spectrum<Scalar>(std::move(lambdas), k);
}

template <typename Scalar = double>
NoiseProfile<Scalar> isotropic_noise(Eigen::Index d, Scalar sigma2) {
  if (!(sigma2 > Scalar(0)) || !std::isfinite(double(sigma2)))
    throw ParameterError("sigma2 must be positive");
  if (d < 1) throw ParameterError("dimension must be positive");
  using Vector = typename NoiseProfile<Scalar>::Vector;
  return NoiseProfile<Scalar>(Vector::Constant(d, sigma2), sigma2, sigma2);
}

using SpectrumD = Spectrum<double>;
using NoiseProfileD = NoiseProfile<double>;

}  // namespace alignlab
