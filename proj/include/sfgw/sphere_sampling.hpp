#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "sfgw/rng.hpp"

namespace sfgw {

/// Unit vector in R^d, d >= 2. Construction checks the norm to 1e-12.
class Direction {
 public:
  explicit Direction(Eigen::VectorXd coords);

  /// Basis vector e_axis in R^d.
  static Direction axis(Eigen::Index d, Eigen::Index axis = 0);

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_[i]; }
  double dot(const Eigen::VectorXd& v) const { return coords_.dot(v); }

  friend bool operator==(const Direction& a, const Direction& b) {
    return a.coords_ == b.coords_;
  }

 private:
  Eigen::VectorXd coords_;
};

struct VmfParams {
  Direction location;
  double concentration;

  void validate() const;
};

struct PowerSphericalParams {
  Direction location;
  double concentration;

  void validate() const;
};

struct MixtureVmfParams {
  std::vector<VmfParams> components;
  Eigen::VectorXd weights;

  Eigen::Index dim() const { return components.front().location.dim(); }
  void validate() const;
};

struct MixtureSample {
  Direction direction;
  std::size_t component;
};

/// Upper bound on rejection proposals per vMF draw.
inline constexpr int kVmfMaxProposals = 1000;

Direction sample_uniform_sphere(Eigen::Index d, Rng& rng);

/// Applies the Householder reflection U = I - 2 u u^T, u = (e1 - location)/|e1 - location|,
/// which maps e1 onto `location`. When location == e1 the reflection is the identity.
Eigen::VectorXd householder_reflect(const Eigen::VectorXd& location, const Eigen::VectorXd& v);
Eigen::MatrixXd householder_matrix(const Eigen::VectorXd& location);

/// Draw from vMF(e1, kappa): (omega, sqrt(1 - omega^2) v) with omega from the
/// Wood/Ulrich rejection sampler and v uniform on S^{d-2}.
/// kappa == 0 returns a uniform direction.
Eigen::VectorXd sample_vmf_canonical(double kappa, Eigen::Index d, Rng& rng);

/// Draw from PS(e1, kappa): omega = 2z - 1, z ~ Beta((d-1)/2 + kappa, (d-1)/2).
Eigen::VectorXd sample_power_spherical_canonical(double kappa, Eigen::Index d, Rng& rng);

Direction sample_vmf(const VmfParams& params, Rng& rng);
Direction sample_power_spherical(const PowerSphericalParams& params, Rng& rng);

/// Categorical draw over `weights`. Zero-weight entries are never returned.
/// A single-entry vector consumes no randomness.
std::size_t sample_categorical(const Eigen::VectorXd& weights, Rng& rng);

MixtureSample sample_mixture_vmf(const MixtureVmfParams& params, Rng& rng);

/// E[eps^T theta] under vMF(eps, kappa) on S^{d-1}, by adaptive quadrature of
/// the marginal density of omega = eps^T theta. Throws NumericError if the
/// quadrature error estimate stays above tolerance.
double vmf_mean_resultant_oracle(double kappa, Eigen::Index d);

}  // namespace sfgw
