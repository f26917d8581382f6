#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "sfgw/rng.hpp"
#include "sfgw/sphere_sampling.hpp"

namespace sfgw {

/// v / |v|. Throws NumericError when |v| <= 1e-12.
Direction project_to_sphere(const Eigen::VectorXd& v);

/// Removes the component of v along the unit vector `at`.
Eigen::VectorXd tangent_project(const Eigen::VectorXd& at, const Eigen::VectorXd& v);

/// d x (d-1) orthonormal basis of the tangent space at `at`.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& at);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double learning_rate = 1e-3;
  double epsilon_stability = 1e-8;

  static AdamState zeros(Eigen::Index n, double learning_rate, double beta1, double beta2);
};

struct AdamUpdate {
  Eigen::VectorXd parameter;
  AdamState state;
};

/// Bias-corrected Adam. ascend = true moves along +gradient.
AdamUpdate adam_step(const AdamState& state, const Eigen::VectorXd& gradient,
                     const Eigen::VectorXd& current, bool ascend);

enum class GradientMethod { Pathwise, FiniteDifference };
enum class SphereFamily { Vmf, PowerSpherical };

/// A function of an ambient direction theta together with its gradient in theta.
struct SliceObjective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)> value_and_gradient;
};

/// Transpose-Jacobian product of theta = householder_reflect(location, canonical)
/// with respect to `location`, applied to `upstream` (= d f / d theta).
Eigen::VectorXd householder_location_vjp(const Eigen::VectorXd& location,
                                         const Eigen::VectorXd& canonical,
                                         const Eigen::VectorXd& upstream);

/// Canonical (e1-centred) draws for the given family.
std::vector<Eigen::VectorXd> sample_canonical_batch(SphereFamily family, double kappa,
                                                    Eigen::Index d, int count, Rng& rng);

struct LocationGradient {
  /// Mean of f(theta_l) over the batch.
  double value;
  /// Sample standard error of that mean.
  double std_error;
  Eigen::VectorXd gradient;
};

/// Gradient in the location of E[f(T(canonical, location))] with the canonical
/// draws frozen. Pathwise chains value_and_gradient through the Householder map;
/// FiniteDifference takes central differences of the frozen-draw average along
/// the tangent basis (step `fd_step`) and returns a tangent vector.
LocationGradient location_gradient_from_draws(const SliceObjective& objective,
                                              const Eigen::VectorXd& location,
                                              const std::vector<Eigen::VectorXd>& canonical,
                                              GradientMethod method, double fd_step = 1e-4);

Eigen::VectorXd estimate_location_gradient(const SliceObjective& objective, const Direction& eps,
                                           double kappa, int num_samples, GradientMethod method,
                                           Rng& rng, SphereFamily family = SphereFamily::Vmf);

}  // namespace sfgw
