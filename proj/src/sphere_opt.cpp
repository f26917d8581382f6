#include "sfgw/sphere_opt.hpp"

#include <cmath>
#include <string>

#include "sfgw/errors.hpp"

namespace sfgw {

Direction project_to_sphere(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) {
    throw NumericError("cannot project a near-zero or non-finite vector onto the sphere");
  }
  if (norm == 1.0) return Direction(v);
  return Direction(v / norm);
}

Eigen::VectorXd tangent_project(const Eigen::VectorXd& at, const Eigen::VectorXd& v) {
  return v - at.dot(v) * at;
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& at) {
  // The reflection maps e1 to `at`, so its remaining columns span the tangent space.
  return householder_matrix(at).rightCols(at.size() - 1);
}

AdamState AdamState::zeros(Eigen::Index n, double learning_rate, double beta1, double beta2) {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam decay rates must lie in (0, 1)");
  }
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  return s;
}

AdamUpdate adam_step(const AdamState& state, const Eigen::VectorXd& gradient,
                     const Eigen::VectorXd& current, bool ascend) {
  const Eigen::Index n = current.size();
  if (gradient.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw SizeError("Adam state, gradient and parameter lengths differ");
  }
  AdamUpdate out{current, state};
  AdamState& s = out.state;
  s.step_count += 1;
  s.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
  s.second_moment =
      state.beta2 * state.second_moment + (1.0 - state.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(s.step_count);
  const double bias1 = 1.0 - std::pow(s.beta1, t);
  const double bias2 = 1.0 - std::pow(s.beta2, t);
  const Eigen::ArrayXd step =
      s.learning_rate * (s.first_moment.array() / bias1) /
      ((s.second_moment.array() / bias2).sqrt() + s.epsilon_stability);
  if (ascend) {
    out.parameter.array() += step;
  } else {
    out.parameter.array() -= step;
  }
  return out;
}

Eigen::VectorXd householder_location_vjp(const Eigen::VectorXd& location,
                                         const Eigen::VectorXd& canonical,
                                         const Eigen::VectorXd& upstream) {
  // theta = h - 2 w (w.h) / (w.w), w = e1 - location.
  Eigen::VectorXd w = -location;
  w[0] += 1.0;
  const double q = w.squaredNorm();
  if (q < 1e-24) return Eigen::VectorXd::Zero(location.size());
  const double s = w.dot(canonical);
  const double wg = w.dot(upstream);
  return 2.0 * ((s / q) * upstream + (wg / q) * canonical - (2.0 * s * wg / (q * q)) * w);
}

std::vector<Eigen::VectorXd> sample_canonical_batch(SphereFamily family, double kappa,
                                                    Eigen::Index d, int count, Rng& rng) {
  if (count < 1) throw ParameterError("number of samples must be at least 1");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    out.push_back(family == SphereFamily::Vmf ? sample_vmf_canonical(kappa, d, rng)
                                              : sample_power_spherical_canonical(kappa, d, rng));
  }
  return out;
}

namespace {

double standard_error(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) return 0.0;
  const double mean = values.mean();
  const double var = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

double frozen_average(const SliceObjective& objective, const Eigen::VectorXd& location,
                      const std::vector<Eigen::VectorXd>& canonical) {
  double sum = 0.0;
  for (const auto& h : canonical) sum += objective.value(householder_reflect(location, h));
  return sum / static_cast<double>(canonical.size());
}

}  // namespace

LocationGradient location_gradient_from_draws(const SliceObjective& objective,
                                              const Eigen::VectorXd& location,
                                              const std::vector<Eigen::VectorXd>& canonical,
                                              GradientMethod method, double fd_step) {
  if (canonical.empty()) throw ParameterError("need at least one draw");
  const Eigen::Index d = location.size();
  const auto count = static_cast<Eigen::Index>(canonical.size());
  Eigen::VectorXd values(count);
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(d);

  if (method == GradientMethod::Pathwise) {
    for (Eigen::Index l = 0; l < count; ++l) {
      const auto& h = canonical[static_cast<std::size_t>(l)];
      auto [f, g] = objective.value_and_gradient(householder_reflect(location, h));
      values[l] = f;
      gradient += householder_location_vjp(location, h, g);
    }
    // The radial part only reflects how T extends off the sphere; left in, Adam's
    // per-coordinate scaling would leak it into the tangential step.
    gradient = tangent_project(location, gradient / static_cast<double>(count));
  } else {
    for (Eigen::Index l = 0; l < count; ++l) {
      values[l] =
          objective.value(householder_reflect(location, canonical[static_cast<std::size_t>(l)]));
    }
    const Eigen::MatrixXd basis = tangent_basis(location);
    for (Eigen::Index i = 0; i < basis.cols(); ++i) {
      const Eigen::VectorXd step = fd_step * basis.col(i);
      const double up = frozen_average(objective, location + step, canonical);
      const double down = frozen_average(objective, location - step, canonical);
      gradient += ((up - down) / (2.0 * fd_step)) * basis.col(i);
    }
    gradient = tangent_project(location, gradient);
  }
  return {values.mean(), standard_error(values), std::move(gradient)};
}

Eigen::VectorXd estimate_location_gradient(const SliceObjective& objective, const Direction& eps,
                                           double kappa, int num_samples, GradientMethod method,
                                           Rng& rng, SphereFamily family) {
  const auto draws = sample_canonical_batch(family, kappa, eps.dim(), num_samples, rng);
  return location_gradient_from_draws(objective, eps.coords(), draws, method).gradient;
}

}  // namespace sfgw
