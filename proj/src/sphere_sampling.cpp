#include "sfgw/sphere_sampling.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "sfgw/errors.hpp"

namespace sfgw {

namespace {

constexpr double kUnitTolerance = 1e-12;

void check_concentration(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("concentration must be finite and nonnegative");
  }
}

// Uniform on S^{m-1} for m >= 1 (S^0 = {-1, +1}).
Eigen::VectorXd uniform_unit_vector(Eigen::Index m, Rng& rng) {
  Eigen::VectorXd v(m);
  for (;;) {
    for (Eigen::Index i = 0; i < m; ++i) v[i] = rng.normal();
    const double norm = v.norm();
    if (norm > 1e-150) return v / norm;
  }
}

Eigen::VectorXd assemble_canonical(double omega, const Eigen::VectorXd& tangent) {
  const Eigen::Index d = tangent.size() + 1;
  Eigen::VectorXd h(d);
  h[0] = omega;
  h.tail(d - 1) = std::sqrt(std::max(0.0, 1.0 - omega * omega)) * tangent;
  return h;
}

}  // namespace

Direction::Direction(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw DimensionError("direction dimension must be at least 2, got " +
                         std::to_string(coords_.size()));
  }
  const double norm = coords_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
    throw ParameterError("direction must have unit norm (got norm " + std::to_string(norm) + ")");
  }
}

Direction Direction::axis(Eigen::Index d, Eigen::Index axis) {
  if (axis < 0 || axis >= d) throw DimensionError("axis index out of range");
  return Direction(Eigen::VectorXd::Unit(d, axis));
}

void VmfParams::validate() const { check_concentration(concentration); }

void PowerSphericalParams::validate() const { check_concentration(concentration); }

void MixtureVmfParams::validate() const {
  if (components.empty()) throw ParameterError("mixture needs at least one component");
  if (weights.size() != static_cast<Eigen::Index>(components.size())) {
    throw SizeError("mixture weights and components differ in length");
  }
  const Eigen::Index d = dim();
  for (const auto& c : components) {
    c.validate();
    if (c.location.dim() != d) throw DimensionError("mixture components differ in dimension");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw ParameterError("mixture weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > kUnitTolerance) {
    throw ParameterError("mixture weights must sum to 1");
  }
}

Direction sample_uniform_sphere(Eigen::Index d, Rng& rng) {
  if (d < 2) throw DimensionError("sphere dimension must be at least 2");
  return Direction(uniform_unit_vector(d, rng));
}

Eigen::VectorXd householder_reflect(const Eigen::VectorXd& location, const Eigen::VectorXd& v) {
  Eigen::VectorXd w = -location;
  w[0] += 1.0;
  const double norm = w.norm();
  if (norm < kUnitTolerance) return v;
  w /= norm;
  return v - 2.0 * w.dot(v) * w;
}

Eigen::MatrixXd householder_matrix(const Eigen::VectorXd& location) {
  const Eigen::Index d = location.size();
  Eigen::VectorXd w = -location;
  w[0] += 1.0;
  const double norm = w.norm();
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(d, d);
  if (norm < kUnitTolerance) return u;
  w /= norm;
  u.noalias() -= 2.0 * w * w.transpose();
  return u;
}

Eigen::VectorXd sample_vmf_canonical(double kappa, Eigen::Index d, Rng& rng) {
  check_concentration(kappa);
  if (d < 2) throw DimensionError("sphere dimension must be at least 2");
  if (kappa == 0.0) return uniform_unit_vector(d, rng);

  const Eigen::VectorXd tangent = uniform_unit_vector(d - 1, rng);
  const double dm1 = static_cast<double>(d - 1);
  const double root = std::sqrt(4.0 * kappa * kappa + dm1 * dm1);
  // (-2k + root) / (d-1) rewritten without cancellation for large kappa.
  const double b = dm1 / (2.0 * kappa + root);
  const double a = (dm1 + 2.0 * kappa + root) / 4.0;
  const double m = 4.0 * a * b / (1.0 + b) - dm1 * std::log(dm1);

  for (int proposal = 0; proposal < kVmfMaxProposals; ++proposal) {
    const double psi = rng.beta(0.5 * dm1, 0.5 * dm1);
    const double denom = 1.0 - (1.0 - b) * psi;
    const double omega = (1.0 - (1.0 + b) * psi) / denom;
    const double t = 2.0 * a * b / denom;
    const double u = rng.uniform_open();
    if (dm1 * std::log(t) - t + m >= std::log(u)) return assemble_canonical(omega, tangent);
  }
  throw NumericError("vMF rejection sampler exceeded " + std::to_string(kVmfMaxProposals) +
                     " proposals (kappa=" + std::to_string(kappa) +
                     ", d=" + std::to_string(d) + ")");
}

Eigen::VectorXd sample_power_spherical_canonical(double kappa, Eigen::Index d, Rng& rng) {
  check_concentration(kappa);
  if (d < 2) throw DimensionError("sphere dimension must be at least 2");
  const double half = 0.5 * static_cast<double>(d - 1);
  const double z = rng.beta(half + kappa, half);
  const Eigen::VectorXd tangent = uniform_unit_vector(d - 1, rng);
  return assemble_canonical(2.0 * z - 1.0, tangent);
}

Direction sample_vmf(const VmfParams& params, Rng& rng) {
  params.validate();
  const auto d = params.location.dim();
  if (params.concentration == 0.0) return sample_uniform_sphere(d, rng);
  return Direction(householder_reflect(params.location.coords(),
                                       sample_vmf_canonical(params.concentration, d, rng)));
}

Direction sample_power_spherical(const PowerSphericalParams& params, Rng& rng) {
  params.validate();
  const auto d = params.location.dim();
  return Direction(householder_reflect(
      params.location.coords(), sample_power_spherical_canonical(params.concentration, d, rng)));
}

std::size_t sample_categorical(const Eigen::VectorXd& weights, Rng& rng) {
  const auto k = static_cast<std::size_t>(weights.size());
  if (k == 0) throw ParameterError("categorical weights must be nonempty");
  if (k == 1) return 0;
  const double u = rng.uniform() * weights.sum();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (weights[static_cast<Eigen::Index>(i)] <= 0.0) continue;
    cumulative += weights[static_cast<Eigen::Index>(i)];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

MixtureSample sample_mixture_vmf(const MixtureVmfParams& params, Rng& rng) {
  params.validate();
  const std::size_t i = sample_categorical(params.weights, rng);
  return {sample_vmf(params.components[i], rng), i};
}

double vmf_mean_resultant_oracle(double kappa, Eigen::Index d) {
  check_concentration(kappa);
  if (d < 2) throw DimensionError("sphere dimension must be at least 2");
  if (kappa == 0.0) return 0.0;

  // Substitute omega = cos(phi): the marginal density becomes
  // exp(kappa (cos phi - 1)) sin^{d-2} phi on [0, pi], smooth for every d >= 2.
  // cos phi - 1 is evaluated as -2 sin^2(phi/2) to avoid cancellation near phi = 0.
  const double power = static_cast<double>(d - 2);
  auto weight = [&](double phi) {
    const double half = std::sin(0.5 * phi);
    return std::exp(-2.0 * kappa * half * half) * std::pow(std::sin(phi), power);
  };
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double pi = boost::math::constants::pi<double>();
  // Most of the mass sits within a few 1/sqrt(kappa) of phi = 0.
  const double split = std::min(pi, 50.0 / std::sqrt(kappa));
  constexpr double kTol = 1e-11;
  constexpr unsigned kDepth = 15;

  double num = 0.0, den = 0.0, err = 0.0;
  double rel_error = 0.0;
  for (auto [lo, hi] : {std::pair{0.0, split}, std::pair{split, pi}}) {
    if (hi <= lo) continue;
    double e = 0.0, l1 = 0.0;
    num += Quadrature::integrate([&](double phi) { return std::cos(phi) * weight(phi); }, lo, hi,
                                 kDepth, kTol, &e, &l1);
    rel_error = std::max(rel_error, l1 > 0 ? e / l1 : 0.0);
    den += Quadrature::integrate(weight, lo, hi, kDepth, kTol, &err, &l1);
    rel_error = std::max(rel_error, l1 > 0 ? err / l1 : 0.0);
  }
  if (!(den > 0.0) || !std::isfinite(num) || rel_error > 1e-8) {
    throw NumericError("mean resultant quadrature did not converge (kappa=" +
                       std::to_string(kappa) + ", d=" + std::to_string(d) + ")");
  }
  return num / den;
}

}  // namespace sfgw
