#include "sfgw/discrepancies.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "sfgw/errors.hpp"

namespace sfgw {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_pair(const PointCloud& mu, const PointCloud& nu) {
  if (mu.dim() != nu.dim()) {
    throw DimensionError("clouds differ in dimension (" + std::to_string(mu.dim()) + " vs " +
                         std::to_string(nu.dim()) + ")");
  }
  if (mu.size() != nu.size()) {
    throw SizeError("clouds differ in size (" + std::to_string(mu.size()) + " vs " +
                    std::to_string(nu.size()) + ")");
  }
}

double mean_and_error(const std::vector<double>& values, double& std_error) {
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  std_error = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return mean;
}

struct LocationAscent {
  SlicingDistribution slicing = UniformSlicing{2};
  std::vector<TracePoint> trace;
  long projections = 0;
};

LocationAscent ascend_locations(const SliceObjective& objective, Eigen::Index d,
                                SphereFamily family, const Eigen::VectorXd& kappas,
                                const Eigen::VectorXd& weights, bool as_mixture,
                                const OptimizerConfig& opt, Rng& rng) {
  SlicingAscent ascent(d, family, kappas, weights, opt, rng);
  LocationAscent out;
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    const SlicingAscent::Step st = ascent.step(objective, rng);
    out.projections += opt.num_projections;
    if (!std::isfinite(st.objective)) throw DivergenceError("objective became non-finite", iter);
    out.trace.push_back({iter, st.objective});
    if (st.largest_move < opt.tolerance) break;
  }
  out.slicing = ascent.distribution(as_mixture);
  return out;
}

DiscrepancyReport optimized_report(const PointCloud& mu, const PointCloud& nu,
                                   const FgwConfig& cfg, SphereFamily family,
                                   const Eigen::VectorXd& kappas, const Eigen::VectorXd& weights,
                                   bool as_mixture, const OptimizerConfig& opt, Rng& rng) {
  check_pair(mu, nu);
  cfg.validate();
  opt.validate();
  const SliceObjective objective = make_slice_objective(mu, nu, cfg);
  LocationAscent run;
  double run_score = 0.0;
  long projections = 0;
  for (int start = 0; start < opt.location_restarts; ++start) {
    LocationAscent attempt =
        ascend_locations(objective, mu.dim(), family, kappas, weights, as_mixture, opt, rng);
    projections += attempt.projections;
    const std::size_t tail = std::min<std::size_t>(5, attempt.trace.size());
    double score = 0.0;
    for (std::size_t i = attempt.trace.size() - tail; i < attempt.trace.size(); ++i) {
      score += attempt.trace[i].objective / static_cast<double>(tail);
    }
    if (start == 0 || score > run_score) {
      run_score = score;
      run = std::move(attempt);
    }
  }

  // Fresh batch at the final locations.
  DiscrepancyReport report =
      evaluate_slicing(mu, nu, cfg, run.slicing, opt.num_projections, rng);
  report.trace = std::move(run.trace);
  report.num_projections_used += projections;
  return report;
}

}  // namespace

SlicingAscent::SlicingAscent(Eigen::Index dim, SphereFamily family, Eigen::VectorXd kappas,
                             Eigen::VectorXd weights, const OptimizerConfig& opt, Rng& rng)
    : family_(family), kappas_(std::move(kappas)), weights_(std::move(weights)), opt_(opt) {
  if (kappas_.size() < 1 || kappas_.size() != weights_.size()) {
    throw SizeError("one weight per concentration is required");
  }
  for (Eigen::Index i = 0; i < kappas_.size(); ++i) {
    locations_.push_back(sample_uniform_sphere(dim, rng).coords());
    adam_.push_back(AdamState::zeros(dim, opt.learning_rate, opt.adam_beta1, opt.adam_beta2));
  }
}

SlicingAscent::Step SlicingAscent::step(const SliceObjective& objective, Rng& rng) {
  const std::size_t k = locations_.size();
  const Eigen::Index d = locations_.front().size();
  const int L = opt_.num_projections;
  std::vector<std::vector<Eigen::VectorXd>> draws(k);
  for (int l = 0; l < L; ++l) {
    const std::size_t i = sample_categorical(weights_, rng);
    const double kappa = kappas_[static_cast<Eigen::Index>(i)];
    draws[i].push_back(family_ == SphereFamily::Vmf
                           ? sample_vmf_canonical(kappa, d, rng)
                           : sample_power_spherical_canonical(kappa, d, rng));
  }

  double total = 0.0;
  std::vector<Eigen::VectorXd> gradients(k, Eigen::VectorXd::Zero(d));
  for (std::size_t i = 0; i < k; ++i) {
    if (draws[i].empty()) continue;
    LocationGradient g =
        location_gradient_from_draws(objective, locations_[i], draws[i], opt_.gradient_method);
    const double count = static_cast<double>(draws[i].size());
    total += g.value * count;
    // Samples of component i arrive with frequency w_i, so averaging over the
    // whole batch estimates w_i * grad E_i[f].
    gradients[i] = g.gradient * (count / static_cast<double>(L));
  }

  Step out{total / static_cast<double>(L), 0.0};
  if (!std::isfinite(out.objective)) throw DivergenceError("objective became non-finite", 0);
  for (std::size_t i = 0; i < k; ++i) {
    AdamUpdate up = adam_step(adam_[i], gradients[i], locations_[i], /*ascend=*/true);
    if (!up.parameter.allFinite()) throw DivergenceError("location became non-finite", 0);
    Eigen::VectorXd next = project_to_sphere(up.parameter).coords();
    out.largest_move = std::max(out.largest_move, (next - locations_[i]).norm());
    locations_[i] = std::move(next);
    adam_[i] = std::move(up.state);
  }
  return out;
}

SlicingDistribution SlicingAscent::distribution(bool as_mixture) const {
  if (as_mixture) {
    MixtureVmfParams mix;
    for (std::size_t i = 0; i < locations_.size(); ++i) {
      mix.components.push_back(
          {Direction(locations_[i]), kappas_[static_cast<Eigen::Index>(i)]});
    }
    mix.weights = weights_;
    return mix;
  }
  if (family_ == SphereFamily::Vmf) return VmfParams{Direction(locations_.front()), kappas_[0]};
  return PowerSphericalParams{Direction(locations_.front()), kappas_[0]};
}

Eigen::Index slicing_dim(const SlicingDistribution& slicing) {
  return std::visit(Overloaded{
                        [](const UniformSlicing& u) { return u.dim; },
                        [](const DiracSlicing& s) { return s.location.dim(); },
                        [](const VmfParams& p) { return p.location.dim(); },
                        [](const PowerSphericalParams& p) { return p.location.dim(); },
                        [](const MixtureVmfParams& p) { return p.dim(); },
                    },
                    slicing);
}

Direction sample_slice(const SlicingDistribution& slicing, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const UniformSlicing& u) { return sample_uniform_sphere(u.dim, rng); },
                        [](const DiracSlicing& s) { return s.location; },
                        [&](const VmfParams& p) { return sample_vmf(p, rng); },
                        [&](const PowerSphericalParams& p) {
                          return sample_power_spherical(p, rng);
                        },
                        [&](const MixtureVmfParams& p) {
                          return sample_mixture_vmf(p, rng).direction;
                        },
                    },
                    slicing);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ParameterError("Adam decay rates must lie in (0, 1)");
  }
  if (max_iter < 1) throw ParameterError("max_iter must be at least 1");
  if (num_projections < 1) throw ParameterError("number of projections must be at least 1");
  if (restarts < 1 || location_restarts < 1) {
    throw ParameterError("restarts must be at least 1");
  }
  if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be nonnegative");
}

SliceObjective make_slice_objective(const PointCloud& mu, const PointCloud& nu,
                                    const FgwConfig& cfg) {
  SliceObjective obj;
  obj.value = [&mu, &nu, cfg](const Eigen::VectorXd& theta) {
    return fgw_1d(project(mu, theta), project(nu, theta), cfg);
  };
  obj.value_and_gradient = [&mu, &nu, cfg](const Eigen::VectorXd& theta) {
    const FgwGradient g = fgw_1d_grad(project(mu, theta), project(nu, theta), cfg);
    Eigen::VectorXd grad = mu.points().transpose() * g.grad_xs;
    grad += nu.points().transpose() * g.grad_ys;
    return std::pair{g.value, std::move(grad)};
  };
  return obj;
}

DiscrepancyReport evaluate_slicing(const PointCloud& mu, const PointCloud& nu,
                                   const FgwConfig& cfg, const SlicingDistribution& slicing,
                                   int num_projections, Rng& rng) {
  check_pair(mu, nu);
  cfg.validate();
  if (num_projections < 1) throw ParameterError("number of projections must be at least 1");
  if (slicing_dim(slicing) != mu.dim()) {
    throw DimensionError("slicing distribution dimension does not match the clouds");
  }
  if (const auto* dirac = std::get_if<DiracSlicing>(&slicing)) {
    const double v = fgw_1d(project(mu, dirac->location), project(nu, dirac->location), cfg);
    return {v, 0.0, slicing, {}, 1};
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(num_projections));
  for (int l = 0; l < num_projections; ++l) {
    const Direction theta = sample_slice(slicing, rng);
    values.push_back(fgw_1d(project(mu, theta), project(nu, theta), cfg));
  }
  double se = 0.0;
  const double mean = mean_and_error(values, se);
  if (!std::isfinite(mean)) throw DivergenceError("Monte Carlo estimate is non-finite", 0);
  return {mean, se, slicing, {}, num_projections};
}

DiscrepancyReport sfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                      int num_projections, Rng& rng) {
  check_pair(mu, nu);
  return evaluate_slicing(mu, nu, cfg, UniformSlicing{mu.dim()}, num_projections, rng);
}

DiscrepancyReport max_sfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                          const OptimizerConfig& opt, Rng& rng) {
  check_pair(mu, nu);
  cfg.validate();
  opt.validate();
  const SliceObjective objective = make_slice_objective(mu, nu, cfg);
  const Eigen::Index d = mu.dim();

  double best_value = -1.0;
  Eigen::VectorXd best_theta;
  std::vector<TracePoint> best_trace;
  long evaluations = 0;

  for (int start = 0; start < opt.restarts; ++start) {
    Eigen::VectorXd theta = sample_uniform_sphere(d, rng).coords();
    AdamState adam = AdamState::zeros(d, opt.learning_rate, opt.adam_beta1, opt.adam_beta2);
    std::vector<TracePoint> trace;
    double run_best = -1.0;
    Eigen::VectorXd run_theta = theta;
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
      auto [value, grad] = objective.value_and_gradient(theta);
      ++evaluations;
      if (!std::isfinite(value)) throw DivergenceError("objective became non-finite", iter);
      trace.push_back({iter, value});
      if (value > run_best) {
        run_best = value;
        run_theta = theta;
      }
      AdamUpdate up = adam_step(adam, tangent_project(theta, grad), theta, /*ascend=*/true);
      if (!up.parameter.allFinite()) throw DivergenceError("direction became non-finite", iter);
      Eigen::VectorXd next = project_to_sphere(up.parameter).coords();
      const double move = (next - theta).norm();
      theta = std::move(next);
      adam = std::move(up.state);
      if (move < opt.tolerance) break;
    }
    const double last = objective.value(theta);
    ++evaluations;
    if (last > run_best) {
      run_best = last;
      run_theta = theta;
    }
    if (run_best > best_value) {
      best_value = run_best;
      best_theta = run_theta;
      best_trace = std::move(trace);
    }
  }
  return {best_value, 0.0, DiracSlicing{Direction(best_theta)}, std::move(best_trace), evaluations};
}

DiscrepancyReport ssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                       double kappa, const OptimizerConfig& opt, Rng& rng) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("concentration must be finite and nonnegative");
  }
  return optimized_report(mu, nu, cfg, SphereFamily::Vmf, Eigen::VectorXd::Constant(1, kappa),
                          Eigen::VectorXd::Ones(1), false, opt, rng);
}

DiscrepancyReport pssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                        double kappa, const OptimizerConfig& opt, Rng& rng) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("concentration must be finite and nonnegative");
  }
  return optimized_report(mu, nu, cfg, SphereFamily::PowerSpherical,
                          Eigen::VectorXd::Constant(1, kappa), Eigen::VectorXd::Ones(1), false, opt,
                          rng);
}

DiscrepancyReport mssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                        const Eigen::VectorXd& kappas, const Eigen::VectorXd& alphas,
                        const OptimizerConfig& opt, Rng& rng) {
  if (kappas.size() < 1) throw ParameterError("mixture needs at least one component");
  if (kappas.size() != alphas.size()) {
    throw SizeError("mixture concentrations and weights differ in length");
  }
  if ((alphas.array() < 0.0).any() || !alphas.allFinite() ||
      std::abs(alphas.sum() - 1.0) > 1e-12) {
    throw ParameterError("mixture weights must be nonnegative and sum to 1");
  }
  for (Eigen::Index i = 0; i < kappas.size(); ++i) {
    if (!(kappas[i] >= 0.0) || !std::isfinite(kappas[i])) {
      throw ParameterError("concentration must be finite and nonnegative");
    }
  }
  return optimized_report(mu, nu, cfg, SphereFamily::Vmf, kappas, alphas, true, opt, rng);
}

}  // namespace sfgw
