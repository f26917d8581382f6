#include "sfgw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sfgw/errors.hpp"

namespace sfgw {

namespace {

std::string format_list(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void echo_optimizer(std::vector<std::pair<std::string, std::string>>& meta,
                    const OptimizerConfig& opt) {
  meta.emplace_back("learning_rate", format_number(opt.learning_rate));
  meta.emplace_back("adam_beta1", format_number(opt.adam_beta1));
  meta.emplace_back("adam_beta2", format_number(opt.adam_beta2));
  meta.emplace_back("max_iter", std::to_string(opt.max_iter));
  meta.emplace_back("num_projections", std::to_string(opt.num_projections));
  meta.emplace_back("restarts", std::to_string(opt.restarts));
  meta.emplace_back("location_restarts", std::to_string(opt.location_restarts));
}

// Mean of the trial values; standard error from their spread, or the single run's
// own Monte Carlo error.
ExperimentRecord summarize(std::string metric, double parameter,
                           const std::vector<DiscrepancyReport>& runs) {
  const double n = static_cast<double>(runs.size());
  double mean = 0.0;
  for (const auto& r : runs) mean += r.value / n;
  double se = runs.front().std_error;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.value - mean) * (r.value - mean);
    se = std::sqrt(ss / (n - 1.0) / n);
  }
  return {std::move(metric), parameter, mean, se};
}

Eigen::MatrixXd uniform_unit_cube(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.uniform();
  return m;
}

// Each row repeated `times` times, which leaves the empirical measure unchanged.
Eigen::MatrixXd replicate_rows(const Eigen::MatrixXd& m, Eigen::Index times) {
  Eigen::MatrixXd out(m.rows() * times, m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.middleRows(i * times, times) = m.row(i).replicate(times, 1);
  }
  return out;
}

long reference_size(const std::vector<int>& sizes) {
  if (sizes.empty()) throw ParameterError("need at least one sample size");
  long common = 1;
  int largest = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw ParameterError("sample sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ParameterError("sample sizes must be increasing");
    }
    common = std::lcm(common, static_cast<long>(sizes[i]));
    largest = std::max(largest, sizes[i]);
  }
  const long want = 16L * largest;
  return ((want + common - 1) / common) * common;
}

ExperimentResult rate_table(const std::string& metric, const std::vector<int>& sizes,
                            const std::vector<std::vector<double>>& values) {
  ExperimentResult out;
  Eigen::VectorXd ns(static_cast<Eigen::Index>(sizes.size()));
  Eigen::VectorXd means(ns.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const auto& v = values[s];
    const double t = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / t;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(ss / (t - 1.0) / t) : 0.0;
    out.table.push_back({metric, static_cast<double>(sizes[s]), mean, se});
    ns[static_cast<Eigen::Index>(s)] = sizes[s];
    means[static_cast<Eigen::Index>(s)] = mean;
  }
  if (sizes.size() >= 2 && (means.array() > 0.0).all()) {
    const auto [slope, se] = loglog_slope(ns, means);
    out.table.push_back({metric + "_slope", 0.0, slope, se});
  }
  return out;
}

std::vector<Eigen::Index> subsample(Rng& rng, Eigen::Index population, Eigen::Index count) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(population));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           rng.index(static_cast<std::size_t>(population - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

PointCloud rows_of(const PointCloud& cloud, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cloud.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = cloud.points().row(rows[i]);
  }
  return PointCloud(std::move(m));
}

// Owns the slicing state of a descent on one argument of a discrepancy and turns it
// into gradients with respect to the points of that argument.
class SlicedDescent {
 public:
  SlicedDescent(const DiscrepancySpec& spec, Eigen::Index d, Rng& rng) : spec_(spec), d_(d) {
    switch (spec.kind) {
      case DiscrepancyKind::Sfg:
        break;
      case DiscrepancyKind::MaxSfg:
        theta_ = sample_uniform_sphere(d, rng).coords();
        adam_ = AdamState::zeros(d, spec.opt.learning_rate, spec.opt.adam_beta1,
                                 spec.opt.adam_beta2);
        break;
      case DiscrepancyKind::Ssfg:
      case DiscrepancyKind::Pssfg:
        ascent_.emplace(d,
                        spec.kind == DiscrepancyKind::Ssfg ? SphereFamily::Vmf
                                                           : SphereFamily::PowerSpherical,
                        Eigen::VectorXd::Constant(1, spec.kappa), Eigen::VectorXd::Ones(1),
                        spec.opt, rng);
        break;
      case DiscrepancyKind::Mssfg:
        ascent_.emplace(d, SphereFamily::Vmf, spec.kappas, spec.alphas, spec.opt, rng);
        break;
    }
  }

  // Value estimate and d/dx of the discrepancy between x and y.
  std::pair<double, Eigen::MatrixXd> gradient(const PointCloud& x, const PointCloud& y,
                                              Rng& rng) {
    const SliceObjective objective = make_slice_objective(x, y, spec_.fgw);
    std::vector<Eigen::VectorXd> directions;
    const int L = spec_.opt.num_projections;
    switch (spec_.kind) {
      case DiscrepancyKind::Sfg:
        for (int l = 0; l < L; ++l) directions.push_back(sample_uniform_sphere(d_, rng).coords());
        break;
      case DiscrepancyKind::MaxSfg:
        for (int it = 0; it < spec_.opt.max_iter; ++it) {
          auto [value, grad] = objective.value_and_gradient(theta_);
          if (!std::isfinite(value)) throw DivergenceError("objective became non-finite", 0);
          AdamUpdate up = adam_step(adam_, tangent_project(theta_, grad), theta_, true);
          theta_ = project_to_sphere(up.parameter).coords();
          adam_ = std::move(up.state);
        }
        directions.push_back(theta_);
        break;
      default: {
        for (int it = 0; it < spec_.opt.max_iter; ++it) ascent_->step(objective, rng);
        const SlicingDistribution slicing =
            ascent_->distribution(spec_.kind == DiscrepancyKind::Mssfg);
        for (int l = 0; l < L; ++l) directions.push_back(sample_slice(slicing, rng).coords());
      }
    }

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(x.size(), d_);
    double value = 0.0;
    for (const auto& theta : directions) {
      const FgwGradient g = fgw_1d_grad(project(x, theta), project(y, theta), spec_.fgw);
      value += g.value;
      grad.noalias() += g.grad_xs * theta.transpose();
    }
    const double count = static_cast<double>(directions.size());
    return {value / count, grad / count};
  }

 private:
  DiscrepancySpec spec_;
  Eigen::Index d_;
  Eigen::VectorXd theta_;
  AdamState adam_;
  std::optional<SlicingAscent> ascent_;
};

std::pair<double, Eigen::MatrixXd> guarded_gradient(SlicedDescent& descent, const PointCloud& x,
                                                    const PointCloud& y, Rng& rng, int step) {
  try {
    auto out = descent.gradient(x, y, rng);
    if (!std::isfinite(out.first) || !out.second.allFinite()) {
      throw DivergenceError("discrepancy became non-finite", step);
    }
    return out;
  } catch (const DivergenceError& e) {
    if (e.step() == step) throw;
    throw DivergenceError(e.what(), step);
  }
}

void check_finite(const Eigen::MatrixXd& m, const char* what, int step) {
  if (!m.allFinite()) throw DivergenceError(std::string(what) + " became non-finite", step);
}

}  // namespace

std::string to_string(DiscrepancyKind kind) {
  switch (kind) {
    case DiscrepancyKind::Sfg:
      return "sfg";
    case DiscrepancyKind::MaxSfg:
      return "max-sfg";
    case DiscrepancyKind::Ssfg:
      return "ssfg";
    case DiscrepancyKind::Pssfg:
      return "pssfg";
    case DiscrepancyKind::Mssfg:
      return "mssfg";
  }
  return "?";
}

DiscrepancyKind parse_discrepancy_kind(const std::string& name) {
  for (auto k : {DiscrepancyKind::Sfg, DiscrepancyKind::MaxSfg, DiscrepancyKind::Ssfg,
                 DiscrepancyKind::Pssfg, DiscrepancyKind::Mssfg}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown discrepancy '" + name + "'");
}

void DiscrepancySpec::validate() const {
  fgw.validate();
  opt.validate();
  if ((kind == DiscrepancyKind::Ssfg || kind == DiscrepancyKind::Pssfg) &&
      (!(kappa >= 0.0) || !std::isfinite(kappa))) {
    throw ParameterError("concentration must be finite and nonnegative");
  }
  if (kind == DiscrepancyKind::Mssfg) {
    if (kappas.size() < 1) throw ParameterError("mixture needs at least one component");
    if (kappas.size() != alphas.size()) {
      throw SizeError("mixture concentrations and weights differ in length");
    }
    if (!kappas.allFinite() || (kappas.array() < 0.0).any()) {
      throw ParameterError("concentration must be finite and nonnegative");
    }
    if (!alphas.allFinite() || (alphas.array() < 0.0).any() ||
        std::abs(alphas.sum() - 1.0) > 1e-12) {
      throw ParameterError("mixture weights must be nonnegative and sum to 1");
    }
  }
}

DiscrepancyReport compute_discrepancy(const PointCloud& mu, const PointCloud& nu,
                                      const DiscrepancySpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.kind) {
    case DiscrepancyKind::Sfg:
      return sfg(mu, nu, spec.fgw, spec.opt.num_projections, rng);
    case DiscrepancyKind::MaxSfg:
      return max_sfg(mu, nu, spec.fgw, spec.opt, rng);
    case DiscrepancyKind::Ssfg:
      return ssfg(mu, nu, spec.fgw, spec.kappa, spec.opt, rng);
    case DiscrepancyKind::Pssfg:
      return pssfg(mu, nu, spec.fgw, spec.kappa, spec.opt, rng);
    case DiscrepancyKind::Mssfg:
      return mssfg(mu, nu, spec.fgw, spec.kappas, spec.alphas, spec.opt, rng);
  }
  throw ParameterError("unknown discrepancy");
}

ExperimentResult kappa_sweep(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                             const Eigen::VectorXd& kappas, const OptimizerConfig& opt,
                             int trials, Rng& rng) {
  if (trials < 1) throw ParameterError("trials must be at least 1");
  if (kappas.size() < 1) throw ParameterError("need at least one concentration");
  ExperimentResult out;
  std::uint64_t stream = 0;
  for (Eigen::Index i = 0; i < kappas.size(); ++i) {
    std::vector<DiscrepancyReport> runs;
    for (int t = 0; t < trials; ++t) {
      Rng r = rng.split(stream++);
      runs.push_back(ssfg(mu, nu, cfg, kappas[i], opt, r));
    }
    out.table.push_back(summarize("ssfg", kappas[i], runs));
  }
  std::vector<DiscrepancyReport> s, m;
  for (int t = 0; t < trials; ++t) {
    Rng r = rng.split(stream++);
    s.push_back(sfg(mu, nu, cfg, opt.num_projections, r));
  }
  for (int t = 0; t < trials; ++t) {
    Rng r = rng.split(stream++);
    m.push_back(max_sfg(mu, nu, cfg, opt, r));
  }
  out.table.push_back(summarize("sfg", 0.0, s));
  out.table.push_back(summarize("max_sfg", 0.0, m));

  out.metadata = {{"experiment", "kappa_sweep"},
                  {"seed", std::to_string(rng.seed())},
                  {"trials", std::to_string(trials)},
                  {"kappas", format_list(kappas)},
                  {"beta", format_number(cfg.beta)},
                  {"exponent", std::to_string(cfg.exponent)}};
  echo_optimizer(out.metadata, opt);
  return out;
}

std::pair<double, double> loglog_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw SizeError("slope fit needs paired values");
  if (x.size() < 2) throw ParameterError("slope fit needs at least two points");
  if ((x.array() <= 0.0).any() || (y.array() <= 0.0).any()) {
    throw ParameterError("log-log fit needs positive values");
  }
  const Eigen::ArrayXd lx = x.array().log();
  const Eigen::ArrayXd ly = y.array().log();
  const Eigen::ArrayXd cx = lx - lx.mean();
  const Eigen::ArrayXd cy = ly - ly.mean();
  const double sxx = (cx * cx).sum();
  const double slope = (cx * cy).sum() / sxx;
  double se = 0.0;
  if (x.size() > 2) {
    const double rss = (cy - slope * cx).square().sum();
    se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  }
  return {slope, se};
}

ExperimentResult convergence_rate(int d, const std::vector<int>& sample_sizes, int trials,
                                  const FgwConfig& cfg, double kappa, const OptimizerConfig& opt,
                                  Rng& rng) {
  if (d < 2) throw DimensionError("dimension must be at least 2");
  if (trials < 1) throw ParameterError("trials must be at least 1");
  const long m = reference_size(sample_sizes);
  std::vector<std::vector<double>> values(sample_sizes.size());
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.split(static_cast<std::uint64_t>(t));
    const PointCloud reference(uniform_unit_cube(trial, m, d));
    for (std::size_t s = 0; s < sample_sizes.size(); ++s) {
      const int n = sample_sizes[s];
      const PointCloud sample(replicate_rows(uniform_unit_cube(trial, n, d), m / n));
      values[s].push_back(ssfg(sample, reference, cfg, kappa, opt, trial).value);
    }
  }
  ExperimentResult out = rate_table("ssfg", sample_sizes, values);
  out.metadata = {{"experiment", "convergence_rate"},
                  {"seed", std::to_string(rng.seed())},
                  {"dimension", std::to_string(d)},
                  {"trials", std::to_string(trials)},
                  {"reference_size", std::to_string(m)},
                  {"kappa", format_number(kappa)},
                  {"beta", format_number(cfg.beta)},
                  {"exponent", std::to_string(cfg.exponent)}};
  echo_optimizer(out.metadata, opt);
  return out;
}

ExperimentResult wasserstein_convergence_control(const std::vector<int>& sample_sizes,
                                                 int trials, Rng& rng) {
  if (trials < 1) throw ParameterError("trials must be at least 1");
  const long m = reference_size(sample_sizes);
  const FgwConfig w2{0.0, 2};
  std::vector<std::vector<double>> values(sample_sizes.size());
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.split(static_cast<std::uint64_t>(t));
    const Projected1D reference(uniform_unit_cube(trial, m, 1).col(0));
    for (std::size_t s = 0; s < sample_sizes.size(); ++s) {
      const int n = sample_sizes[s];
      const Projected1D sample(replicate_rows(uniform_unit_cube(trial, n, 1), m / n).col(0));
      values[s].push_back(fgw_1d(sample, reference, w2));
    }
  }
  ExperimentResult out = rate_table("w2sq", sample_sizes, values);
  out.metadata = {{"experiment", "wasserstein_convergence_control"},
                  {"seed", std::to_string(rng.seed())},
                  {"trials", std::to_string(trials)},
                  {"reference_size", std::to_string(m)}};
  return out;
}

FlowResult particle_flow(const PointCloud& target, int num_particles,
                         const DiscrepancySpec& spec, int steps, double step_size, Rng& rng,
                         const FlowOptions& options) {
  spec.validate();
  if (steps < 1) throw ParameterError("steps must be at least 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ParameterError("step size must be positive");
  }
  if (num_particles < 1 || num_particles > target.size()) {
    throw SizeError("particle count must lie between 1 and the target size");
  }
  if (options.snapshot_every < 1 || options.monitor_every < 1 ||
      options.monitor_directions < 1) {
    throw ParameterError("snapshot and monitor intervals must be positive");
  }
  const Eigen::Index d = target.dim();
  const Eigen::Index n = num_particles;

  Eigen::MatrixXd x(n, d);
  if (options.initial) {
    if (options.initial->size() != n || options.initial->dim() != d) {
      throw SizeError("initial particles do not match the particle count and dimension");
    }
    x = options.initial->points();
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = 0.1 * rng.normal();
  }

  Rng monitor_rng = rng.split(1);
  std::vector<Eigen::VectorXd> monitor_dirs;
  for (int l = 0; l < options.monitor_directions; ++l) {
    monitor_dirs.push_back(sample_uniform_sphere(d, monitor_rng).coords());
  }
  Rng batch_rng = rng.split(2);
  Rng slice_rng = rng.split(3);

  FlowResult out;
  SlicedDescent descent(spec, d, slice_rng);
  const bool full = n == target.size();
  for (int step = 0; step <= steps; ++step) {
    const PointCloud particles(x);
    const PointCloud batch =
        full ? target : rows_of(target, subsample(batch_rng, target.size(), n));
    if (step % options.monitor_every == 0 || step == steps) {
      double v = 0.0;
      for (const auto& theta : monitor_dirs) {
        v += fgw_1d(project(particles, theta), project(batch, theta), spec.fgw);
      }
      out.monitor.emplace_back(step, v / static_cast<double>(monitor_dirs.size()));
    }
    if (step % options.snapshot_every == 0 || step == steps) {
      out.snapshots.push_back({step, particles});
    }
    if (step == steps) break;

    auto [value, grad] = guarded_gradient(descent, particles, batch, slice_rng, step);
    out.trace.push_back(value);
    x -= (step_size * static_cast<double>(n)) * grad;
    check_finite(x, "particle", step + 1);
  }
  return out;
}

void GmmParams::validate() const {
  if (means.rows() < 1) throw ParameterError("mixture needs at least one component");
  if (means.rows() != log_std_devs.rows() || means.cols() != log_std_devs.cols() ||
      weights.size() != means.rows()) {
    throw SizeError("mixture parameter shapes disagree");
  }
  if (!means.allFinite() || !log_std_devs.allFinite() || !weights.allFinite()) {
    throw NumericError("mixture parameters must be finite");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ParameterError("mixture weights must be nonnegative and sum to 1");
  }
}

PointCloud sample_gmm(const GmmParams& gmm, int n, Rng& rng) {
  gmm.validate();
  Eigen::MatrixXd z(n, gmm.dim());
  for (int i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(sample_categorical(gmm.weights, rng));
    for (Eigen::Index j = 0; j < gmm.dim(); ++j) {
      z(i, j) = gmm.means(c, j) + std::exp(gmm.log_std_devs(c, j)) * rng.normal();
    }
  }
  return PointCloud(std::move(z));
}

GmmParams gmm_fit(const PointCloud& target, int k, const DiscrepancySpec& spec, int steps,
                  double step_size, int batch, Rng& rng) {
  spec.validate();
  if (k < 1) throw ParameterError("mixture needs at least one component");
  if (steps < 0) throw ParameterError("steps must be nonnegative");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ParameterError("step size must be positive");
  }
  if (batch < 1 || batch > target.size()) {
    throw SizeError("batch must lie between 1 and the target size");
  }
  const Eigen::Index d = target.dim();
  GmmParams gmm;
  gmm.means.resize(k, d);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < d; ++j) gmm.means(c, j) = 0.1 * rng.normal();
  gmm.log_std_devs = Eigen::MatrixXd::Zero(k, d);
  gmm.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  if (steps == 0) return gmm;

  const Eigen::Index p = 2 * k * d;
  AdamState adam = AdamState::zeros(p, step_size, spec.opt.adam_beta1, spec.opt.adam_beta2);
  Rng batch_rng = rng.split(2);
  Rng slice_rng = rng.split(3);
  SlicedDescent descent(spec, d, slice_rng);

  std::vector<Eigen::Index> comp(static_cast<std::size_t>(batch));
  Eigen::MatrixXd eta(batch, d);
  for (int step = 0; step < steps; ++step) {
    Eigen::MatrixXd z(batch, d);
    for (int b = 0; b < batch; ++b) {
      const auto c = static_cast<Eigen::Index>(sample_categorical(gmm.weights, rng));
      comp[static_cast<std::size_t>(b)] = c;
      for (Eigen::Index j = 0; j < d; ++j) {
        eta(b, j) = rng.normal();
        z(b, j) = gmm.means(c, j) + std::exp(gmm.log_std_devs(c, j)) * eta(b, j);
      }
    }
    const PointCloud sample(z);
    const PointCloud reference = rows_of(target, subsample(batch_rng, target.size(), batch));
    auto [value, gz] = guarded_gradient(descent, sample, reference, slice_rng, step);

    // Straight-through routing: each sample's gradient reaches only its component.
    Eigen::MatrixXd g_means = Eigen::MatrixXd::Zero(k, d);
    Eigen::MatrixXd g_logstd = Eigen::MatrixXd::Zero(k, d);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index c = comp[static_cast<std::size_t>(b)];
      g_means.row(c) += gz.row(b);
      g_logstd.row(c) += (gz.row(b).array() * (gmm.log_std_devs.row(c).array().exp()) *
                          eta.row(b).array())
                             .matrix();
    }
    Eigen::VectorXd params(p), grad(p);
    params << gmm.means.reshaped(), gmm.log_std_devs.reshaped();
    grad << g_means.reshaped(), g_logstd.reshaped();
    AdamUpdate up = adam_step(adam, grad, params, /*ascend=*/false);
    check_finite(up.parameter, "mixture parameter", step + 1);
    adam = std::move(up.state);
    gmm.means = up.parameter.head(k * d).reshaped(k, d);
    gmm.log_std_devs = up.parameter.tail(k * d).reshaped(k, d);
  }
  return gmm;
}

}  // namespace sfgw
