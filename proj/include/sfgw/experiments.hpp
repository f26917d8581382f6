#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfgw/discrepancies.hpp"

namespace sfgw {

enum class DiscrepancyKind { Sfg, MaxSfg, Ssfg, Pssfg, Mssfg };

std::string to_string(DiscrepancyKind kind);
/// Accepts "sfg", "max-sfg", "ssfg", "pssfg", "mssfg"; throws ParameterError otherwise.
DiscrepancyKind parse_discrepancy_kind(const std::string& name);

/// Which discrepancy to compute, with everything it needs.
struct DiscrepancySpec {
  DiscrepancyKind kind = DiscrepancyKind::Ssfg;
  /// Concentration for ssfg / pssfg.
  double kappa = 10.0;
  /// Mixture concentrations and weights for mssfg.
  Eigen::VectorXd kappas;
  Eigen::VectorXd alphas;
  FgwConfig fgw;
  OptimizerConfig opt;

  void validate() const;
};

DiscrepancyReport compute_discrepancy(const PointCloud& mu, const PointCloud& nu,
                                      const DiscrepancySpec& spec, Rng& rng);

struct ExperimentRecord {
  std::string metric;
  double parameter;
  double value;
  double std_error;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> table;
  std::vector<std::pair<std::string, std::string>> metadata;
};

/// ssfg for every kappa (parameter = kappa), then "sfg" and "max_sfg" reference
/// rows (parameter 0). Each value is the mean over `trials` independent runs;
/// std_error is the spread of that mean, or the Monte Carlo error when trials == 1.
ExperimentResult kappa_sweep(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                             const Eigen::VectorXd& kappas, const OptimizerConfig& opt,
                             int trials, Rng& rng);

/// Least-squares slope of log(y) against log(x) and its standard error.
std::pair<double, double> loglog_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Mean ssfg(mu_n, mu_m) over trials for each n (metric "ssfg", parameter n), where
/// mu_n and mu_m are uniform samples of [0,1]^d and m = 16 max(n), rounded up to a
/// common multiple of the sizes. A final "ssfg_slope" row holds the log-log fit.
ExperimentResult convergence_rate(int d, const std::vector<int>& sample_sizes, int trials,
                                  const FgwConfig& cfg, double kappa, const OptimizerConfig& opt,
                                  Rng& rng);

/// Same harness for the squared 2-Wasserstein distance of uniform samples on [0,1]
/// (metric "w2sq", fit "w2sq_slope"), where the 1/n rate is classical.
ExperimentResult wasserstein_convergence_control(const std::vector<int>& sample_sizes,
                                                 int trials, Rng& rng);

struct FlowOptions {
  /// Starting particles; standard Gaussian scaled by 0.1 when absent.
  std::optional<PointCloud> initial;
  int snapshot_every = 100;
  /// Every this many steps the particles are also scored by sfg over a fixed set of
  /// uniform directions, so different discrepancies can be compared on one scale.
  int monitor_every = 10;
  int monitor_directions = 100;
};

struct FlowSnapshot {
  int step;
  PointCloud particles;
};

struct FlowResult {
  /// Step 0, every snapshot_every steps, and the last step.
  std::vector<FlowSnapshot> snapshots;
  /// Estimate of the driving discrepancy before each step.
  std::vector<double> trace;
  /// (step, fixed-direction sfg) pairs.
  std::vector<std::pair<int, double>> monitor;
};

/// Gradient descent of free particles on the chosen discrepancy to `target`,
/// x <- x - step_size * n * dD/dx. Slicing locations (max-sfg, ssfg, pssfg, mssfg)
/// are warm-started across steps with opt.max_iter ascent iterations per step. When
/// num_particles < target size a fresh target subsample is drawn each step.
FlowResult particle_flow(const PointCloud& target, int num_particles,
                         const DiscrepancySpec& spec, int steps, double step_size, Rng& rng,
                         const FlowOptions& options = {});

struct GmmParams {
  Eigen::MatrixXd means;         // k x d
  Eigen::MatrixXd log_std_devs;  // k x d
  Eigen::VectorXd weights;

  Eigen::Index components() const { return means.rows(); }
  Eigen::Index dim() const { return means.cols(); }
  void validate() const;
};

PointCloud sample_gmm(const GmmParams& gmm, int n, Rng& rng);

/// Fit a diagonal GMM with uniform fixed weights by Adam descent (learning rate
/// step_size, decay rates from spec.opt) of the discrepancy between a batch of
/// reparameterized GMM samples and a target batch. Gradients reach only the
/// component that produced each sample.
GmmParams gmm_fit(const PointCloud& target, int k, const DiscrepancySpec& spec, int steps,
                  double step_size, int batch, Rng& rng);

}  // namespace sfgw
