#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <variant>
#include <vector>

#include "sfgw/fgw1d.hpp"
#include "sfgw/rng.hpp"
#include "sfgw/sphere_opt.hpp"
#include "sfgw/sphere_sampling.hpp"

namespace sfgw {

struct UniformSlicing {
  Eigen::Index dim;
};

struct DiracSlicing {
  Direction location;
};

using SlicingDistribution =
    std::variant<UniformSlicing, DiracSlicing, VmfParams, PowerSphericalParams, MixtureVmfParams>;

Eigen::Index slicing_dim(const SlicingDistribution& slicing);

/// Draw one direction from any slicing distribution.
Direction sample_slice(const SlicingDistribution& slicing, Rng& rng);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int max_iter = 10;
  int num_projections = 50;
  GradientMethod gradient_method = GradientMethod::Pathwise;
  /// Independent starts for max_sfg.
  int restarts = 8;
  /// Independent ascents of the slicing locations (ssfg, pssfg, mssfg); the run whose
  /// last few trace points average highest is kept.
  int location_restarts = 1;
  /// Stop once every location moves less than this in one iteration.
  double tolerance = 1e-6;

  void validate() const;
};

struct TracePoint {
  int iteration;
  double objective;
};

struct DiscrepancyReport {
  double value;
  /// Monte Carlo standard error of `value` (0 for deterministic evaluations).
  double std_error;
  SlicingDistribution final_slicing;
  std::vector<TracePoint> trace;
  long num_projections_used;
};

/// Stochastic projected Adam ascent of E_{theta ~ sum_i w_i P(eps_i, kappa_i)}[f(theta)]
/// over the locations eps_i, where P is vMF or power spherical. Locations start
/// uniform on the sphere. Kept as an object so callers can warm-start across
/// changing objectives.
class SlicingAscent {
 public:
  SlicingAscent(Eigen::Index dim, SphereFamily family, Eigen::VectorXd kappas,
                Eigen::VectorXd weights, const OptimizerConfig& opt, Rng& rng);

  struct Step {
    double objective;      // batch average of f before the update
    double largest_move;   // max_i |eps_i(new) - eps_i(old)|
  };
  /// Draw one batch of opt.num_projections directions, estimate every location
  /// gradient and take one Adam step per location.
  Step step(const SliceObjective& objective, Rng& rng);

  /// Current slicing distribution; mixture form when `as_mixture`.
  SlicingDistribution distribution(bool as_mixture) const;
  const std::vector<Eigen::VectorXd>& locations() const { return locations_; }

 private:
  SphereFamily family_;
  Eigen::VectorXd kappas_, weights_;
  OptimizerConfig opt_;
  std::vector<Eigen::VectorXd> locations_;
  std::vector<AdamState> adam_;
};

/// theta -> fgw_1d(project(mu, theta), project(nu, theta)) and its theta-gradient
/// with the optimal coupling frozen. The clouds are captured by reference.
SliceObjective make_slice_objective(const PointCloud& mu, const PointCloud& nu,
                                    const FgwConfig& cfg);

/// Monte Carlo average of fgw_1d over `num_projections` draws from a fixed slicing
/// distribution; no optimization.
DiscrepancyReport evaluate_slicing(const PointCloud& mu, const PointCloud& nu,
                                   const FgwConfig& cfg, const SlicingDistribution& slicing,
                                   int num_projections, Rng& rng);

DiscrepancyReport sfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                      int num_projections, Rng& rng);

/// Projected Adam ascent over single directions with `opt.restarts` uniform starts.
/// value is the best objective found; final_slicing is the Dirac at its argmax.
DiscrepancyReport max_sfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                          const OptimizerConfig& opt, Rng& rng);

DiscrepancyReport ssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                       double kappa, const OptimizerConfig& opt, Rng& rng);

DiscrepancyReport pssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                        double kappa, const OptimizerConfig& opt, Rng& rng);

/// Mixture-of-vMF slicing with all k locations ascended jointly. k == 1 follows
/// exactly the same random stream and arithmetic as ssfg.
DiscrepancyReport mssfg(const PointCloud& mu, const PointCloud& nu, const FgwConfig& cfg,
                        const Eigen::VectorXd& kappas, const Eigen::VectorXd& alphas,
                        const OptimizerConfig& opt, Rng& rng);

}  // namespace sfgw
