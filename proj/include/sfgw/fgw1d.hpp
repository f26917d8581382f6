#pragma once

#include <Eigen/Core>
#include <vector>

#include "sfgw/sphere_sampling.hpp"

namespace sfgw {

/// n x d sample matrix, one point per row, uniform weights 1/n.
class PointCloud {
 public:
  explicit PointCloud(Eigen::MatrixXd points);

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::Index dim() const noexcept { return points_.cols(); }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  Eigen::MatrixXd points_;
};

/// Projected sample with its ascending stable sort order.
struct Projected1D {
  Eigen::VectorXd values;
  /// values[order[0]] <= values[order[1]] <= ...
  std::vector<Eigen::Index> order;

  explicit Projected1D(Eigen::VectorXd v);

  Eigen::Index size() const noexcept { return values.size(); }
  Eigen::VectorXd sorted() const;
};

struct FgwConfig {
  /// Weight of the Gromov-Wasserstein term; 1 - beta weights the Wasserstein term.
  double beta = 0.1;
  /// Ground cost |x - y|^exponent.
  int exponent = 2;

  void validate() const;
};

enum class MonotoneCoupling { Ascending, Reversed };

Projected1D project(const PointCloud& cloud, const Direction& theta);
Projected1D project(const PointCloud& cloud, const Eigen::VectorXd& theta);

/// Cost of one monotone coupling between the sorted samples, evaluated with
/// the direct O(n^2) double sum.
double fgw_1d_coupling_cost(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg,
                            MonotoneCoupling coupling);

/// Minimum over the ascending and reversed monotone couplings. For exponent 2
/// and n >= kFgwFastPathMin the pairwise term uses an O(n) moment expansion.
/// Exactly symmetric in (xs, ys).
double fgw_1d(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg);

/// Same objective, always using the O(n^2) double sum.
double fgw_1d_reference(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg);

/// Exact minimum over all n! permutation couplings. Requires n <= 8.
double fgw_1d_bruteforce(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg);

struct FgwGradient {
  double value;
  Eigen::VectorXd grad_xs;  ///< d cost / d xs.values (input order)
  Eigen::VectorXd grad_ys;
  MonotoneCoupling coupling;
};

/// Gradient of fgw_1d in the projected values with the optimal coupling held
/// fixed. Exponent must be 2.
FgwGradient fgw_1d_grad(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg);

inline constexpr Eigen::Index kFgwFastPathMin = 64;

}  // namespace sfgw
