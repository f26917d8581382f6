#include "sfgw/fgw1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "sfgw/errors.hpp"

namespace sfgw {

namespace {

double ipow(double x, int r) {
  double result = 1.0;
  for (int i = 0; i < r; ++i) result *= x;
  return result;
}

double ground(double x, double y, int r) { return ipow(std::abs(x - y), r); }

void check_sizes(const Projected1D& xs, const Projected1D& ys) {
  if (xs.size() != ys.size()) {
    throw SizeError("projected samples differ in size (" + std::to_string(xs.size()) + " vs " +
                    std::to_string(ys.size()) + ")");
  }
  if (xs.size() == 0) throw SizeError("projected samples are empty");
}

// Sorted samples arranged so both argument orders run the same arithmetic.
struct Aligned {
  Eigen::VectorXd first;
  Eigen::VectorXd second;
  bool swapped;
};

Aligned align(const Projected1D& xs, const Projected1D& ys) {
  Eigen::VectorXd a = xs.sorted();
  Eigen::VectorXd b = ys.sorted();
  const bool swap = std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  if (swap) std::swap(a, b);
  return {std::move(a), std::move(b), swap};
}

Eigen::VectorXd oriented(const Eigen::VectorXd& b, MonotoneCoupling coupling) {
  if (coupling == MonotoneCoupling::Ascending) return b;
  return b.reverse();
}

double wasserstein_term(const Eigen::VectorXd& a, const Eigen::VectorXd& c, int r) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += ground(a[i], c[i], r);
  return sum / static_cast<double>(a.size());
}

double pairwise_term_direct(const Eigen::VectorXd& a, const Eigen::VectorXd& c, int r) {
  const Eigen::Index n = a.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double diff = ground(a[i], a[j], r) - ground(c[i], c[j], r);
      sum += diff * diff;
    }
  }
  const double nn = static_cast<double>(n);
  return 2.0 * sum / (nn * nn);
}

struct CenteredMoments {
  Eigen::ArrayXd a, c;
  double s2a, s2c, s3a, s3c, s4a, s4c, sac, sa2c, sac2, sa2c2;
};

CenteredMoments centered_moments(const Eigen::VectorXd& a, const Eigen::VectorXd& c) {
  CenteredMoments m;
  m.a = a.array() - a.mean();
  m.c = c.array() - c.mean();
  const Eigen::ArrayXd a2 = m.a.square(), c2 = m.c.square();
  m.s2a = a2.sum();
  m.s2c = c2.sum();
  m.s3a = (a2 * m.a).sum();
  m.s3c = (c2 * m.c).sum();
  m.s4a = (a2 * a2).sum();
  m.s4c = (c2 * c2).sum();
  m.sac = (m.a * m.c).sum();
  m.sa2c = (a2 * m.c).sum();
  m.sac2 = (m.a * c2).sum();
  m.sa2c2 = (a2 * c2).sum();
  return m;
}

// Sum over (i, j) of ((a_i - a_j)^2 - (c_i - c_j)^2)^2 / n^2 via moments of the
// centered samples; the term only depends on pairwise differences.
double pairwise_term_moments(const Eigen::VectorXd& a, const Eigen::VectorXd& c) {
  if (a == c) return 0.0;
  const double n = static_cast<double>(a.size());
  const CenteredMoments m = centered_moments(a, c);
  const double pp = 2.0 * n * m.s4a + 6.0 * m.s2a * m.s2a;
  const double qq = 2.0 * n * m.s4c + 6.0 * m.s2c * m.s2c;
  const double pq = 2.0 * n * m.sa2c2 + 2.0 * m.s2a * m.s2c + 4.0 * m.sac * m.sac;
  return std::max(0.0, (pp + qq - 2.0 * pq) / (n * n));
}

bool use_fast_path(const FgwConfig& cfg, Eigen::Index n) {
  return cfg.exponent == 2 && n >= kFgwFastPathMin;
}

double oriented_cost(const Eigen::VectorXd& a, const Eigen::VectorXd& c, const FgwConfig& cfg,
                     bool fast) {
  double cost = 0.0;
  if (cfg.beta < 1.0) cost += (1.0 - cfg.beta) * wasserstein_term(a, c, cfg.exponent);
  if (cfg.beta > 0.0) {
    cost += cfg.beta *
            (fast ? pairwise_term_moments(a, c) : pairwise_term_direct(a, c, cfg.exponent));
  }
  return cost;
}

struct Choice {
  double cost;
  MonotoneCoupling coupling;
};

Choice best_coupling(const Aligned& al, const FgwConfig& cfg, bool fast) {
  const double asc = oriented_cost(al.first, al.second, cfg, fast);
  if (cfg.beta == 0.0) return {asc, MonotoneCoupling::Ascending};
  const double rev =
      oriented_cost(al.first, oriented(al.second, MonotoneCoupling::Reversed), cfg, fast);
  if (rev < asc) return {rev, MonotoneCoupling::Reversed};
  return {asc, MonotoneCoupling::Ascending};
}

double fgw_impl(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg, bool fast) {
  cfg.validate();
  check_sizes(xs, ys);
  return best_coupling(align(xs, ys), cfg, fast).cost;
}

// d/da_k and d/dc_k of the pairwise term, k over sorted/oriented positions.
void pairwise_gradient(const Eigen::VectorXd& a, const Eigen::VectorXd& c, bool fast,
                       Eigen::VectorXd& ga, Eigen::VectorXd& gc) {
  const Eigen::Index n = a.size();
  const double nn = static_cast<double>(n);
  const double scale = 8.0 / (nn * nn);
  ga.setZero(n);
  gc.setZero(n);
  if (fast) {
    const CenteredMoments m = centered_moments(a, c);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ak = m.a[k], ck = m.c[k];
      const double cube_a = nn * ak * ak * ak + 3.0 * ak * m.s2a - m.s3a;
      const double cube_c = nn * ck * ck * ck + 3.0 * ck * m.s2c - m.s3c;
      const double mixed_a = nn * ck * ck * ak + 2.0 * ck * m.sac + ak * m.s2c - m.sac2;
      const double mixed_c = nn * ak * ak * ck + 2.0 * ak * m.sac + ck * m.s2a - m.sa2c;
      ga[k] = scale * (cube_a - mixed_a);
      gc[k] = scale * (cube_c - mixed_c);
    }
    return;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    double sa = 0.0, sc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double da = a[k] - a[j], dc = c[k] - c[j];
      const double gap = da * da - dc * dc;
      sa += gap * da;
      sc -= gap * dc;
    }
    ga[k] = scale * sa;
    gc[k] = scale * sc;
  }
}

}  // namespace

PointCloud::PointCloud(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw SizeError("point cloud must contain at least one point");
  if (points_.cols() < 2) throw DimensionError("point cloud dimension must be at least 2");
  if (!points_.allFinite()) throw ParameterError("point cloud contains non-finite entries");
}

Projected1D::Projected1D(Eigen::VectorXd v) : values(std::move(v)), order(values.size()) {
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [this](Eigen::Index i, Eigen::Index j) { return values[i] < values[j]; });
}

Eigen::VectorXd Projected1D::sorted() const {
  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) out[i] = values[order[i]];
  return out;
}

void FgwConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in [0, 1]");
  if (exponent < 1) throw ParameterError("ground-cost exponent must be at least 1");
}

Projected1D project(const PointCloud& cloud, const Eigen::VectorXd& theta) {
  if (theta.size() != cloud.dim()) {
    throw DimensionError("direction dimension " + std::to_string(theta.size()) +
                         " does not match cloud dimension " + std::to_string(cloud.dim()));
  }
  return Projected1D(cloud.points() * theta);
}

Projected1D project(const PointCloud& cloud, const Direction& theta) {
  return project(cloud, theta.coords());
}

double fgw_1d_coupling_cost(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg,
                            MonotoneCoupling coupling) {
  cfg.validate();
  check_sizes(xs, ys);
  const Aligned al = align(xs, ys);
  return oriented_cost(al.first, oriented(al.second, coupling), cfg, false);
}

double fgw_1d(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg) {
  return fgw_impl(xs, ys, cfg, use_fast_path(cfg, xs.size()));
}

double fgw_1d_reference(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg) {
  return fgw_impl(xs, ys, cfg, false);
}

double fgw_1d_bruteforce(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg) {
  cfg.validate();
  check_sizes(xs, ys);
  const Eigen::Index n = xs.size();
  if (n > 8) throw SizeError("brute-force coupling search is limited to n <= 8");
  const int r = cfg.exponent;
  const double nd = static_cast<double>(n);
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double w = 0.0, gw = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      w += ground(xs.values[i], ys.values[perm[i]], r);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double diff = ground(xs.values[i], xs.values[j], r) -
                            ground(ys.values[perm[i]], ys.values[perm[j]], r);
        gw += diff * diff;
      }
    }
    best = std::min(best, (1.0 - cfg.beta) * w / nd + cfg.beta * gw / (nd * nd));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

FgwGradient fgw_1d_grad(const Projected1D& xs, const Projected1D& ys, const FgwConfig& cfg) {
  cfg.validate();
  check_sizes(xs, ys);
  if (cfg.exponent != 2) {
    throw ParameterError("fgw_1d_grad supports exponent 2 only (got " +
                         std::to_string(cfg.exponent) + ")");
  }
  const Eigen::Index n = xs.size();
  const bool fast = use_fast_path(cfg, n);
  const Aligned al = align(xs, ys);
  const Choice choice = best_coupling(al, cfg, fast);
  const Eigen::VectorXd& a = al.first;
  const Eigen::VectorXd c = oriented(al.second, choice.coupling);

  Eigen::VectorXd ga = Eigen::VectorXd::Zero(n), gc = Eigen::VectorXd::Zero(n);
  if (cfg.beta < 1.0) {
    const Eigen::VectorXd w = (2.0 * (1.0 - cfg.beta) / static_cast<double>(n)) * (a - c);
    ga += w;
    gc -= w;
  }
  if (cfg.beta > 0.0) {
    Eigen::VectorXd pa, pc;
    pairwise_gradient(a, c, fast, pa, pc);
    ga += cfg.beta * pa;
    gc += cfg.beta * pc;
  }

  // Back to the unsorted input order of each argument.
  const Projected1D& first = al.swapped ? ys : xs;
  const Projected1D& second = al.swapped ? xs : ys;
  Eigen::VectorXd g_first(n), g_second(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g_first[first.order[i]] = ga[i];
    const Eigen::Index pos = choice.coupling == MonotoneCoupling::Ascending ? i : n - 1 - i;
    g_second[second.order[pos]] = gc[i];
  }
  FgwGradient out{choice.cost, {}, {}, choice.coupling};
  if (al.swapped) {
    out.grad_xs = std::move(g_second);
    out.grad_ys = std::move(g_first);
  } else {
    out.grad_xs = std::move(g_first);
    out.grad_ys = std::move(g_second);
  }
  return out;
}

}  // namespace sfgw
