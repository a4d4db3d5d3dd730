#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace spikelab {

struct SpectrumPoint {
  double t;  // eigenvalue, > 0
  double w;  // weight, >= 0
};

/// Discrete population spectral distribution: finitely many weighted point
/// masses, sorted ascending by location, weights summing to one.
class DiscreteSpectrum {
 public:
  /// Validates, sorts and merges coincident locations. Throws EmptyInput,
  /// NonPositiveEigenvalue, or InvalidArgument (negative weight or weights
  /// not summing to one within 1e-12).
  static DiscreteSpectrum from_points(std::vector<SpectrumPoint> points);

  const std::vector<SpectrumPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Weighted moment sum_i w_i t_i^k.
  double moment(int k) const;

  /// Largest location carrying positive weight.
  double max_support() const;

  static DiscreteSpectrum identity() { return from_points({{1.0, 1.0}}); }

 private:
  std::vector<SpectrumPoint> points_;
};

/// Point masses of weight 1/len at each eigenvalue, duplicates merged.
DiscreteSpectrum spectrum_from_eigenvalues(std::span<const double> eigs);

inline constexpr double kInfiniteRatio = std::numeric_limits<double>::infinity();

/// Aspect ratio c = p/n (possibly +inf) together with the first two moments
/// a = int t dH and b = int t^2 dH.
struct RegimeParams {
  double c = kInfiniteRatio;
  double a = 1.0;
  double b = 1.0;

  bool ultrahigh() const noexcept { return c == kInfiniteRatio; }

  /// Moments taken exactly from H. Throws InvalidArgument for c <= 0.
  static RegimeParams from_spectrum(const DiscreteSpectrum& h, double c);
  void validate() const;
};

struct SupportEdges {
  double a_frak;  // largest critical point of phi
  double b_frak;  // right edge of the limiting support, phi(a_frak)
};

/// Largest pole of phi, i.e. max_t t / sqrt(c b); zero when c is infinite.
double largest_pole(const DiscreteSpectrum& h, const RegimeParams& r);

/// phi(x) = x + (1/b) sum_i w_i t_i^2 / (x - t_i / sqrt(c b)). For c = inf
/// this is x + 1/x. Throws PoleViolation unless x lies right of every pole
/// (x != 0 when c = inf).
double phi(const DiscreteSpectrum& h, const RegimeParams& r, double x);
double phi_prime(const DiscreteSpectrum& h, const RegimeParams& r, double x);

/// Right edge of the LSD support. Throws NoRootFound when phi' has no zero
/// right of the largest pole.
SupportEdges support_edge(const DiscreteSpectrum& h, const RegimeParams& r);

/// Unique alpha > a_frak with phi(alpha) = lambda. Requires lambda > b_frak;
/// throws BelowEdge otherwise.
double phi_inverse(const DiscreteSpectrum& h, const RegimeParams& r, double lambda);

struct StieltjesOptions {
  double damping = 0.5;
  int max_iter = 10'000;
  double residual_tol = 1e-10;
  std::optional<std::complex<double>> initial;
};

/// Residual |z - (-1/s - (s/b) sum w t^2 / (1 + s t / sqrt(c b)))|.
double stieltjes_residual(const DiscreteSpectrum& h, const RegimeParams& r,
                          std::complex<double> z, std::complex<double> s);

/// Stieltjes transform of the LSD at z (Im z > 0, or real z outside the
/// support). Damped fixed point started from the semicircle, with Newton and
/// polynomial-root fallbacks. For c = inf the semicircle closed form is
/// returned. Throws NonConvergence or BranchAmbiguity.
std::complex<double> stieltjes_solve(const DiscreteSpectrum& h, const RegimeParams& r,
                                     std::complex<double> z, const StieltjesOptions& opts = {});

/// ds/dz at a solution s of the fixed-point equation (implicit differentiation).
std::complex<double> stieltjes_derivative(const DiscreteSpectrum& h, const RegimeParams& r,
                                          std::complex<double> s);

/// Semicircle Stieltjes transform, branch with s -> 0 as |z| -> inf.
std::complex<double> semicircle_stieltjes(std::complex<double> z);
double semicircle_density(double x);
double semicircle_cdf(double x);

/// Density Im s(x + i eps) / pi on each grid point. A point where the solver
/// fails is reported as nullopt.
std::vector<std::optional<double>> lsd_density(const DiscreteSpectrum& h, const RegimeParams& r,
                                               std::span<const double> grid, double eps = 1e-6);

}  // namespace spikelab
