#include "spikelab/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "spikelab/errors.hpp"
#include "spikelab/roots.hpp"

namespace spikelab {

namespace {

using cplx = std::complex<double>;

std::vector<SpectrumPoint> sort_and_merge(std::vector<SpectrumPoint> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const SpectrumPoint& x, const SpectrumPoint& y) { return x.t < y.t; });
  std::vector<SpectrumPoint> merged;
  merged.reserve(pts.size());
  for (const auto& p : pts) {
    if (!merged.empty() && p.t - merged.back().t <= 1e-14 * std::max(1.0, p.t)) {
      merged.back().w += p.w;
    } else {
      merged.push_back(p);
    }
  }
  return merged;
}

double inv_sqrt_cb(const RegimeParams& r) { return 1.0 / std::sqrt(r.c * r.b); }

// sum_i w_i t_i^2 / (x - beta_i)^k / b, valid anywhere off the poles.
double phi_tail(const DiscreteSpectrum& h, const RegimeParams& r, double x, int k) {
  const double scale = inv_sqrt_cb(r);
  double acc = 0.0;
  for (const auto& p : h.points()) {
    const double d = x - p.t * scale;
    acc += p.w * p.t * p.t / (k == 1 ? d : d * d);
  }
  return acc / r.b;
}

double phi_raw(const DiscreteSpectrum& h, const RegimeParams& r, double x) {
  if (r.ultrahigh()) return x + 1.0 / x;
  return x + phi_tail(h, r, x, 1);
}

double phi_prime_raw(const DiscreteSpectrum& h, const RegimeParams& r, double x) {
  if (r.ultrahigh()) return 1.0 - 1.0 / (x * x);
  return 1.0 - phi_tail(h, r, x, 2);
}

void check_domain(const DiscreteSpectrum& h, const RegimeParams& r, double x) {
  if (r.ultrahigh()) {
    if (x == 0.0) throw Error(ErrorCode::PoleViolation, "phi evaluated at x = 0 with c = inf");
    return;
  }
  const double pole = largest_pole(h, r);
  if (!(x > pole)) {
    throw Error(ErrorCode::PoleViolation,
                "x = " + std::to_string(x) + " is not right of the largest pole " +
                    std::to_string(pole));
  }
}

// K(s) = (1/b) sum w t^2 / (1 + s beta), and its derivative in s.
cplx kernel(const DiscreteSpectrum& h, const RegimeParams& r, cplx s) {
  if (r.ultrahigh()) return 1.0;
  const double scale = inv_sqrt_cb(r);
  cplx acc = 0.0;
  for (const auto& p : h.points()) acc += p.w * p.t * p.t / (1.0 + s * (p.t * scale));
  return acc / r.b;
}

cplx kernel_prime(const DiscreteSpectrum& h, const RegimeParams& r, cplx s) {
  if (r.ultrahigh()) return 0.0;
  const double scale = inv_sqrt_cb(r);
  cplx acc = 0.0;
  for (const auto& p : h.points()) {
    const double beta = p.t * scale;
    const cplx d = 1.0 + s * beta;
    acc -= p.w * p.t * p.t * beta / (d * d);
  }
  return acc / r.b;
}

cplx equation(const DiscreteSpectrum& h, const RegimeParams& r, cplx z, cplx s) {
  return z + 1.0 / s + s * kernel(h, r, s);
}

bool acceptable(const DiscreteSpectrum& h, const RegimeParams& r, cplx z, cplx s, double tol) {
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag()) || s == cplx(0.0)) return false;
  if (z.imag() > 0.0 && s.imag() < 0.0) return false;
  return stieltjes_residual(h, r, z, s) < tol;
}

std::optional<cplx> newton(const DiscreteSpectrum& h, const RegimeParams& r, cplx z, cplx s,
                           double tol) {
  for (int it = 0; it < 200; ++it) {
    const cplx f = equation(h, r, z, s);
    const cplx df = -1.0 / (s * s) + kernel(h, r, s) + s * kernel_prime(h, r, s);
    if (df == cplx(0.0)) return std::nullopt;
    cplx step = f / df;
    // Keep iterates in the upper half plane when solving there.
    cplx next = s - step;
    for (int k = 0; k < 30 && z.imag() > 0.0 && next.imag() < 0.0; ++k) {
      step *= 0.5;
      next = s - step;
    }
    s = next;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  if (acceptable(h, r, z, s, tol)) return s;
  return std::nullopt;
}

// Roots of z s P(s) + P(s) + (s^2/b) sum_i w_i t_i^2 prod_{j != i} (1 + s beta_j),
// P(s) = prod_j (1 + s beta_j). Only used for spectra with few atoms.
std::optional<cplx> polynomial_fallback(const DiscreteSpectrum& h, const RegimeParams& r, cplx z,
                                        double tol) {
  const std::size_t m = h.size();
  if (m > 60 || r.ultrahigh()) return std::nullopt;
  const double scale = inv_sqrt_cb(r);
  using Poly = std::vector<cplx>;  // ascending coefficients
  auto mul_linear = [](const Poly& p, double beta) {
    Poly out(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      out[i] += p[i];
      out[i + 1] += p[i] * beta;
    }
    return out;
  };
  Poly full{1.0};
  for (const auto& pt : h.points()) full = mul_linear(full, pt.t * scale);
  Poly total(m + 3, 0.0);
  for (std::size_t i = 0; i < full.size(); ++i) {
    total[i] += full[i];
    total[i + 1] += z * full[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    Poly partial{1.0};
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) partial = mul_linear(partial, h.points()[j].t * scale);
    }
    const double coef = h.points()[i].w * h.points()[i].t * h.points()[i].t / r.b;
    for (std::size_t k = 0; k < partial.size(); ++k) total[k + 2] += coef * partial[k];
  }
  while (total.size() > 1 && std::abs(total.back()) == 0.0) total.pop_back();
  const Eigen::Index deg = static_cast<Eigen::Index>(total.size()) - 1;
  if (deg < 1) return std::nullopt;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) companion(i, deg - 1) = -total[i] / total[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success) return std::nullopt;
  std::optional<cplx> best;
  double best_res = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < deg; ++i) {
    cplx s = solver.eigenvalues()(i);
    if (auto polished = newton(h, r, z, s, tol)) s = *polished;
    if (!acceptable(h, r, z, s, tol)) continue;
    const double res = stieltjes_residual(h, r, z, s);
    if (res < best_res) {
      best_res = res;
      best = s;
    }
  }
  return best;
}

// Largest zero of phi' on the negative half line (exists when c > 1).
std::optional<double> left_critical_point(const DiscreteSpectrum& h, const RegimeParams& r) {
  if (r.c <= 1.0) return std::nullopt;
  auto fp = [&](double x) { return phi_prime_raw(h, r, x); };
  const double hi = -1e-12 * std::max(1.0, largest_pole(h, r));
  auto lo = roots::expand_until([&](double x) { return fp(x) > 0.0; }, hi, -1.0);
  if (!lo) return std::nullopt;
  return roots::bisect(fp, *lo, hi, 1e-14);
}

cplx solve_real(const DiscreteSpectrum& h, const RegimeParams& r, double x, double tol) {
  if (r.ultrahigh()) {
    if (std::abs(x) <= 2.0)
      throw Error(ErrorCode::BranchAmbiguity, "real z inside [-2, 2] for the semicircle");
    return semicircle_stieltjes(cplx(x, 0.0));
  }
  const SupportEdges edges = support_edge(h, r);
  cplx s;
  if (x > edges.b_frak) {
    s = -1.0 / phi_inverse(h, r, x);
  } else {
    double left_edge;
    double upper;
    if (auto xl = left_critical_point(h, r)) {
      upper = *xl;
      left_edge = phi_raw(h, r, *xl);
    } else {
      upper = -1e-300;
      left_edge = -std::sqrt(r.c / r.b) * r.a;
    }
    if (!(x < left_edge)) {
      throw Error(ErrorCode::BranchAmbiguity,
                  "real z = " + std::to_string(x) + " is not outside the LSD support");
    }
    auto f = [&](double y) { return phi_raw(h, r, y) - x; };
    auto lo = roots::expand_until([&](double y) { return f(y) < 0.0; }, upper,
                                  upper - std::max(1.0, std::abs(x)));
    if (!lo) throw Error(ErrorCode::NonConvergence, "cannot bracket the left branch");
    auto y = roots::bisect(f, *lo, upper, 1e-15 * std::max(1.0, std::abs(*lo)));
    if (!y) throw Error(ErrorCode::NonConvergence, "left branch bisection failed");
    s = -1.0 / *y;
  }
  if (auto polished = newton(h, r, cplx(x, 0.0), s, tol)) s = *polished;
  if (stieltjes_residual(h, r, cplx(x, 0.0), s) >= tol)
    throw Error(ErrorCode::NonConvergence, "real-axis Stieltjes residual above tolerance");
  return s;
}

}  // namespace

DiscreteSpectrum DiscreteSpectrum::from_points(std::vector<SpectrumPoint> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "spectrum has no points");
  double total = 0.0;
  for (const auto& p : points) {
    if (!(p.t > 0.0) || !std::isfinite(p.t))
      throw Error(ErrorCode::NonPositiveEigenvalue, "spectrum location " + std::to_string(p.t));
    if (!(p.w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative spectrum weight");
    total += p.w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "weights sum to " + std::to_string(total));
  DiscreteSpectrum out;
  out.points_ = sort_and_merge(std::move(points));
  return out;
}

double DiscreteSpectrum::moment(int k) const {
  double acc = 0.0;
  for (const auto& p : points_) acc += p.w * std::pow(p.t, k);
  return acc;
}

double DiscreteSpectrum::max_support() const {
  for (auto it = points_.rbegin(); it != points_.rend(); ++it) {
    if (it->w > 0.0) return it->t;
  }
  return points_.back().t;
}

DiscreteSpectrum spectrum_from_eigenvalues(std::span<const double> eigs) {
  if (eigs.empty()) throw Error(ErrorCode::EmptyInput, "no eigenvalues");
  std::vector<double> sorted(eigs.begin(), eigs.end());
  for (double e : sorted) {
    if (!(e > 0.0) || !std::isfinite(e))
      throw Error(ErrorCode::NonPositiveEigenvalue, "eigenvalue " + std::to_string(e));
  }
  std::sort(sorted.begin(), sorted.end());
  // Count runs first so each weight is a single rounding of count / len.
  std::vector<SpectrumPoint> pts;
  std::vector<std::size_t> counts;
  for (double e : sorted) {
    if (!pts.empty() && e - pts.back().t <= 1e-14 * std::max(1.0, e)) {
      ++counts.back();
    } else {
      pts.push_back({e, 0.0});
      counts.push_back(1);
    }
  }
  const double len = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].w = static_cast<double>(counts[i]) / len;
  return DiscreteSpectrum::from_points(std::move(pts));
}

RegimeParams RegimeParams::from_spectrum(const DiscreteSpectrum& h, double c) {
  RegimeParams r{c, h.moment(1), h.moment(2)};
  r.validate();
  return r;
}

void RegimeParams::validate() const {
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "aspect ratio c must be positive");
  if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "b must be positive");
  if (b < a * a * (1.0 - 1e-12))
    throw Error(ErrorCode::InvalidArgument, "b < a^2 violates Jensen's inequality");
}

double largest_pole(const DiscreteSpectrum& h, const RegimeParams& r) {
  if (r.ultrahigh()) return 0.0;
  return h.max_support() * inv_sqrt_cb(r);
}

double phi(const DiscreteSpectrum& h, const RegimeParams& r, double x) {
  check_domain(h, r, x);
  return phi_raw(h, r, x);
}

double phi_prime(const DiscreteSpectrum& h, const RegimeParams& r, double x) {
  check_domain(h, r, x);
  return phi_prime_raw(h, r, x);
}

SupportEdges support_edge(const DiscreteSpectrum& h, const RegimeParams& r) {
  if (r.ultrahigh()) return {1.0, 2.0};
  const double pole = largest_pole(h, r);
  const double lo = pole * (1.0 + 1e-12);
  auto fp = [&](double x) { return phi_prime_raw(h, r, x); };
  if (!(fp(lo) < 0.0))
    throw Error(ErrorCode::NoRootFound, "phi' is not negative just right of the largest pole");
  auto hi = roots::expand_until([&](double x) { return fp(x) > 0.0; }, lo,
                                lo + std::max(1.0, pole));
  if (!hi) throw Error(ErrorCode::NoRootFound, "phi' never turns positive");
  auto root = roots::bisect(fp, lo, *hi, 1e-14 * std::max(1.0, *hi));
  if (!root) throw Error(ErrorCode::NoRootFound, "no sign change of phi' right of the poles");
  return {*root, phi_raw(h, r, *root)};
}

double phi_inverse(const DiscreteSpectrum& h, const RegimeParams& r, double lambda) {
  const SupportEdges edges = support_edge(h, r);
  if (!(lambda > edges.b_frak)) {
    throw Error(ErrorCode::BelowEdge, "lambda = " + std::to_string(lambda) +
                                          " is not above the edge " +
                                          std::to_string(edges.b_frak));
  }
  if (r.ultrahigh()) return 0.5 * (lambda + std::sqrt(lambda * lambda - 4.0));
  // phi(x) > x right of the poles, so the root lies in (a_frak, lambda].
  auto f = [&](double x) { return phi_raw(h, r, x) - lambda; };
  auto root = roots::bisect(f, edges.a_frak, lambda, 1e-13 * std::max(1.0, lambda));
  if (!root) throw Error(ErrorCode::NoRootFound, "phi inversion failed to bracket");
  return *root;
}

double stieltjes_residual(const DiscreteSpectrum& h, const RegimeParams& r, std::complex<double> z,
                          std::complex<double> s) {
  const cplx rhs = -1.0 / s - s * kernel(h, r, s);
  return std::abs(z - rhs);
}

std::complex<double> semicircle_stieltjes(std::complex<double> z) {
  // sqrt(z-2) sqrt(z+2) has its cut on [-2, 2] and behaves like z at infinity.
  const cplx root = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
  return 0.5 * (-z + root);
}

double semicircle_density(double x) {
  if (std::abs(x) >= 2.0) return 0.0;
  return std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi);
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
         std::asin(0.5 * x) / std::numbers::pi;
}

std::complex<double> stieltjes_solve(const DiscreteSpectrum& h, const RegimeParams& r,
                                     std::complex<double> z, const StieltjesOptions& opts) {
  r.validate();
  const double tol = opts.residual_tol;
  if (z.imag() == 0.0) return solve_real(h, r, z.real(), tol);
  if (z.imag() < 0.0) {
    StieltjesOptions mirrored = opts;
    if (opts.initial) mirrored.initial = std::conj(*opts.initial);
    return std::conj(stieltjes_solve(h, r, std::conj(z), mirrored));
  }
  if (r.ultrahigh()) return semicircle_stieltjes(z);

  const cplx start = opts.initial.value_or(semicircle_stieltjes(z));
  cplx s = start;
  for (int it = 0; it < opts.max_iter; ++it) {
    const cplx g = -1.0 / (z + s * kernel(h, r, s));
    const cplx next = (1.0 - opts.damping) * s + opts.damping * g;
    const double change = std::abs(next - s);
    s = next;
    if (change < 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  if (acceptable(h, r, z, s, tol)) return s;
  if (auto polished = newton(h, r, z, s, tol)) return *polished;
  if (auto fresh = newton(h, r, z, semicircle_stieltjes(z), tol)) return *fresh;
  if (auto poly = polynomial_fallback(h, r, z, tol)) return *poly;
  throw Error(ErrorCode::NonConvergence,
              "Stieltjes fixed point did not reach residual " + std::to_string(tol));
}

std::complex<double> stieltjes_derivative(const DiscreteSpectrum& h, const RegimeParams& r,
                                          std::complex<double> s) {
  const cplx fs = -1.0 / (s * s) + kernel(h, r, s) + s * kernel_prime(h, r, s);
  return -1.0 / fs;
}

std::vector<std::optional<double>> lsd_density(const DiscreteSpectrum& h, const RegimeParams& r,
                                               std::span<const double> grid, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "density eps must be positive");
  std::vector<std::optional<double>> out;
  out.reserve(grid.size());
  std::optional<cplx> previous;
  for (double x : grid) {
    StieltjesOptions opts;
    opts.initial = previous;
    try {
      const cplx s = stieltjes_solve(h, r, cplx(x, eps), opts);
      previous = s;
      out.emplace_back(std::max(0.0, s.imag() / std::numbers::pi));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonConvergence) throw;
      previous.reset();
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace spikelab
