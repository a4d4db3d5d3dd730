#include "spikelab/datagen.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "spikelab/errors.hpp"

namespace spikelab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

// ---------------------------------------------------------------- NoiseLaw

NoiseLaw NoiseLaw::bernoulli_t(double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidArgument, "bernoulli_t: t must lie in (0, 1)");
  return {NoiseKind::BernoulliT, t};
}

double NoiseLaw::v3() const {
  switch (kind) {
    case NoiseKind::Gaussian:
    case NoiseKind::Rademacher:
      return 0.0;
    case NoiseKind::ExpCentered:
      return 2.0;
    case NoiseKind::BernoulliT:
      return (1.0 - 2.0 * t) / std::sqrt(t * (1.0 - t));
  }
  return 0.0;
}

double NoiseLaw::v4() const {
  switch (kind) {
    case NoiseKind::Gaussian:
      return 3.0;
    case NoiseKind::Rademacher:
      return 1.0;
    case NoiseKind::ExpCentered:
      return 9.0;
    case NoiseKind::BernoulliT: {
      const double q = t * (1.0 - t);
      return (1.0 - 3.0 * q) / q;
    }
  }
  return 3.0;
}

std::string NoiseLaw::name() const {
  switch (kind) {
    case NoiseKind::Gaussian:
      return "gaussian";
    case NoiseKind::Rademacher:
      return "rademacher";
    case NoiseKind::ExpCentered:
      return "exp_centered";
    case NoiseKind::BernoulliT:
      return "bernoulli_t";
  }
  return "gaussian";
}

NoiseLaw NoiseLaw::from_name(const std::string& name, double t) {
  if (name == "gaussian") return gaussian();
  if (name == "rademacher") return rademacher();
  if (name == "exp_centered") return exp_centered();
  if (name == "bernoulli_t") return bernoulli_t(t);
  throw Error(ErrorCode::InvalidArgument, "unknown noise law: " + name);
}

// ---------------------------------------------------------- CovarianceRoot

CovarianceRoot CovarianceRoot::diagonal(Eigen::VectorXd sigma0_diag) {
  if (sigma0_diag.size() == 0) throw Error(ErrorCode::EmptyInput, "diagonal covariance: empty");
  if ((sigma0_diag.array() <= 0.0).any() || !sigma0_diag.allFinite())
    throw Error(ErrorCode::NonPositiveEigenvalue, "diagonal covariance: entries must be positive");
  CovarianceRoot r;
  r.kind_ = Kind::Diagonal;
  r.p_ = sigma0_diag.size();
  r.diag_ = std::move(sigma0_diag);
  r.eigs_.assign(r.diag_.data(), r.diag_.data() + r.p_);
  std::sort(r.eigs_.begin(), r.eigs_.end());
  return r;
}

CovarianceRoot CovarianceRoot::identity(Eigen::Index p) {
  return diagonal(Eigen::VectorXd::Ones(p));
}

CovarianceRoot CovarianceRoot::toeplitz_tridiagonal_root(Eigen::Index p, double diag, double off) {
  if (p <= 0) throw Error(ErrorCode::EmptyInput, "tridiagonal root: p must be positive");
  CovarianceRoot r;
  r.kind_ = Kind::ToeplitzTridiagonal;
  r.p_ = p;
  r.tdiag_ = diag;
  r.toff_ = off;
  // eigenvalues of the root are diag + 2 off cos(k pi / (p + 1))
  r.eigs_.resize(static_cast<std::size_t>(p));
  for (Eigen::Index k = 1; k <= p; ++k) {
    const double ev = diag + 2.0 * off * std::cos(static_cast<double>(k) * std::numbers::pi /
                                                  static_cast<double>(p + 1));
    if (std::abs(ev) < 1e-12)
      throw Error(ErrorCode::NonPositiveEigenvalue, "tridiagonal root is singular");
    r.eigs_[static_cast<std::size_t>(k - 1)] = ev * ev;
  }
  std::sort(r.eigs_.begin(), r.eigs_.end());
  return r;
}

CovarianceRoot CovarianceRoot::dense_root(Eigen::MatrixXd root) {
  if (root.size() == 0) throw Error(ErrorCode::EmptyInput, "dense root: empty");
  if (root.rows() != root.cols()) throw Error(ErrorCode::DimensionMismatch, "dense root: not square");
  if ((root - root.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + root.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidArgument, "dense root: not symmetric");
  CovarianceRoot r;
  r.kind_ = Kind::Dense;
  r.p_ = root.rows();
  r.dense_ = std::move(root);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.dense_, Eigen::EigenvaluesOnly);
  r.eigs_.resize(static_cast<std::size_t>(r.p_));
  for (Eigen::Index i = 0; i < r.p_; ++i) {
    const double ev = es.eigenvalues()(i);
    if (std::abs(ev) < 1e-12) throw Error(ErrorCode::NonPositiveEigenvalue, "dense root is singular");
    r.eigs_[static_cast<std::size_t>(i)] = ev * ev;
  }
  std::sort(r.eigs_.begin(), r.eigs_.end());
  return r;
}

const Eigen::VectorXd& CovarianceRoot::sigma0_diag() const {
  if (kind_ != Kind::Diagonal) throw Error(ErrorCode::InvalidArgument, "covariance is not diagonal");
  return diag_;
}

void CovarianceRoot::apply_root(Eigen::Ref<Eigen::MatrixXd> z) const {
  if (z.rows() != p_) throw Error(ErrorCode::DimensionMismatch, "apply_root: row count");
  switch (kind_) {
    case Kind::Diagonal:
      z = diag_.array().sqrt().matrix().asDiagonal() * z;
      break;
    case Kind::ToeplitzTridiagonal: {
      Eigen::VectorXd prev(p_);
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        prev = z.col(j);
        z.col(j) *= tdiag_;
        if (p_ > 1) {
          z.col(j).head(p_ - 1) += toff_ * prev.tail(p_ - 1);
          z.col(j).tail(p_ - 1) += toff_ * prev.head(p_ - 1);
        }
      }
      break;
    }
    case Kind::Dense:
      z = (dense_ * z).eval();
      break;
  }
}

Eigen::MatrixXd CovarianceRoot::root_times(const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd out = v;
  apply_root(out);
  return out;
}

Eigen::MatrixXd CovarianceRoot::sigma_times(const Eigen::MatrixXd& v) const {
  if (kind_ == Kind::Diagonal) {
    if (v.rows() != p_) throw Error(ErrorCode::DimensionMismatch, "sigma_times: row count");
    return diag_.asDiagonal() * v;
  }
  Eigen::MatrixXd out = v;
  apply_root(out);
  apply_root(out);
  return out;
}

Eigen::MatrixXd CovarianceRoot::solve_shifted(double shift, const Eigen::MatrixXd& v) const {
  if (v.rows() != p_) throw Error(ErrorCode::DimensionMismatch, "solve_shifted: row count");
  // relative distance of the shift to the spectrum
  double gap = std::numeric_limits<double>::infinity();
  for (double e : eigs_) gap = std::min(gap, std::abs(e - shift));
  if (gap <= 1e-12 * std::max(1.0, std::abs(shift)))
    throw Error(ErrorCode::SingularQ, "shift coincides with an eigenvalue of Sigma_0");

  switch (kind_) {
    case Kind::Diagonal:
      return (diag_.array() - shift).inverse().matrix().asDiagonal() * v;
    case Kind::Dense: {
      Eigen::MatrixXd m = dense_ * dense_;
      m.diagonal().array() -= shift;
      return m.partialPivLu().solve(v);
    }
    case Kind::ToeplitzTridiagonal: {
      // R^2 - shift I is pentadiagonal
      using Trip = Eigen::Triplet<double>;
      std::vector<Trip> trips;
      trips.reserve(static_cast<std::size_t>(5 * p_));
      const double d = tdiag_, e = toff_;
      for (Eigen::Index q = 0; q < p_; ++q) {
        const int nb = (q > 0 ? 1 : 0) + (q + 1 < p_ ? 1 : 0);
        trips.emplace_back(q, q, d * d + e * e * nb - shift);
        if (q + 1 < p_) {
          trips.emplace_back(q, q + 1, 2.0 * d * e);
          trips.emplace_back(q + 1, q, 2.0 * d * e);
        }
        if (q + 2 < p_) {
          trips.emplace_back(q, q + 2, e * e);
          trips.emplace_back(q + 2, q, e * e);
        }
      }
      Eigen::SparseMatrix<double> m(p_, p_);
      m.setFromTriplets(trips.begin(), trips.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(m);
      if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularQ, "shifted covariance is singular");
      Eigen::MatrixXd out = lu.solve(v);
      if (lu.info() != Eigen::Success || !out.allFinite())
        throw Error(ErrorCode::SingularQ, "shifted covariance solve failed");
      return out;
    }
  }
  return v;
}

double CovarianceRoot::a() const {
  return std::accumulate(eigs_.begin(), eigs_.end(), 0.0) / static_cast<double>(p_);
}

double CovarianceRoot::b() const {
  double s = 0.0;
  for (double e : eigs_) s += e * e;
  return s / static_cast<double>(p_);
}

// --------------------------------------------------------- PopulationModel

void PopulationModel::validate() const {
  if (means.empty()) throw Error(ErrorCode::EmptyInput, "model has no groups");
  if (fractions.size() != means.size())
    throw Error(ErrorCode::DimensionMismatch, "fractions and means differ in length");
  double sum = 0.0;
  for (double k : fractions) {
    if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "group fractions must be positive");
    sum += k;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "group fractions must sum to one");
  for (const auto& m : means)
    if (m.size() != p()) throw Error(ErrorCode::DimensionMismatch, "mean vector length differs from p");
}

Eigen::MatrixXd PopulationModel::mean_matrix() const {
  Eigen::MatrixXd m(p(), tau());
  for (int i = 0; i < tau(); ++i) m.col(i) = means[static_cast<std::size_t>(i)];
  return m;
}

// -------------------------------------------------------------- generation

std::vector<int> group_sizes(const std::vector<double>& fractions, int n) {
  if (fractions.empty()) throw Error(ErrorCode::EmptyInput, "group_sizes: no groups");
  std::vector<int> sizes(fractions.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (std::lround(n * fractions[i]) < 2)
      throw Error(ErrorCode::GroupTooSmall, "group " + std::to_string(i + 1) + " would have fewer than 2 samples");
    const double exact = n * fractions[i];
    sizes[i] = static_cast<int>(std::floor(exact + 1e-9));
    assigned += sizes[i];
    rem.emplace_back(exact - sizes[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; assigned < n && r < rem.size(); ++r, ++assigned) ++sizes[rem[r].second];
  return sizes;
}

std::vector<int> contiguous_labels(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (std::size_t g = 0; g < sizes.size(); ++g) labels.insert(labels.end(), static_cast<std::size_t>(sizes[g]), static_cast<int>(g) + 1);
  return labels;
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate, std::uint64_t group,
                         std::uint64_t column) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(replicate + 0x1000));
  h = splitmix64(h ^ splitmix64(group + 0x2000));
  h = splitmix64(h ^ splitmix64(column + 0x3000));
  return h;
}

void draw_noise(const NoiseLaw& law, std::uint64_t key, Eigen::Ref<Eigen::VectorXd> out) {
  std::mt19937_64 eng(key);
  const Eigen::Index p = out.size();
  switch (law.kind) {
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> nd(0.0, 1.0);
      for (Eigen::Index q = 0; q < p; ++q) out[q] = nd(eng);
      break;
    }
    case NoiseKind::Rademacher: {
      std::uint64_t bits = 0;
      for (Eigen::Index q = 0; q < p; ++q) {
        if ((q & 63) == 0) bits = eng();
        out[q] = (bits & 1ULL) ? 1.0 : -1.0;
        bits >>= 1;
      }
      break;
    }
    case NoiseKind::ExpCentered: {
      std::exponential_distribution<double> ed(1.0);
      for (Eigen::Index q = 0; q < p; ++q) out[q] = ed(eng) - 1.0;
      break;
    }
    case NoiseKind::BernoulliT: {
      const double t = law.t, sd = std::sqrt(t * (1.0 - t));
      const double hi = (1.0 - t) / sd, lo = -t / sd;
      std::uniform_real_distribution<double> ud(0.0, 1.0);
      for (Eigen::Index q = 0; q < p; ++q) out[q] = ud(eng) < t ? hi : lo;
      break;
    }
  }
}

DataMatrix generate(const PopulationModel& model, int n, std::uint64_t seed, std::uint64_t replicate) {
  model.validate();
  DataMatrix d;
  d.n_per_group = group_sizes(model.fractions, n);
  d.labels = contiguous_labels(d.n_per_group);
  const Eigen::Index p = model.p();
  d.X.resize(p, n);
  for (int j = 0; j < n; ++j) {
    const int g = d.labels[static_cast<std::size_t>(j)] - 1;
    draw_noise(model.noise, stream_key(seed, replicate, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(j)),
               d.X.col(j));
  }
  model.sigma0.apply_root(d.X);
  for (int j = 0; j < n; ++j) d.X.col(j) += model.means[static_cast<std::size_t>(d.labels[static_cast<std::size_t>(j)] - 1)];
  return d;
}

// ------------------------------------------------------------------ spikes

namespace {

// eigenvalues of N (U^T U) N, U = M diag(sqrt k), N = I - sqrt k sqrt k^T.
// Returns (tau - 1) largest, descending, and the reduced matrix.
Eigen::MatrixXd centered_mean_gram(const PopulationModel& model, const std::vector<double>& k) {
  const int tau = model.tau();
  Eigen::VectorXd sk(tau);
  for (int i = 0; i < tau; ++i) sk[i] = std::sqrt(k[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd m = model.mean_matrix();
  Eigen::MatrixXd g = sk.asDiagonal() * (m.transpose() * m) * sk.asDiagonal();
  Eigen::MatrixXd nmat = Eigen::MatrixXd::Identity(tau, tau) - sk * sk.transpose();
  return nmat * g * nmat;
}

// Orthonormal basis for the range of a block, against an existing basis.
Eigen::MatrixXd orthonormalize_against(const Eigen::MatrixXd& basis, Eigen::MatrixXd block, double tol) {
  std::vector<Eigen::VectorXd> kept;
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    Eigen::VectorXd v = block.col(j);
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
      for (const auto& u : kept) v -= u * u.dot(v);
    }
    const double nv = v.norm();
    if (nv > tol * norm0) kept.push_back(v / nv);
  }
  Eigen::MatrixXd out(block.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = kept[j];
  return out;
}

}  // namespace

std::vector<double> sigma_mu_spikes(const PopulationModel& model) {
  model.validate();
  const int tau = model.tau();
  if (tau < 2) throw Error(ErrorCode::SingleGroup, "sigma_mu_spikes needs at least two groups");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered_mean_gram(model, model.fractions), Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (int i = tau - 1; i >= 1; --i) out.push_back(std::max(0.0, es.eigenvalues()(i)));
  return out;
}

std::vector<double> realized_fractions(const PopulationModel& model, int n) {
  auto sizes = group_sizes(model.fractions, n);
  std::vector<double> k;
  for (int s : sizes) k.push_back(static_cast<double>(s) / n);
  return k;
}

std::vector<double> sigma_x_spikes(const PopulationModel& model, int n) {
  model.validate();
  const int tau = model.tau();
  if (tau < 2) throw Error(ErrorCode::SingleGroup, "sigma_x_spikes needs at least two groups");
  const std::vector<double> k = realized_fractions(model, n);
  const Eigen::Index p = model.p();

  // range of U N, then block Krylov under Sigma_0 until invariant
  Eigen::VectorXd sk(tau);
  for (int i = 0; i < tau; ++i) sk[i] = std::sqrt(k[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd nmat = Eigen::MatrixXd::Identity(tau, tau) - sk * sk.transpose();
  Eigen::MatrixXd un = model.mean_matrix() * sk.asDiagonal() * nmat;
  const double tol = 1e-10;
  Eigen::MatrixXd basis = orthonormalize_against(Eigen::MatrixXd(p, 0), un, tol);
  Eigen::MatrixXd block = basis;
  const Eigen::Index cap = std::min<Eigen::Index>(p, 400);
  while (block.cols() > 0 && basis.cols() < cap) {
    Eigen::MatrixXd next = orthonormalize_against(basis, model.sigma0.sigma_times(block), tol);
    if (next.cols() == 0) break;
    Eigen::MatrixXd grown(p, basis.cols() + next.cols());
    grown << basis, next;
    basis = std::move(grown);
    block = std::move(next);
  }

  std::vector<double> cand;
  const Eigen::Index r = basis.cols();
  std::vector<double> inner_sigma0;
  if (r > 0) {
    Eigen::MatrixXd sb = model.sigma0.sigma_times(basis);
    Eigen::MatrixXd vu = basis.transpose() * un;
    Eigen::MatrixXd t = basis.transpose() * sb + vu * vu.transpose();
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < r; ++i) cand.push_back(es.eigenvalues()(i));
    Eigen::MatrixXd t0 = basis.transpose() * sb;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(0.5 * (t0 + t0.transpose()), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < r; ++i) inner_sigma0.push_back(es0.eigenvalues()(i));
  }
  // complement eigenvalues: spectrum of Sigma_0 minus the part carried by the basis
  const auto& eigs = model.sigma0.eigenvalues();
  std::vector<double> top(eigs.rbegin(), eigs.rbegin() + std::min<std::size_t>(eigs.size(), static_cast<std::size_t>(r + tau)));
  std::sort(inner_sigma0.begin(), inner_sigma0.end(), std::greater<>());
  std::vector<bool> used(top.size(), false);
  for (double v : inner_sigma0) {
    std::size_t best = top.size();
    double bd = 1e-8 * std::max(1.0, std::abs(v));
    for (std::size_t i = 0; i < top.size(); ++i) {
      if (used[i]) continue;
      const double dd = std::abs(top[i] - v);
      if (dd <= bd) {
        bd = dd;
        best = i;
      }
    }
    if (best < top.size()) used[best] = true;
  }
  for (std::size_t i = 0; i < top.size(); ++i)
    if (!used[i]) cand.push_back(top[i]);

  std::sort(cand.begin(), cand.end(), std::greater<>());
  const double cn = static_cast<double>(p) / n;
  const double scale = std::sqrt(cn * model.sigma0.b());
  std::vector<double> out;
  for (int i = 0; i < tau - 1 && i < static_cast<int>(cand.size()); ++i) out.push_back(cand[static_cast<std::size_t>(i)] / scale);
  return out;
}

// ----------------------------------------------------------------- presets

namespace presets {

namespace {

CovarianceRoot two_level_diag(Eigen::Index p) {
  if (p % 2 != 0) throw Error(ErrorCode::InvalidArgument, "p must be even for the two-level covariance");
  Eigen::VectorXd d(p);
  d.head(p / 2).setConstant(1.0);
  d.tail(p / 2).setConstant(2.0);
  return CovarianceRoot::diagonal(std::move(d));
}

}  // namespace

PopulationModel single_population(Eigen::Index p, NoiseLaw noise) {
  PopulationModel m;
  m.sigma0 = CovarianceRoot::identity(p);
  m.means = {Eigen::VectorXd::Zero(p)};
  m.fractions = {1.0};
  m.noise = noise;
  return m;
}

PopulationModel four_group_clt(int n, Eigen::Index p, NoiseLaw noise) {
  if (p < 3) throw Error(ErrorCode::InvalidArgument, "p too small");
  PopulationModel m;
  m.sigma0 = two_level_diag(p);
  const double cn = static_cast<double>(p) / n;
  const double s = std::pow(cn * m.sigma0.b(), 0.25);
  const double r2 = std::sqrt(2.0);
  m.means.assign(4, Eigen::VectorXd::Zero(p));
  m.means[1](0) = 4.0 * s;
  m.means[2](0) = 2.0 * s;
  m.means[2](1) = 3.0 * r2 * s;
  m.means[3](0) = 2.0 * s;
  m.means[3](1) = r2 * s;
  m.means[3](2) = -4.0 * s;
  m.fractions = {0.25, 0.25, 0.25, 0.25};
  m.noise = noise;
  return m;
}

PopulationModel three_group_phase(Eigen::Index p, double mu3_scale) {
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "p too small");
  PopulationModel m;
  m.sigma0 = CovarianceRoot::identity(p);
  m.means.assign(3, Eigen::VectorXd::Zero(p));
  m.means[1](0) = -20.0;
  m.means[2](1) = mu3_scale;
  m.fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return m;
}

PopulationModel two_group_constant_shift(int n, Eigen::Index p, double k1, double alpha) {
  if (!(k1 > 0.0 && k1 < 1.0)) throw Error(ErrorCode::InvalidArgument, "k1 must lie in (0, 1)");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  PopulationModel m;
  m.sigma0 = two_level_diag(p);
  const double pd = static_cast<double>(p);
  const double scale = std::sqrt(n / (pd * m.sigma0.b()));
  const double w = std::sqrt(alpha / (scale * k1 * (1.0 - k1) * pd));
  m.means = {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Constant(p, w)};
  m.fractions = {k1, 1.0 - k1};
  return m;
}

PopulationModel four_group_tridiagonal(int n, Eigen::Index p, bool strong, NoiseLaw noise) {
  if (p < 4) throw Error(ErrorCode::InvalidArgument, "p too small");
  PopulationModel m;
  m.sigma0 = CovarianceRoot::toeplitz_tridiagonal_root(p, 1.0, 0.5);
  const double s = std::pow(static_cast<double>(p) / n, 0.25);
  m.means.assign(4, Eigen::VectorXd::Zero(p));
  for (auto& mu : m.means) mu(3) = 5.0;
  if (strong) {
    const double a = std::sqrt(2.8), b = std::sqrt(8.4);
    m.means[1](0) = 4.0 * a;
    m.means[2](0) = 2.0 * a;
    m.means[2](1) = 2.0 * b;
    m.means[3](0) = 2.0 * a;
    m.means[3](1) = 2.0 / 3.0 * b;
    m.means[3](2) = -8.0 / 3.0 * std::sqrt(6.0);
  } else {
    const double a = std::sqrt(1.8);
    m.means[1](0) = 4.0 * a;
    m.means[2](0) = 2.0 * a;
    m.means[2](1) = 2.0 * std::sqrt(5.4);
    m.means[3](0) = 2.0 * a;
    m.means[3](1) = 2.0 * std::sqrt(0.6);
    m.means[3](2) = -4.0 * std::sqrt(1.2);
  }
  for (auto& mu : m.means) mu *= s;
  m.fractions = {0.25, 0.25, 0.25, 0.25};
  m.noise = noise;
  return m;
}

PopulationModel two_group_identity(int n, Eigen::Index p, NoiseLaw noise) {
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "p too small");
  PopulationModel m;
  m.sigma0 = CovarianceRoot::identity(p);
  const double s = std::pow(static_cast<double>(p) / n, 0.25);
  m.means.assign(2, Eigen::VectorXd::Zero(p));
  m.means[0](0) = s;
  m.means[1](1) = s;
  m.fractions = {0.5, 0.5};
  m.noise = noise;
  return m;
}

}  // namespace presets

}  // namespace spikelab
