#include "spikelab/spikes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spikelab/errors.hpp"

namespace spikelab {

SpikeReport classify_spikes(const std::vector<double>& alphas, const std::vector<int>& multiplicities,
                            const DiscreteSpectrum& h, const RegimeParams& r) {
  if (alphas.size() != multiplicities.size())
    throw Error(ErrorCode::DimensionMismatch, "alphas and multiplicities differ in length");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (alphas[i] > alphas[i - 1]) throw Error(ErrorCode::InvalidArgument, "alphas must be descending");
  for (int m : multiplicities)
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "multiplicities must be positive");

  SpikeReport rep;
  rep.edges = support_edge(h, r);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    SpikeCluster c;
    c.alpha = alphas[i];
    c.multiplicity = multiplicities[i];
    // poles of phi all sit left of a_frak, so a spike on one (zero separation) is Close;
    // phi still raises PoleViolation if handed one
    if (c.alpha > rep.edges.a_frak) {
      c.kind = SpikeKind::Distant;
      c.lambda_limit = phi(h, r, c.alpha);
      c.phi_prime = phi_prime(h, r, c.alpha);
    } else {
      c.kind = SpikeKind::Close;
      c.lambda_limit = rep.edges.b_frak;
      c.phi_prime = 0.0;
    }
    rep.clusters.push_back(c);
  }
  return rep;
}

double invert_spike(double lambda, const DiscreteSpectrum& h, const RegimeParams& r) {
  if (r.ultrahigh()) {
    if (!(lambda > 2.0)) throw Error(ErrorCode::BelowEdge, "lambda must exceed the bulk edge 2");
    return (lambda + std::sqrt(lambda * lambda - 4.0)) / 2.0;
  }
  return phi_inverse(h, r, lambda);
}

void cluster_values(const std::vector<double>& values, double rel_tol, std::vector<double>& alphas,
                    std::vector<int>& multiplicities) {
  alphas.clear();
  multiplicities.clear();
  for (double v : values) {
    if (!alphas.empty() && std::abs(v - alphas.back()) <= rel_tol * std::max(1.0, std::abs(v))) {
      ++multiplicities.back();
    } else {
      alphas.push_back(v);
      multiplicities.push_back(1);
    }
  }
}

Eigen::MatrixXd mixing_projection(const std::vector<double>& k) {
  const auto tau = static_cast<Eigen::Index>(k.size());
  Eigen::VectorXd sk(tau);
  for (Eigen::Index i = 0; i < tau; ++i) sk(i) = std::sqrt(k[static_cast<std::size_t>(i)]);
  return Eigen::MatrixXd::Identity(tau, tau) - sk * sk.transpose();
}

ProjectionData projection_data(const PopulationModel& model, int n, double alpha, RegimeMode mode) {
  model.validate();
  ProjectionData pd;
  pd.tau = model.tau();
  pd.alpha = alpha;
  pd.k = realized_fractions(model, n);
  const RegimeParams r = proxy_regime(model, n);
  pd.scale = std::sqrt(r.c * r.b);
  pd.N = mixing_projection(pd.k);

  Eigen::MatrixXd U = model.mean_matrix();
  for (int i = 0; i < pd.tau; ++i) U.col(i) *= std::sqrt(pd.k[static_cast<std::size_t>(i)]);
  pd.UtU = U.transpose() * U;
  const auto t = static_cast<std::size_t>(pd.tau);

  if (mode == RegimeMode::Ultrahigh) {
    if (alpha == 0.0) throw Error(ErrorCode::SingularQ, "alpha must be nonzero");
    pd.V = -pd.UtU / (pd.scale * alpha);
    pd.Vprime = pd.UtU / (pd.scale * alpha * alpha);
    pd.theta = Eigen::MatrixXd::Zero(pd.tau, pd.tau);
    pd.h_.assign(t * t * t, 0.0);
    pd.rho_.assign(t * t * t * t, 0.0);
    return pd;
  }

  Eigen::MatrixXd W = model.sigma0.solve_shifted(pd.scale * alpha, U);  // Q^{-1} U
  pd.V = U.transpose() * W;
  pd.V = 0.5 * (pd.V + pd.V.transpose()).eval();
  pd.Vprime = pd.scale * (W.transpose() * W);
  MomentTensors mt = moment_tensors(shifted_mean_projection(model, alpha, pd.scale), pd.k);
  pd.theta = mt.theta.real();
  pd.h_.resize(mt.h_.size());
  pd.rho_.resize(mt.rho_.size());
  for (std::size_t i = 0; i < mt.h_.size(); ++i) pd.h_[i] = mt.h_[i].real();
  for (std::size_t i = 0; i < mt.rho_.size(); ++i) pd.rho_[i] = mt.rho_[i].real();
  return pd;
}

// ------------------------------------------------------------------- W law

double WCovariance::operator()(int i, int j, int l, int t) const {
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  auto e = [&](int a, int b) { return d(a, b) + theta(a, b); };
  const double rho = rho_.empty() ? 0.0 : rho_[static_cast<std::size_t>(((i * tau + j) * tau + l) * tau + t)];
  return e(i, l) * e(j, t) + e(i, t) * e(j, l) - phi_prime * (d(i, l) * d(j, t) + d(i, t) * d(j, l)) +
         phi_prime * (v4 - 3.0) * rho;
}

Eigen::MatrixXd WCovariance::matrix() const {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < tau; ++i)
    for (int j = i; j < tau; ++j) pairs.emplace_back(i, j);
  const auto np = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd out(np, np);
  for (Eigen::Index a = 0; a < np; ++a)
    for (Eigen::Index b = 0; b < np; ++b) {
      const auto& pa = pairs[static_cast<std::size_t>(a)];
      const auto& pb = pairs[static_cast<std::size_t>(b)];
      out(a, b) = (*this)(pa.first, pa.second, pb.first, pb.second);
    }
  return out;
}

WCovariance w_covariance(const ProjectionData& pd, double phi_prime, double v4) {
  WCovariance w;
  w.tau = pd.tau;
  w.phi_prime = phi_prime;
  w.v4 = v4;
  w.theta = pd.theta;
  w.rho_ = pd.rho_;
  return w;
}

// ----------------------------------------------------------------- clusters

ClusterGeometry cluster_geometry(const ProjectionData& pd, int multiplicity) {
  Eigen::MatrixXd nvn = pd.N * pd.V * pd.N;
  nvn = 0.5 * (nvn + nvn.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nvn);
  std::vector<Eigen::Index> idx;
  ClusterGeometry g;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) + 1.0) <= 0.05) {
      idx.push_back(i);
      g.nvn_eigs.push_back(es.eigenvalues()(i));
    }
  if (static_cast<int>(idx.size()) != multiplicity)
    throw Error(ErrorCode::ClusterMismatch, "N V N has " + std::to_string(idx.size()) +
                                                " eigenvalues near -1, expected " + std::to_string(multiplicity));
  g.Qk.resize(pd.tau, multiplicity);
  for (int c = 0; c < multiplicity; ++c) g.Qk.col(c) = es.eigenvectors().col(idx[static_cast<std::size_t>(c)]);
  Eigen::MatrixXd inner = g.Qk.transpose() * pd.N * pd.Vprime * pd.N * g.Qk;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(inner);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12)
    throw Error(ErrorCode::ClusterMismatch, "Q^T N V' N Q is singular");
  g.G = lu.inverse();
  g.G = 0.5 * (g.G + g.G.transpose()).eval();
  return g;
}

Eigen::MatrixXd cluster_limit_sampler(const ProjectionData& pd, const ClusterSpec& spec, double v4,
                                      std::uint64_t seed, int draws) {
  if (draws < 1) throw Error(ErrorCode::InvalidArgument, "draws must be positive");
  const ClusterGeometry g = cluster_geometry(pd, spec.multiplicity);
  const WCovariance wc = w_covariance(pd, spec.phi_prime, v4);
  Eigen::MatrixXd cov = wc.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ces(cov);
  Eigen::VectorXd sd = ces.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = ces.eigenvectors() * sd.asDiagonal();

  // similarity transform so the limit matrix is symmetric when G is positive definite
  Eigen::LLT<Eigen::MatrixXd> gl(g.G);
  const bool spd = gl.info() == Eigen::Success;
  Eigen::MatrixXd L = spd ? Eigen::MatrixXd(gl.matrixL()) : Eigen::MatrixXd();
  const Eigen::MatrixXd nq = pd.N * g.Qk;
  const double amp = -std::sqrt(std::max(0.0, spec.phi_prime));

  std::mt19937_64 eng(stream_key(seed, 0, 0xC1u, 0));
  std::normal_distribution<double> nd;
  const int m = spec.multiplicity;
  Eigen::MatrixXd out(draws, m);
  Eigen::VectorXd zeta(cov.rows());
  Eigen::MatrixXd W(pd.tau, pd.tau);
  for (int d = 0; d < draws; ++d) {
    for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta(i) = nd(eng);
    Eigen::VectorXd w = root * zeta;
    Eigen::Index pos = 0;
    for (int i = 0; i < pd.tau; ++i)
      for (int j = i; j < pd.tau; ++j) W(i, j) = W(j, i) = w(pos++);
    Eigen::MatrixXd s = amp * (nq.transpose() * W * nq);
    Eigen::VectorXd ev;
    if (spd) {
      Eigen::MatrixXd sym = L.transpose() * s * L;
      ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly)
               .eigenvalues();
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> es(s * g.G, false);
      ev = es.eigenvalues().real();
      std::sort(ev.data(), ev.data() + ev.size());
    }
    out.row(d) = ev.transpose();
  }
  return out;
}

double cluster_trace_variance(const ProjectionData& pd, const ClusterSpec& spec, double v4) {
  const ClusterGeometry g = cluster_geometry(pd, spec.multiplicity);
  const WCovariance wc = w_covariance(pd, spec.phi_prime, v4);
  // trace = -sqrt(phi') sum_ij M_ij W_ij with M = N Q G Q^T N
  const Eigen::MatrixXd M = pd.N * g.Qk * g.G * g.Qk.transpose() * pd.N;
  double var = 0.0;
  for (int i = 0; i < pd.tau; ++i)
    for (int j = 0; j < pd.tau; ++j)
      for (int l = 0; l < pd.tau; ++l)
        for (int t = 0; t < pd.tau; ++t) var += M(i, j) * M(l, t) * wc(i, j, l, t);
  return spec.phi_prime * var;
}

OmegaEta two_sample_omega_eta(const ProjectionData& pd) {
  if (pd.tau != 2) throw Error(ErrorCode::InvalidArgument, "two_sample_omega_eta needs tau = 2");
  const double k1 = pd.k[0], k2 = pd.k[1], r = std::sqrt(k1 * k2);
  OmegaEta oe;
  oe.omega = k2 * pd.theta(0, 0) + k1 * pd.theta(1, 1) - 2.0 * r * pd.theta(0, 1);
  oe.eta = k2 * k2 * pd.rho(0, 0, 0, 0) + k1 * k1 * pd.rho(1, 1, 1, 1) + 6.0 * k1 * k2 * pd.rho(0, 1, 0, 1) -
           4.0 * k2 * r * pd.rho(0, 0, 0, 1) - 4.0 * k1 * r * pd.rho(0, 1, 1, 1);
  return oe;
}

double two_sample_variance(double omega, double eta, double alpha1, double phi_prime1, double v4) {
  const double w2 = (1.0 + omega) * (1.0 + omega);
  return 2.0 * phi_prime1 * alpha1 * alpha1 *
         (1.0 - phi_prime1 / w2 + phi_prime1 * (v4 - 3.0) * eta / (2.0 * w2));
}

}  // namespace spikelab
