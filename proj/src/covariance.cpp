#include "spikelab/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "spikelab/errors.hpp"

namespace spikelab {

Eigen::MatrixXd centering_projection(int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "centering_projection needs n >= 2");
  Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(n, n, -1.0 / n);
  phi.diagonal().array() += 1.0;
  return phi;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

Eigen::MatrixXd double_center(const Eigen::MatrixXd& G) {
  if (G.rows() != G.cols()) throw Error(ErrorCode::DimensionMismatch, "double_center: not square");
  Eigen::VectorXd rm = G.rowwise().mean();
  const double all = rm.mean();
  Eigen::MatrixXd out = G;
  out.colwise() -= rm;
  out.rowwise() -= rm.transpose();
  out.array() += all;
  return out;
}

ABEstimate estimate_ab_centered(const Eigen::MatrixXd& gc, Eigen::Index p) {
  const double n = static_cast<double>(gc.rows());
  if (gc.rows() < 3) throw Error(ErrorCode::InvalidArgument, "estimate_ab needs n >= 3");
  const double pd = static_cast<double>(p);
  const double tr = gc.trace();
  const double fro2 = gc.squaredNorm();
  ABEstimate e;
  e.a_hat = tr / ((n - 1.0) * pd);
  e.b_hat = fro2 / ((n - 1.0) * (n - 1.0) * pd) - tr * tr / ((n - 1.0) * (n - 1.0) * (n - 1.0) * pd);
  if (!(e.b_hat > 0.0)) throw Error(ErrorCode::NonPositiveBhat, "b_hat is not positive");
  return e;
}

ABEstimate estimate_ab(const Eigen::MatrixXd& X) {
  if (X.cols() < 3) throw Error(ErrorCode::InvalidArgument, "estimate_ab needs n >= 3");
  return estimate_ab_centered(double_center(gram(X)), X.rows());
}

Eigen::MatrixXd renormalized_from_centered(const Eigen::MatrixXd& gc, Eigen::Index p, double a, double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "renormalized_gram needs b > 0");
  const Eigen::Index n = gc.rows();
  const double pd = static_cast<double>(p);
  const double scale = std::sqrt(pd / (static_cast<double>(n) * b));
  Eigen::MatrixXd out = gc / pd - a * centering_projection(static_cast<int>(n));
  return scale * out;
}

Eigen::MatrixXd renormalized_gram(const Eigen::MatrixXd& X, double a, double b) {
  if (X.cols() < 2 || X.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "renormalized_gram: empty data");
  return renormalized_from_centered(double_center(gram(X)), X.rows(), a, b);
}

std::vector<double> descending_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::reverse(out.begin(), out.end());
  return out;
}

SpectralSummary spectral_summary_centered(const Eigen::MatrixXd& gc, Eigen::Index p) {
  SpectralSummary s;
  const auto ab = estimate_ab_centered(gc, p);
  s.a_hat = ab.a_hat;
  s.b_hat = ab.b_hat;
  s.n = static_cast<int>(gc.rows());
  s.p = p;
  s.c_n = static_cast<double>(p) / s.n;
  s.eigenvalues = descending_eigenvalues(renormalized_from_centered(gc, p, ab.a_hat, ab.b_hat));
  return s;
}

SpectralSummary spectral_summary(const Eigen::MatrixXd& X) {
  if (X.cols() < 3) throw Error(ErrorCode::InvalidArgument, "spectral_summary needs n >= 3");
  return spectral_summary_centered(double_center(gram(X)), X.rows());
}

// ------------------------------------------------------------ resolvent

GroupCenteredResolvent::GroupCenteredResolvent(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  const Eigen::Index n = X.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "labels length differs from column count");
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no samples");
  tau_ = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 1)
    throw Error(ErrorCode::InvalidArgument, "labels must be 1-based");
  sizes_.assign(static_cast<std::size_t>(tau_), 0);
  for (int g : labels) ++sizes_[static_cast<std::size_t>(g - 1)];
  for (int i = 0; i < tau_; ++i)
    if (sizes_[static_cast<std::size_t>(i)] < 2)
      throw Error(ErrorCode::GroupTooSmall, "group " + std::to_string(i + 1) + " has fewer than 2 members");

  means_ = Eigen::MatrixXd::Zero(X.rows(), tau_);
  for (Eigen::Index j = 0; j < n; ++j) means_.col(labels[static_cast<std::size_t>(j)] - 1) += X.col(j);
  for (int i = 0; i < tau_; ++i) means_.col(i) /= sizes_[static_cast<std::size_t>(i)];

  const double rn = 1.0 / std::sqrt(static_cast<double>(n));
  Y_.resize(X.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) Y_.col(j) = (X.col(j) - means_.col(labels[static_cast<std::size_t>(j)] - 1)) * rn;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(Y_));
  gram_eigs_ = es.eigenvalues();
  gram_vecs_ = es.eigenvectors();
}

Eigen::MatrixXcd GroupCenteredResolvent::apply(cplx zt, const Eigen::MatrixXcd& V) const {
  if (V.rows() != Y_.rows()) throw Error(ErrorCode::DimensionMismatch, "resolvent apply: row count");
  // (YY^T - zt)^{-1} = -(1/zt) [I + Y (zt - Y^T Y)^{-1} Y^T]
  Eigen::MatrixXcd yv = Y_.transpose().cast<cplx>() * V;
  Eigen::MatrixXcd inner = gram_vecs_.transpose().cast<cplx>() * yv;
  for (Eigen::Index r = 0; r < inner.rows(); ++r) inner.row(r) /= (zt - gram_eigs_(r));
  inner = gram_vecs_.cast<cplx>() * inner;
  return -(V + Y_.cast<cplx>() * inner) / zt;
}

Eigen::MatrixXcd GroupCenteredResolvent::bilinear(cplx zt, const Eigen::MatrixXd& P) const {
  if (P.rows() != Y_.rows()) throw Error(ErrorCode::DimensionMismatch, "resolvent bilinear: row count");
  Eigen::MatrixXd yp = gram_vecs_.transpose() * (Y_.transpose() * P);
  Eigen::MatrixXcd scaled = yp.cast<cplx>();
  for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) /= (zt - gram_eigs_(r));
  Eigen::MatrixXcd out = (P.transpose() * P).cast<cplx>() + yp.transpose().cast<cplx>() * scaled;
  return -out / zt;
}

// ----------------------------------------------------- projection tensors

Eigen::MatrixXcd shifted_mean_projection(const PopulationModel& model, cplx alpha, double scale) {
  model.validate();
  const Eigen::MatrixXd m = model.mean_matrix();
  const cplx shift = scale * alpha;
  if (model.sigma0.is_diagonal()) {
    const Eigen::VectorXd& d = model.sigma0.sigma0_diag();
    Eigen::VectorXcd f(d.size());
    for (Eigen::Index q = 0; q < d.size(); ++q) {
      const cplx den = d(q) - shift;
      if (std::abs(den) <= 1e-12 * std::max(1.0, std::abs(shift)))
        throw Error(ErrorCode::SingularQ, "Q(alpha) is singular");
      f(q) = std::sqrt(d(q)) / den;
    }
    return f.asDiagonal() * m.cast<cplx>();
  }
  if (std::abs(alpha.imag()) > 0.0)
    throw Error(ErrorCode::InvalidArgument, "complex alpha needs a diagonal covariance");
  Eigen::MatrixXd w = model.sigma0.solve_shifted(shift.real(), m);
  model.sigma0.apply_root(w);
  return w.cast<cplx>();
}

MomentTensors moment_tensors(const Eigen::MatrixXcd& Y, const std::vector<double>& k) {
  const int tau = static_cast<int>(Y.cols());
  if (static_cast<int>(k.size()) != tau) throw Error(ErrorCode::DimensionMismatch, "moment_tensors: fractions");
  MomentTensors mt;
  mt.tau = tau;
  std::vector<double> sk(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) sk[i] = std::sqrt(k[i]);
  mt.theta = Y.transpose() * Y;
  for (int i = 0; i < tau; ++i)
    for (int j = 0; j < tau; ++j) mt.theta(i, j) *= sk[i] * sk[j];
  mt.h_.assign(static_cast<std::size_t>(tau * tau * tau), 0.0);
  mt.rho_.assign(static_cast<std::size_t>(tau * tau * tau * tau), 0.0);
  Eigen::VectorXcd prod2(Y.rows()), prod3(Y.rows());
  for (int i = 0; i < tau; ++i)
    for (int j = 0; j < tau; ++j) {
      prod2 = Y.col(i).cwiseProduct(Y.col(j));
      for (int l = 0; l < tau; ++l) {
        prod3 = prod2.cwiseProduct(Y.col(l));
        mt.h_[static_cast<std::size_t>((i * tau + j) * tau + l)] = prod3.sum() * sk[i] * sk[j] * sk[l];
        for (int t = 0; t < tau; ++t)
          mt.rho_[static_cast<std::size_t>(((i * tau + j) * tau + l) * tau + t)] =
              prod3.cwiseProduct(Y.col(t)).sum() * sk[i] * sk[j] * sk[l] * sk[t];
      }
    }
  return mt;
}

RegimeParams proxy_regime(const PopulationModel& model, int n) {
  RegimeParams r;
  r.c = static_cast<double>(model.p()) / n;
  r.a = model.sigma0.a();
  r.b = model.sigma0.b();
  return r;
}

// ------------------------------------------------------------------ panels

namespace {

void check_z(const PopulationModel& model, const RegimeParams& r, cplx z) {
  if (z.imag() != 0.0) return;
  const auto edges = support_edge(model.sigma0.spectrum(), r);
  if (std::abs(z.real()) <= edges.b_frak + 0.05)
    throw Error(ErrorCode::PoleViolation, "real z too close to the limiting support");
}

// M^T (sqrt(cb) I + s Sigma_0)^{-1} M
Eigen::MatrixXcd mu_block(const PopulationModel& model, cplx s, double scb) {
  const Eigen::MatrixXd m = model.mean_matrix();
  if (model.sigma0.is_diagonal()) {
    const Eigen::VectorXd& d = model.sigma0.sigma0_diag();
    Eigen::VectorXcd f(d.size());
    for (Eigen::Index q = 0; q < d.size(); ++q) f(q) = 1.0 / (scb + s * d(q));
    return m.transpose().cast<cplx>() * f.asDiagonal() * m.cast<cplx>();
  }
  if (s.imag() != 0.0) throw Error(ErrorCode::InvalidArgument, "complex z needs a diagonal covariance");
  // (scb + s Sigma_0)^{-1} = (1/s) (Sigma_0 + scb/s)^{-1}
  Eigen::MatrixXd w = model.sigma0.solve_shifted(-scb / s.real(), m) / s.real();
  return (m.transpose() * w).cast<cplx>();
}

}  // namespace

Eigen::MatrixXcd SesquilinearPanel::scaled(int n) const {
  return std::sqrt(static_cast<double>(n)) * (forms - centering);
}

SesquilinearPanel sesquilinear_panel(const GroupCenteredResolvent& res, const PopulationModel& model, cplx z) {
  model.validate();
  const int tau = model.tau();
  if (res.groups() != tau) throw Error(ErrorCode::DimensionMismatch, "label groups differ from model groups");
  if (res.factor().rows() != model.p()) throw Error(ErrorCode::DimensionMismatch, "data rows differ from p");
  int n = 0;
  for (int s : res.sizes()) n += s;
  const RegimeParams r = proxy_regime(model, n);
  check_z(model, r, z);
  const double scb = std::sqrt(r.c * r.b);

  SesquilinearPanel panel;
  panel.z = z;
  panel.z_tilde = r.c * r.a + scb * z;

  Eigen::MatrixXd P(model.p(), 2 * tau);
  P.leftCols(tau) = res.group_means() - model.mean_matrix();
  P.rightCols(tau) = model.mean_matrix();
  panel.forms = res.bilinear(panel.z_tilde, P) * (panel.z_tilde / scb);

  std::vector<double> k;
  for (int s : res.sizes()) k.push_back(static_cast<double>(s) / n);
  const double rca = std::sqrt(r.c / r.b) * r.a;

  // c = infinity limits
  const cplx s_inf = semicircle_stieltjes(z);
  panel.limit = Eigen::MatrixXcd::Zero(2 * tau, 2 * tau);
  const Eigen::MatrixXd mm = model.mean_matrix().transpose() * model.mean_matrix();
  for (int i = 0; i < tau; ++i) panel.limit(i, i) = -(rca + z + 1.0 / s_inf) / k[static_cast<std::size_t>(i)];
  panel.limit.bottomRightCorner(tau, tau) = -(mm / scb).cast<cplx>();

  // finite proxy centering
  const cplx s0 = stieltjes_solve(model.sigma0.spectrum(), r, z);
  panel.centering = Eigen::MatrixXcd::Zero(2 * tau, 2 * tau);
  for (int i = 0; i < tau; ++i) panel.centering(i, i) = -(rca + z + 1.0 / s0) / k[static_cast<std::size_t>(i)];
  panel.centering.bottomRightCorner(tau, tau) = -mu_block(model, s0, scb);
  return panel;
}

SesquilinearPanel sesquilinear_panel(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                                     const PopulationModel& model, cplx z) {
  GroupCenteredResolvent res(X, labels);
  return sesquilinear_panel(res, model, z);
}

// -------------------------------------------------------------- L covariance

cplx LCovariance::operator()(int i, int j, int l, int t) const {
  const int m = 2 * tau;
  if (i < 0 || j < 0 || l < 0 || t < 0 || i >= m || j >= m || l >= m || t >= m)
    throw Error(ErrorCode::InvalidArgument, "L index out of range");
  // canonical orientation: a noise-mean index ahead of a mean index
  if (i >= tau && j < tau) std::swap(i, j);
  if (l >= tau && t < tau) std::swap(l, t);
  auto type = [this](int a, int b) { return (a < tau ? 0 : 1) + (b < tau ? 0 : 1); };  // 0 ss, 1 s-mu, 2 mu-mu
  int ta = type(i, j), tb = type(l, t);
  if (ta > tb) {
    std::swap(i, l);
    std::swap(j, t);
    std::swap(ta, tb);
  }
  const cplx s2 = s * s, s4 = s2 * s2;
  auto kk = [this](int a) { return k[static_cast<std::size_t>(a)]; };
  auto zeta = [&](int a, int b) { return moments.theta(a, b) / std::sqrt(kk(a) * kk(b)); };

  if (ta == 0 && tb == 0) {
    const cplx base = (s_prime - s2) / s4;
    if (i == j && l == t && i == l) return 2.0 * base / (kk(i) * kk(i));
    if (i != j && ((i == l && j == t) || (i == t && j == l))) return base / (kk(i) * kk(j));
    return 0.0;
  }
  if (ta == 1 && tb == 1) {
    if (i != l) return 0.0;
    return s_prime / s4 * zeta(j - tau, t - tau) / kk(i);
  }
  if (ta == 1 && tb == 2) {
    const int a = j - tau, b = l - tau, c = t - tau;
    const cplx f = moments.h(a, b, c) / std::sqrt(kk(a) * kk(b) * kk(c));
    return -v3 / s2 * f;
  }
  if (ta == 2 && tb == 2) {
    const int a = i - tau, b = j - tau, c = l - tau, d = t - tau;
    const cplx g = moments.rho(a, b, c, d) / std::sqrt(kk(a) * kk(b) * kk(c) * kk(d));
    return s_prime / s4 * (zeta(b, c) * zeta(d, a) + zeta(b, d) * zeta(c, a)) + (v4 - 3.0) / s2 * g;
  }
  return 0.0;  // noise-noise against anything involving a mean
}

Eigen::MatrixXcd LCovariance::matrix() const {
  const int m = 2 * tau;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) pairs.emplace_back(i, j);
  const Eigen::Index np = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXcd out(np, np);
  for (Eigen::Index a = 0; a < np; ++a)
    for (Eigen::Index b = 0; b < np; ++b)
      out(a, b) = (*this)(pairs[static_cast<std::size_t>(a)].first, pairs[static_cast<std::size_t>(a)].second,
                          pairs[static_cast<std::size_t>(b)].first, pairs[static_cast<std::size_t>(b)].second);
  return out;
}

LCovariance L_covariance(const PopulationModel& model, int n, cplx z, RegimeMode mode) {
  model.validate();
  const RegimeParams r = proxy_regime(model, n);
  check_z(model, r, z);
  LCovariance lc;
  lc.tau = model.tau();
  lc.v3 = model.noise.v3();
  lc.v4 = model.noise.v4();
  lc.k = realized_fractions(model, n);
  if (mode == RegimeMode::Ultrahigh) {
    RegimeParams inf;
    lc.s = semicircle_stieltjes(z);
    lc.s_prime = stieltjes_derivative(DiscreteSpectrum::identity(), inf, lc.s);
    lc.moments.tau = lc.tau;
    lc.moments.theta = Eigen::MatrixXcd::Zero(lc.tau, lc.tau);
    lc.moments.h_.assign(static_cast<std::size_t>(lc.tau * lc.tau * lc.tau), 0.0);
    lc.moments.rho_.assign(static_cast<std::size_t>(lc.tau * lc.tau * lc.tau * lc.tau), 0.0);
    return lc;
  }
  const auto h = model.sigma0.spectrum();
  lc.s = stieltjes_solve(h, r, z);
  lc.s_prime = stieltjes_derivative(h, r, lc.s);
  const double scb = std::sqrt(r.c * r.b);
  lc.moments = moment_tensors(shifted_mean_projection(model, -1.0 / lc.s, scb), lc.k);
  return lc;
}

}  // namespace spikelab
