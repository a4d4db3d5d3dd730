#include "spikelab/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "spikelab/errors.hpp"
#include "spikelab/inference.hpp"
#include "spikelab/spikes.hpp"

namespace spikelab {

std::string to_string(StudyKind k) {
  switch (k) {
    case StudyKind::SpikeClt: return "spike_clt";
    case StudyKind::GroupCount: return "group_count";
    case StudyKind::ClusterScore: return "cluster_score";
    case StudyKind::Sesquilinear: return "sesquilinear";
    case StudyKind::LsdFit: return "lsd_fit";
  }
  return "unknown";
}

StudyKind study_from_name(const std::string& name) {
  for (auto k : {StudyKind::SpikeClt, StudyKind::GroupCount, StudyKind::ClusterScore, StudyKind::Sesquilinear,
                 StudyKind::LsdFit})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::SchemaError, "unknown study '" + name + "'");
}

std::size_t StudyResult::field(const std::string& name) const {
  auto it = std::find(fields.begin(), fields.end(), name);
  if (it == fields.end()) throw Error(ErrorCode::InvalidArgument, "no field '" + name + "'");
  return static_cast<std::size_t>(it - fields.begin());
}

std::vector<double> StudyResult::column(const std::string& name) const {
  const auto f = field(name);
  std::vector<double> out;
  for (const auto& rec : records)
    if (rec.ok) out.push_back(rec.values[f]);
  return out;
}

DeltaPair delta_statistics(const SpectralSummary& hat, const std::vector<double>& oracle_eigs,
                           std::optional<double> b_p, double target, int which, bool correct) {
  if (which < 1 || which > static_cast<int>(hat.eigenvalues.size()))
    throw Error(ErrorCode::InvalidArgument, "eigenvalue index out of range");
  if (oracle_eigs.empty()) throw Error(ErrorCode::MissingOracle, "spectrum of A_n needs the true a_p and b_p");
  if (correct && !b_p) throw Error(ErrorCode::MissingOracle, "b_p unknown, correction requested");
  const auto j = static_cast<std::size_t>(which - 1);
  const double rn = std::sqrt(static_cast<double>(hat.n));
  const double factor = correct ? std::sqrt(*b_p / hat.b_hat) : 1.0;
  return {rn * (oracle_eigs[j] - target), rn * (hat.eigenvalues[j] - factor * target)};
}

std::vector<double> spike_targets(const PopulationModel& model, int n) {
  const auto alphas = sigma_x_spikes(model, n);
  const auto h = model.sigma0.spectrum();
  const auto r = proxy_regime(model, n);
  const auto edges = support_edge(h, r);
  std::vector<double> out;
  for (double a : alphas) out.push_back(a > edges.a_frak ? phi(h, r, a) : edges.b_frak);
  return out;
}

// ------------------------------------------------------------------ KS

LsdCdf::LsdCdf(const DiscreteSpectrum& h, const RegimeParams& r, RegimeMode mode) {
  if (mode == RegimeMode::Ultrahigh || r.ultrahigh()) return;
  semicircle_ = false;
  const double b = support_edge(h, r).b_frak;
  const int m = 4001;
  grid_.resize(m);
  for (int i = 0; i < m; ++i) grid_[static_cast<std::size_t>(i)] = -b - 0.5 + (2.0 * b + 1.0) * i / (m - 1);
  const auto dens = lsd_density(h, r, grid_);
  cdf_.assign(m, 0.0);
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    const double f0 = dens[i - 1].value_or(0.0), f1 = dens[i].value_or(0.0);
    cdf_[i] = cdf_[i - 1] + 0.5 * (f0 + f1) * (grid_[i] - grid_[i - 1]);
  }
  const double total = cdf_.back();
  if (!(total > 0.0)) throw Error(ErrorCode::NonConvergence, "LSD density integrates to zero");
  for (double& c : cdf_) c /= total;
}

double LsdCdf::operator()(double x) const {
  if (semicircle_) return semicircle_cdf(x);
  if (x <= grid_.front()) return 0.0;
  if (x >= grid_.back()) return 1.0;
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  const auto i = static_cast<std::size_t>(it - grid_.begin());
  const double w = (x - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
  return cdf_[i - 1] + w * (cdf_[i] - cdf_[i - 1]);
}

double ks_distance(std::vector<double> sample, const LsdCdf& cdf) {
  if (sample.empty()) throw Error(ErrorCode::EmptyInput, "empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, std::abs((i + 1) / m - f), std::abs(f - i / m)});
  }
  return d;
}

KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  // asymptotic Kolmogorov tail with the usual small-sample adjustment
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lam = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  if (lam < 1e-3) {
    p = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
      p += term;
      if (std::abs(term) < 1e-12) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {d, p};
}

// ------------------------------------------------------------ plumbing

int default_threads() {
  if (const char* env = std::getenv("SPIKELAB_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void pod(const T& v) {
    bytes(&v, sizeof(T));
  }
  void doubles(const double* d, std::size_t n) { bytes(d, n * sizeof(double)); }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> bulk_of(const SpectralSummary& s, int spikes) {
  std::vector<double> bulk(s.eigenvalues.begin() + std::min<std::size_t>(s.eigenvalues.size(), spikes),
                           s.eigenvalues.end());
  // drop the structural zero from the centring
  auto z = std::min_element(bulk.begin(), bulk.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (z != bulk.end()) bulk.erase(z);
  return bulk;
}

// per-study setup shared by all replicates
struct Plan {
  std::vector<std::string> fields;
  std::map<std::string, double> constants;
  std::vector<double> targets;  // spike_clt, aligned with spike_indices
  std::optional<LsdCdf> cdf;
};

Plan make_plan(const ExperimentConfig& cfg) {
  Plan plan;
  const int tau = cfg.model.tau();
  switch (cfg.study) {
    case StudyKind::SpikeClt: {
      if (cfg.spike_indices.empty()) throw Error(ErrorCode::InvalidArgument, "spike_clt needs spike indices");
      std::vector<double> pop;
      if (cfg.lambda_targets.empty()) {
        pop = spike_targets(cfg.model, cfg.n);
        pop.push_back(support_edge(cfg.model.sigma0.spectrum(), proxy_regime(cfg.model, cfg.n)).b_frak);
      } else if (cfg.lambda_targets.size() != cfg.spike_indices.size()) {
        throw Error(ErrorCode::DimensionMismatch, "one lambda target per spike index");
      }
      for (std::size_t i = 0; i < cfg.spike_indices.size(); ++i) {
        const int j = cfg.spike_indices[i];
        double t;
        if (!cfg.lambda_targets.empty())
          t = cfg.lambda_targets[i];
        else
          t = pop[std::min(static_cast<std::size_t>(j - 1), pop.size() - 1)];
        plan.targets.push_back(t);
        const std::string s = std::to_string(j);
        plan.constants["target_" + s] = t;
        for (const char* f : {"lambda_hat_", "lambda_", "delta_", "delta_hat_"}) plan.fields.push_back(f + s);
      }
      for (int j : cfg.sum_indices)
        if (std::find(cfg.spike_indices.begin(), cfg.spike_indices.end(), j) == cfg.spike_indices.end())
          throw Error(ErrorCode::InvalidArgument, "sum index must be one of the spike indices");
      if (!cfg.sum_indices.empty()) {
        plan.fields.push_back("delta_sum");
        plan.fields.push_back("delta_hat_sum");
      }
      break;
    }
    case StudyKind::GroupCount:
      plan.fields = {"tau_hat", "correct"};
      plan.constants["tau"] = tau;
      plan.constants["d_n"] = cfg.d_n > 0.0 ? cfg.d_n : default_dn(cfg.n);
      break;
    case StudyKind::ClusterScore: {
      if (tau != 2) throw Error(ErrorCode::WrongClusterCount, "cluster_score needs a two-group model");
      const std::size_t m = std::max<std::size_t>(1, cfg.labelings.size());
      for (std::size_t i = 0; i < m; ++i) {
        const std::string s = std::to_string(i + 1);
        for (const char* f : {"T_", "t0_", "acc_", "rec_", "absdiff_"}) plan.fields.push_back(f + s);
      }
      break;
    }
    case StudyKind::Sesquilinear: {
      const int d = 2 * tau;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) plan.fields.push_back("form_" + std::to_string(i) + "_" + std::to_string(j));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) plan.fields.push_back("L_" + std::to_string(i) + "_" + std::to_string(j));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) plan.fields.push_back("dev_" + std::to_string(i) + "_" + std::to_string(j));
      plan.fields.push_back("max_dev");
      const auto lc = L_covariance(cfg.model, cfg.n, cfg.z, RegimeMode::Unified);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          plan.constants["L_var_" + std::to_string(i) + "_" + std::to_string(j)] = std::real(lc(i, j, i, j));
      break;
    }
    case StudyKind::LsdFit:
      plan.fields = {"ks"};
      plan.cdf.emplace(cfg.model.sigma0.spectrum(), proxy_regime(cfg.model, cfg.n), cfg.lsd_mode);
      break;
  }
  return plan;
}

std::vector<double> run_replicate(const ExperimentConfig& cfg, const Plan& plan, int rep) {
  const auto data = generate(cfg.model, cfg.n, cfg.seed, static_cast<std::uint64_t>(rep));
  const Eigen::Index p = data.X.rows();
  std::vector<double> v;
  v.reserve(plan.fields.size());
  switch (cfg.study) {
    case StudyKind::SpikeClt: {
      const Eigen::MatrixXd gc = double_center(gram(data.X));
      const auto hat = spectral_summary_centered(gc, p);
      const double ap = cfg.model.sigma0.a(), bp = cfg.model.sigma0.b();
      const auto oracle = descending_eigenvalues(renormalized_from_centered(gc, p, ap, bp));
      double s = 0.0, sh = 0.0;
      for (std::size_t i = 0; i < cfg.spike_indices.size(); ++i) {
        const int j = cfg.spike_indices[i];
        const auto d = delta_statistics(hat, oracle, bp, plan.targets[i], j, cfg.b_correction);
        v.insert(v.end(), {hat.eigenvalues[static_cast<std::size_t>(j - 1)],
                           oracle[static_cast<std::size_t>(j - 1)], d.delta, d.delta_hat});
        if (std::find(cfg.sum_indices.begin(), cfg.sum_indices.end(), j) != cfg.sum_indices.end()) {
          s += d.delta;
          sh += d.delta_hat;
        }
      }
      if (!cfg.sum_indices.empty()) v.insert(v.end(), {s, sh});
      break;
    }
    case StudyKind::GroupCount: {
      const auto hat = spectral_summary(data.X);
      const int t = estimate_num_groups(hat, plan.constants.at("d_n"));
      v = {static_cast<double>(t), t == cfg.model.tau() ? 1.0 : 0.0};
      break;
    }
    case StudyKind::ClusterScore: {
      const auto d = prepare(data.X);
      const int n1 = data.n_per_group[0], n2 = data.n_per_group[1];
      std::vector<LabelPolicy> pol = cfg.labelings;
      if (pol.empty()) pol.push_back({});
      for (const auto& lp : pol) {
        const auto est = construct_labels(n1, n2, lp.acc, lp.rec);
        const auto m = label_metrics(data.labels, est);
        const double T = t_statistic(d, est).T;
        const double t = t0(m.acc, m.rec, m.k1);
        v.insert(v.end(), {T, t, m.acc, m.rec, std::abs(T - t)});
      }
      break;
    }
    case StudyKind::Sesquilinear: {
      const GroupCenteredResolvent res(data.X, data.labels);
      const auto panel = sesquilinear_panel(res, cfg.model, cfg.z);
      const Eigen::MatrixXcd L = panel.scaled(cfg.n);
      const auto d = panel.forms.rows();
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v.push_back(panel.forms(i, j).real());
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v.push_back(L(i, j).real());
      const Eigen::MatrixXd dev = (panel.forms - panel.limit).cwiseAbs();
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v.push_back(dev(i, j));
      v.push_back(dev.maxCoeff());
      break;
    }
    case StudyKind::LsdFit: {
      const auto hat = spectral_summary(data.X);
      v.push_back(ks_distance(bulk_of(hat, cfg.model.tau() - 1), *plan.cdf));
      break;
    }
  }
  return v;
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  Fnv f;
  f.pod(static_cast<int>(cfg.study));
  f.pod(cfg.n);
  f.pod(cfg.replicates);
  f.pod(cfg.seed);
  const auto& m = cfg.model;
  for (const auto& mu : m.means) f.doubles(mu.data(), static_cast<std::size_t>(mu.size()));
  f.doubles(m.fractions.data(), m.fractions.size());
  f.pod(static_cast<int>(m.noise.kind));
  f.pod(m.noise.t);
  f.pod(static_cast<int>(m.sigma0.kind()));
  f.doubles(m.sigma0.eigenvalues().data(), m.sigma0.eigenvalues().size());
  f.pod(m.sigma0.toeplitz_diag());
  f.pod(m.sigma0.toeplitz_off());
  for (int j : cfg.spike_indices) f.pod(j);
  f.doubles(cfg.lambda_targets.data(), cfg.lambda_targets.size());
  for (int j : cfg.sum_indices) f.pod(j);
  f.pod(cfg.b_correction);
  f.pod(cfg.d_n);
  for (const auto& l : cfg.labelings) {
    f.pod(l.acc);
    f.pod(l.rec);
  }
  f.pod(cfg.z.real());
  f.pod(cfg.z.imag());
  f.pod(static_cast<int>(cfg.lsd_mode));
  f.pod(cfg.histogram_bins);
  return f.h;
}

void aggregate(StudyResult& r, int bins) {
  r.aggregates.clear();
  r.histograms.clear();
  r.failures = 0;
  for (const auto& rec : r.records) r.failures += rec.ok ? 0 : 1;
  r.aggregates["failure_ratio"] = r.records.empty() ? 0.0 : static_cast<double>(r.failures) / r.records.size();
  for (const auto& f : r.fields) {
    const auto col = r.column(f);
    const double n = static_cast<double>(col.size());
    double mean = 0.0;
    for (double x : col) mean += x;
    mean = col.empty() ? 0.0 : mean / n;
    double var = 0.0;
    for (double x : col) var += (x - mean) * (x - mean);
    var = col.size() > 1 ? var / (n - 1.0) : 0.0;
    r.aggregates["mean." + f] = mean;
    r.aggregates["variance." + f] = var;
    r.aggregates["median." + f] = median_of(col);
    if (f.rfind("delta", 0) == 0 && !col.empty() && bins > 0) {
      Histogram h;
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      const double a = *lo, b = (*hi > *lo) ? *hi : *lo + 1.0;
      for (int i = 0; i <= bins; ++i) h.edges.push_back(a + (b - a) * i / bins);
      h.counts.assign(static_cast<std::size_t>(bins), 0);
      for (double x : col) {
        int k = static_cast<int>((x - a) / (b - a) * bins);
        ++h.counts[static_cast<std::size_t>(std::clamp(k, 0, bins - 1))];
      }
      r.histograms[f] = std::move(h);
    }
  }
  if (r.study == StudyKind::GroupCount) r.aggregates["accuracy"] = r.aggregates["mean.correct"];
  if (r.study == StudyKind::LsdFit) r.aggregates["mean_ks"] = r.aggregates["mean.ks"];
}

StudyResult run_study(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (cfg.n < 3) throw Error(ErrorCode::InvalidArgument, "n must be >= 3");
  cfg.model.validate();
  const Plan plan = make_plan(cfg);

  StudyResult r;
  r.name = cfg.name;
  r.study = cfg.study;
  r.n = cfg.n;
  r.p = cfg.model.p();
  r.replicates = cfg.replicates;
  r.seed = cfg.seed;
  r.config_hash = config_hash(cfg);
  r.fields = plan.fields;
  r.constants = plan.constants;
  r.records.resize(static_cast<std::size_t>(cfg.replicates));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < cfg.replicates; i = next++) {
      auto& rec = r.records[static_cast<std::size_t>(i)];
      rec.replicate = i;
      try {
        rec.values = run_replicate(cfg, plan, i);
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.values.assign(plan.fields.size(), 0.0);
      }
    }
  };
  const int threads = std::min(cfg.threads > 0 ? cfg.threads : default_threads(), cfg.replicates);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  aggregate(r, cfg.histogram_bins);
  if (r.failures > 0.05 * cfg.replicates) {
    std::string first;
    for (const auto& rec : r.records)
      if (!rec.ok) {
        first = rec.error;
        break;
      }
    throw Error(ErrorCode::StudyAborted, std::to_string(r.failures) + " of " + std::to_string(cfg.replicates) +
                                             " replicates failed; first: " + first);
  }
  return r;
}

}  // namespace spikelab
