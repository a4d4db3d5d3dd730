#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spikelab/covariance.hpp"
#include "spikelab/datagen.hpp"

namespace spikelab {

enum class StudyKind { SpikeClt, GroupCount, ClusterScore, Sesquilinear, LsdFit };

std::string to_string(StudyKind k);
StudyKind study_from_name(const std::string& name);

/// A two-cluster labeling requested by ACC and REC against the contiguous truth.
struct LabelPolicy {
  double acc = 1.0;
  double rec = 1.0;
};

struct ExperimentConfig {
  std::string name;
  StudyKind study = StudyKind::LsdFit;
  PopulationModel model;
  int n = 0;
  int replicates = 1;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: SPIKELAB_THREADS, else hardware concurrency

  // spike_clt: 1-based eigenvalue indices and optional explicit limits
  // (defaults come from phi at the model's population spikes).
  std::vector<int> spike_indices;
  std::vector<double> lambda_targets;
  std::vector<int> sum_indices;  // adds a delta_sum field when non-empty
  bool b_correction = true;

  double d_n = 0.0;  // group_count; 0 means 1/(log n)^2
  std::vector<LabelPolicy> labelings;  // cluster_score; empty means perfect labels
  cplx z{3.0, 0.0};  // sesquilinear
  RegimeMode lsd_mode = RegimeMode::Ultrahigh;  // lsd_fit reference law
  int histogram_bins = 20;
};

struct ReplicateRecord {
  int replicate = 0;
  bool ok = true;
  std::string error;
  std::vector<double> values;  // aligned with StudyResult::fields
};

struct Histogram {
  std::vector<double> edges;
  std::vector<int> counts;
};

struct StudyResult {
  std::string name;
  StudyKind study = StudyKind::LsdFit;
  int n = 0;
  Eigen::Index p = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> fields;
  std::vector<ReplicateRecord> records;
  int failures = 0;
  std::map<std::string, double> constants;  // limits and targets used by the study
  std::map<std::string, double> aggregates;
  std::map<std::string, Histogram> histograms;

  /// Index of a field; throws InvalidArgument when absent.
  std::size_t field(const std::string& name) const;
  /// Values of one field over the successful replicates.
  std::vector<double> column(const std::string& name) const;
};

struct DeltaPair {
  double delta = 0.0;
  double delta_hat = 0.0;
};

/// delta = sqrt(n)(lambda_j(A_n) - target), delta_hat = sqrt(n)(lambda_j(A_hat) -
/// sqrt(b_p / b_hat) target). `oracle_eigs` holds the spectrum of A_n built with
/// the true (a_p, b_p); pass it empty when unknown. MissingOracle when the
/// correction is requested without b_p, or delta is requested without oracle_eigs.
DeltaPair delta_statistics(const SpectralSummary& hat, const std::vector<double>& oracle_eigs,
                           std::optional<double> b_p, double target, int which, bool correct = true);

/// Population spike limits phi(alpha) for each of the tau - 1 spikes, descending.
std::vector<double> spike_targets(const PopulationModel& model, int n);

/// LSD cdf on a grid: semicircle in the ultrahigh mode, integrated density otherwise.
class LsdCdf {
 public:
  LsdCdf(const DiscreteSpectrum& h, const RegimeParams& r, RegimeMode mode);
  double operator()(double x) const;

 private:
  bool semicircle_ = true;
  std::vector<double> grid_;
  std::vector<double> cdf_;
};

/// sup |F_emp - F| over the sample.
double ks_distance(std::vector<double> sample, const LsdCdf& cdf);
/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsTwoSample {
  double d = 0.0;
  double p_value = 1.0;
};
KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Worker count from SPIKELAB_THREADS or the hardware.
int default_threads();

std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Runs every replicate and aggregates. Throws StudyAborted when more than 5%
/// of replicates fail.
StudyResult run_study(const ExperimentConfig& cfg);

/// Recomputes the aggregates and histograms from the stored records.
void aggregate(StudyResult& r, int histogram_bins = 20);

}  // namespace spikelab
