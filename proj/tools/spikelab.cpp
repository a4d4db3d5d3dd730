// spikelab command line front end.
// CSV matrices are p x n: rows are variables, columns are observations.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "spikelab/errors.hpp"
#include "spikelab/io.hpp"

using namespace spikelab;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2);
  std::cout << text << '\n';
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + out);
    f << text << '\n';
  }
}

json with_head(json j) {
  json out = {{"schema", kSchema}};
  out.update(j);
  return out;
}

// --------------------------------------------------------------- commands

int estimate_groups(const std::string& path, bool header, std::optional<double> dn, const std::string& out) {
  const Eigen::MatrixXd X = read_matrix_csv(path, header);
  const auto s = spectral_summary(X);
  const double d = dn ? *dn : default_dn(s.n);
  const int tau = estimate_num_groups(s, d);
  std::vector<double> head(s.eigenvalues.begin(),
                           s.eigenvalues.begin() + std::min<std::size_t>(10, s.eigenvalues.size()));
  emit(with_head({{"kind", "group_estimate"},
                  {"tau_hat", tau},
                  {"d_n", d},
                  {"a_hat", s.a_hat},
                  {"b_hat", s.b_hat},
                  {"n", s.n},
                  {"p", s.p},
                  {"eigenvalues_head", head}}),
       out);
  return kOk;
}

int eval_clustering(const std::string& path, const std::string& labels_path, const std::string& truth_path,
                    bool header, const std::string& out) {
  const Eigen::MatrixXd X = read_matrix_csv(path, header);
  const auto labels = read_labels_csv(labels_path);
  if (static_cast<Eigen::Index>(labels.size()) != X.cols())
    throw Error(ErrorCode::ParseError, "labels file has " + std::to_string(labels.size()) + " entries, matrix has " +
                                           std::to_string(X.cols()) + " columns");
  const auto d = prepare(X);
  ClusterScore s;
  std::optional<LabelMetrics> m;
  try {
    s = t_statistic(d, labels);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::WrongClusterCount) throw;
    s = t_tau(d, labels);
  }
  if (!truth_path.empty()) {
    const auto truth = read_labels_csv(truth_path);
    if (truth.size() != labels.size()) throw Error(ErrorCode::ParseError, "truth file length differs from labels");
    if (s.tau_used == 2) {
      m = label_metrics(truth, labels);
      try {
        s.t0 = t0(m->acc, m->rec, m->k1);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateDenominator) throw;
      }
      s.t0_bounds = t0_bounds(m->acc, m->k1);
    }
  }
  json j = to_json(s);
  if (m) {
    j["acc"] = m->acc;
    j["rec"] = m->rec;
    j["pre"] = m->pre;
    j["k1"] = m->k1;
    j["reoriented"] = m->reoriented;
  }
  emit(j, out);
  return kOk;
}

int predict_spikes(const std::string& model_path, int n, Eigen::Index p, const std::string& out) {
  json mj = read_json(model_path);
  if (p > 0) mj["p"] = p;
  const auto model = model_from_json(mj, n);
  const auto alphas = model.tau() < 2 ? std::vector<double>{} : sigma_x_spikes(model, n);
  std::vector<double> values;
  std::vector<int> mult;
  cluster_values(alphas, 1e-9, values, mult);
  const auto h = model.sigma0.spectrum();
  const auto r = proxy_regime(model, n);
  const auto rep = classify_spikes(values, mult, h, r);
  json j = to_json(rep);
  j["alphas"] = alphas;
  j["regime"] = {{"n", n}, {"p", model.p()}, {"c_n", r.c}, {"a_p", r.a}, {"b_p", r.b}};
  for (std::size_t i = 0; i < rep.clusters.size(); ++i) {
    const auto& c = rep.clusters[i];
    auto& jc = j["clusters"][i];
    jc["lambda_limit_ultrahigh"] = c.alpha > 1.0 ? c.alpha + 1.0 / c.alpha : 2.0;
    jc["clt_trace_variance"] = nullptr;
    if (c.kind == SpikeKind::Distant) {
      try {
        const auto pd = projection_data(model, n, c.alpha);
        jc["clt_trace_variance"] =
            cluster_trace_variance(pd, {c.alpha, c.multiplicity, c.phi_prime}, model.noise.v4());
      } catch (const Error& e) {
        jc["clt_note"] = e.what();
      }
    }
  }
  emit(j, out);
  return kOk;
}

int simulate(const std::string& study_path, const std::string& preset, std::optional<int> replicates,
             std::optional<std::uint64_t> seed, const std::string& format, const std::string& out) {
  ExperimentConfig cfg;
  if (!preset.empty()) {
    try {
      cfg = study_preset(preset);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  } else if (!study_path.empty()) {
    cfg = config_from_json(read_json(study_path));
  } else {
    throw UsageError("simulate needs a study file or --preset");
  }
  if (replicates) cfg.replicates = *replicates;
  if (seed) cfg.seed = *seed;
  if (cfg.replicates < 1) throw UsageError("--replicates must be >= 1");
  const auto r = run_study(cfg);
  json j = to_json(r);
  if (format == "csv") {
    if (out.empty()) throw UsageError("--format csv needs --out for the records file");
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + out);
    f.precision(17);
    f << "replicate,ok";
    for (const auto& name : r.fields) f << ',' << name;
    f << '\n';
    for (const auto& rec : r.records) {
      f << rec.replicate << ',' << (rec.ok ? 1 : 0);
      for (double v : rec.values) f << ',' << v;
      f << '\n';
    }
    j.erase("records");
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
  emit(j, out);
  return kOk;
}

int lsd(const std::string& model_path, const std::string& preset, int n, const std::string& c_text,
        const std::string& grid_text, const std::string& out) {
  DiscreteSpectrum h = DiscreteSpectrum::identity();
  RegimeParams r;  // c = infinity
  if (!preset.empty()) {
    if (preset != "lsd_semicircle") throw UsageError("unknown lsd preset '" + preset + "'; available: lsd_semicircle");
  } else if (!model_path.empty()) {
    const auto model = model_from_json(read_json(model_path), n);
    h = model.sigma0.spectrum();
    r.a = model.sigma0.a();
    r.b = model.sigma0.b();
    if (!c_text.empty()) {
      r.c = (c_text == "inf") ? kInfiniteRatio : std::stod(c_text);
    } else {
      if (n < 1) throw UsageError("lsd with a model needs --n or --c");
      r.c = static_cast<double>(model.p()) / n;
    }
  } else {
    throw UsageError("lsd needs a model file or --preset");
  }
  double lo = -2.5, hi = 2.5;
  int count = 101;
  if (!grid_text.empty()) {
    std::stringstream ss(grid_text);
    char c1 = 0, c2 = 0;
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 2 || !(hi > lo))
      throw UsageError("--grid expects lo:hi:count");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  std::vector<std::optional<double>> dens;
  if (r.ultrahigh()) {
    for (double x : grid) dens.emplace_back(semicircle_density(x));
  } else {
    dens = lsd_density(h, r, grid);
  }
  std::ostringstream csv;
  csv.precision(12);
  csv << "x,density\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv << grid[i] << ',';
    if (dens[i])
      csv << *dens[i];
    else
      csv << "nan";
    csv << '\n';
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + out);
    f << csv.str();
  }
  return kOk;
}

int generate_cmd(const std::string& model_path, int n, Eigen::Index p, std::uint64_t seed, const std::string& out,
                 const std::string& labels_out) {
  json mj = read_json(model_path);
  if (p > 0) mj["p"] = p;
  const auto model = model_from_json(mj, n);
  const auto data = generate(model, n, seed);
  write_matrix_csv(out, data.X);
  if (!labels_out.empty()) {
    std::ofstream f(labels_out);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + labels_out);
    for (int g : data.labels) f << g << '\n';
  }
  std::cout << with_head({{"kind", "generated"}, {"n", n}, {"p", model.p()}, {"seed", seed}, {"matrix", out}}).dump(2)
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikelab: spiked eigenvalues of high dimensional multi-population data"};
  app.require_subcommand(1);
  std::string out;
  bool header = false;

  auto* eg = app.add_subcommand("estimate-groups", "estimate the number of groups from a p x n CSV matrix");
  std::string matrix;
  std::optional<double> dn;
  eg->add_option("matrix", matrix, "CSV, rows are variables")->required();
  eg->add_option("--dn", dn, "threshold offset d_n (default 1/(log n)^2)")->check(CLI::PositiveNumber);
  eg->add_flag("--header", header, "skip the first CSV line");
  eg->add_option("--out", out, "also write the JSON here");

  auto* ec = app.add_subcommand("eval-clustering", "score a clustering with T (two clusters) or T_tau");
  std::string labels, truth;
  ec->add_option("matrix", matrix, "CSV, rows are variables")->required();
  ec->add_option("labels", labels, "estimated labels, 1-based")->required();
  ec->add_option("--truth", truth, "true labels, enables ACC/REC/PRE and t0");
  ec->add_flag("--header", header, "skip the first CSV line");
  ec->add_option("--out", out, "also write the JSON here");

  auto* ps = app.add_subcommand("predict-spikes", "population spikes and their limits for a model");
  std::string model;
  int n = 0;
  long p = 0;
  ps->add_option("model", model, "model JSON")->required();
  ps->add_option("--n", n, "sample size")->required()->check(CLI::PositiveNumber);
  ps->add_option("--p", p, "dimension (presets)")->check(CLI::PositiveNumber);
  ps->add_option("--out", out, "also write the JSON here");

  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo study");
  std::string study, preset, format = "json";
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  sim->add_option("study", study, "study JSON");
  sim->add_option("--preset", preset, "built-in study");
  sim->add_option("--replicates", replicates, "override the replicate count");
  sim->add_option("--seed", seed, "override the seed");
  sim->add_option("--format", format, "json or csv (records)")->check(CLI::IsMember({"json", "csv"}));
  sim->add_option("--out", out, "output file");

  auto* ls = app.add_subcommand("lsd", "limiting spectral density on a grid, as CSV");
  std::string c_text, grid;
  ls->add_option("model", model, "model JSON");
  ls->add_option("--preset", preset, "lsd_semicircle");
  ls->add_option("--n", n, "sample size, sets c = p/n")->check(CLI::PositiveNumber);
  ls->add_option("--c", c_text, "ratio p/n, or inf");
  ls->add_option("--grid", grid, "lo:hi:count (default -2.5:2.5:101)");
  ls->add_option("--out", out, "output CSV");

  auto* gen = app.add_subcommand("generate", "draw a data matrix from a model");
  std::string labels_out;
  std::uint64_t gseed = 0;
  gen->add_option("model", model, "model JSON")->required();
  gen->add_option("--n", n, "sample size")->required()->check(CLI::PositiveNumber);
  gen->add_option("--p", p, "dimension (presets)")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed, "seed");
  gen->add_option("--out", out, "matrix CSV")->required();
  gen->add_option("--labels-out", labels_out, "true labels CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*eg) return estimate_groups(matrix, header, dn, out);
    if (*ec) return eval_clustering(matrix, labels, truth, header, out);
    if (*ps) return predict_spikes(model, n, p, out);
    if (*sim) return simulate(study, preset, replicates, seed, format, out);
    if (*ls) return lsd(model, preset, n, c_text, grid, out);
    if (*gen) return generate_cmd(model, n, p, gseed, out, labels_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BelowEdge)
      std::cerr << "error: no usable spike (" << e.what() << ")\n";
    else
      std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
