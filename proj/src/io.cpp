#include "spikelab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spikelab/errors.hpp"

namespace spikelab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& cell, std::size_t line) {
  const std::string t = trim(cell);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + t + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    schema(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T need(const json& j, const char* key) {
  if (!j.contains(key)) schema(std::string("missing field '") + key + "'");
  return get<T>(j, key, T{});
}

NoiseLaw noise_from_json(const json& j) {
  try {
    if (j.is_string()) return NoiseLaw::from_name(j.get<std::string>());
    if (j.is_object()) return NoiseLaw::from_name(need<std::string>(j, "name"), get<double>(j, "t", 0.5));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    schema(e.what());
  }
  schema("noise must be a name or {name, t}");
}

CovarianceRoot sigma0_from_json(const json& j, Eigen::Index p) {
  if (!j.is_object()) schema("sigma0 must be an object");
  const auto kind = need<std::string>(j, "kind");
  try {
    if (kind == "identity") return CovarianceRoot::identity(p);
    if (kind == "diagonal") {
      const auto v = need<std::vector<double>>(j, "values");
      if (static_cast<Eigen::Index>(v.size()) != p) schema("sigma0 values length differs from p");
      return CovarianceRoot::diagonal(Eigen::Map<const Eigen::VectorXd>(v.data(), p));
    }
    if (kind == "diagonal_blocks") {
      // [[count, value], ...]
      Eigen::VectorXd d(p);
      Eigen::Index at = 0;
      for (const auto& b : need<json>(j, "blocks")) {
        const auto cnt = b.at(0).get<Eigen::Index>();
        const auto val = b.at(1).get<double>();
        if (cnt < 0 || at + cnt > p) schema("diagonal blocks overrun p");
        d.segment(at, cnt).setConstant(val);
        at += cnt;
      }
      if (at != p) schema("diagonal blocks do not cover p");
      return CovarianceRoot::diagonal(d);
    }
    if (kind == "toeplitz_root") return CovarianceRoot::toeplitz_tridiagonal_root(p, need<double>(j, "diag"), need<double>(j, "off"));
    if (kind == "dense_root") {
      const auto rows = need<std::vector<std::vector<double>>>(j, "rows");
      if (static_cast<Eigen::Index>(rows.size()) != p) schema("dense root needs p rows");
      Eigen::MatrixXd R(p, p);
      for (Eigen::Index i = 0; i < p; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p) schema("dense root row length");
        for (Eigen::Index k = 0; k < p; ++k) R(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      return CovarianceRoot::dense_root(R);
    }
  } catch (const json::exception& e) {
    schema(std::string("sigma0: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    schema(std::string("sigma0: ") + e.what());
  }
  schema("unknown sigma0 kind '" + kind + "'");
}

Eigen::VectorXd mean_from_json(const json& j, Eigen::Index p) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(p);
  try {
    if (j.is_array()) {
      const auto v = j.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != p) schema("mean length differs from p");
      for (Eigen::Index i = 0; i < p; ++i) mu(i) = v[static_cast<std::size_t>(i)];
    } else if (j.is_object()) {
      // sparse {"index": value}, 0-based
      for (const auto& [k, v] : j.items()) {
        const long idx = std::stol(k);
        if (idx < 0 || idx >= p) schema("mean index " + k + " out of range");
        mu(idx) = v.get<double>();
      }
    } else {
      schema("each mean is an array or a sparse object");
    }
  } catch (const json::exception& e) {
    schema(std::string("means: ") + e.what());
  } catch (const std::logic_error&) {
    schema("means: bad index");
  }
  return mu;
}

}  // namespace

// ------------------------------------------------------------------ files

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::vector<double> vals;
  std::size_t cols = 0, rows = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (header && lineno == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                                             " columns, found " + std::to_string(cells.size()));
    for (const auto& c : cells) vals.push_back(parse_double(c, lineno));
    ++rows;
  }
  if (rows == 0 || cols == 0) throw Error(ErrorCode::ParseError, path + ": no data");
  Eigen::MatrixXd X(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = vals[i * cols + k];
  return X;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& X) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < X.cols(); ++k) out << (k ? "," : "") << X(i, k);
    out << '\n';
  }
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    for (const auto& c : split(line)) {
      const double v = parse_double(c, lineno);
      if (v != std::floor(v)) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": label not an integer");
      out.push_back(static_cast<int>(v));
    }
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, path + ": no labels");
  return out;
}

// ----------------------------------------------------------------- models

std::vector<std::string> model_presets() {
  return {"single_population", "four_group_clt", "three_group_phase", "two_group_constant_shift",
          "four_group_tridiagonal", "two_group_identity"};
}

PopulationModel model_from_json(const json& j, int n) {
  if (!j.is_object()) schema("model must be a JSON object");
  if (j.contains("schema") && j["schema"] != kSchema) schema("unsupported schema " + j["schema"].dump());
  n = get<int>(j, "n", n);
  if (j.contains("preset")) {
    const auto name = need<std::string>(j, "preset");
    const auto p = get<Eigen::Index>(j, "p", 0);
    const NoiseLaw noise = j.contains("noise") ? noise_from_json(j["noise"]) : NoiseLaw::gaussian();
    const bool needs_n = name != "single_population" && name != "three_group_phase";
    if (p <= 0) schema("preset '" + name + "' needs p");
    if (needs_n && n <= 0) schema("preset '" + name + "' needs n");
    try {
      if (name == "single_population") return presets::single_population(p, noise);
      if (name == "four_group_clt") return presets::four_group_clt(n, p, noise);
      if (name == "three_group_phase") {
        auto m = presets::three_group_phase(p, get<double>(j, "mu3_scale", 20.0));
        m.noise = noise;
        return m;
      }
      if (name == "two_group_constant_shift") {
        auto m = presets::two_group_constant_shift(n, p, get<double>(j, "k1", 0.5), get<double>(j, "alpha", 3.0));
        m.noise = noise;
        return m;
      }
      if (name == "four_group_tridiagonal") return presets::four_group_tridiagonal(n, p, get<bool>(j, "strong", true), noise);
      if (name == "two_group_identity") return presets::two_group_identity(n, p, noise);
    } catch (const Error& e) {
      schema("preset '" + name + "': " + e.what());
    }
    std::string list;
    for (const auto& s : model_presets()) list += (list.empty() ? "" : ", ") + s;
    schema("unknown model preset '" + name + "'; available: " + list);
  }
  PopulationModel m;
  const auto p = need<Eigen::Index>(j, "p");
  if (p <= 0) schema("p must be positive");
  m.fractions = need<std::vector<double>>(j, "fractions");
  const auto means = need<json>(j, "means");
  if (!means.is_array()) schema("means must be an array");
  for (const auto& mu : means) m.means.push_back(mean_from_json(mu, p));
  m.sigma0 = j.contains("sigma0") ? sigma0_from_json(j["sigma0"], p) : CovarianceRoot::identity(p);
  m.noise = j.contains("noise") ? noise_from_json(j["noise"]) : NoiseLaw::gaussian();
  try {
    m.validate();
  } catch (const Error& e) {
    schema(e.what());
  }
  return m;
}

// ---------------------------------------------------------------- studies

std::vector<std::string> study_presets() {
  return {"lsd_semicircle",     "phase_transition",  "table1_c10_caseI", "table1_c10_caseII",
          "group_count_caseII", "cluster_score_k05", "sesquilinear_z3"};
}

ExperimentConfig study_preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.seed = 20240601;
  if (name == "lsd_semicircle") {
    c.study = StudyKind::LsdFit;
    c.n = 200;
    c.model = presets::single_population(40000);
    c.replicates = 20;
  } else if (name == "phase_transition") {
    c.study = StudyKind::SpikeClt;
    c.n = 300;
    c.model = presets::three_group_phase(90000);
    c.replicates = 100;
    c.spike_indices = {1, 2, 3};
    c.lambda_targets = {7.886, 3.005, 2.0};
    c.b_correction = false;
  } else if (name == "table1_c10_caseI" || name == "table1_c10_caseII") {
    c.study = StudyKind::SpikeClt;
    c.n = 200;
    const NoiseLaw law = name == "table1_c10_caseI" ? NoiseLaw::exp_centered()
                                                     : NoiseLaw::bernoulli_t((std::sqrt(3.0) + 3.0) / 6.0);
    c.model = presets::four_group_clt(200, 2000, law);
    c.replicates = 1000;
    c.spike_indices = {1, 2, 3};
    c.sum_indices = {1, 2};
  } else if (name == "group_count_caseII") {
    c.study = StudyKind::GroupCount;
    c.n = 120;
    c.model = presets::four_group_tridiagonal(120, 30000, true, NoiseLaw::gaussian());
    c.replicates = 200;
  } else if (name == "cluster_score_k05") {
    c.study = StudyKind::ClusterScore;
    c.n = 200;
    c.model = presets::two_group_constant_shift(200, 40000, 0.5, 3.0);
    c.replicates = 100;
    c.labelings = {{0.6, 1.0}, {0.6, 0.6}};
  } else if (name == "sesquilinear_z3") {
    c.study = StudyKind::Sesquilinear;
    c.n = 200;
    c.model = presets::two_group_identity(200, 40000);
    c.replicates = 100;
    c.z = {3.0, 0.0};
  } else {
    std::string list;
    for (const auto& s : study_presets()) list += (list.empty() ? "" : ", ") + s;
    throw Error(ErrorCode::SchemaError, "unknown preset '" + name + "'; available: " + list);
  }
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) schema("study must be a JSON object");
  if (j.contains("schema") && j["schema"] != kSchema) schema("unsupported schema " + j["schema"].dump());
  ExperimentConfig c;
  if (j.contains("preset")) {
    c = study_preset(need<std::string>(j, "preset"));
  } else {
    c.study = study_from_name(need<std::string>(j, "study"));
    c.n = need<int>(j, "n");
    c.model = model_from_json(need<json>(j, "model"), c.n);
  }
  c.name = get<std::string>(j, "name", c.name);
  c.replicates = get<int>(j, "replicates", c.replicates);
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.threads = get<int>(j, "threads", c.threads);
  c.spike_indices = get<std::vector<int>>(j, "spike_indices", c.spike_indices);
  c.lambda_targets = get<std::vector<double>>(j, "lambda_targets", c.lambda_targets);
  c.sum_indices = get<std::vector<int>>(j, "sum_indices", c.sum_indices);
  c.b_correction = get<bool>(j, "b_correction", c.b_correction);
  c.d_n = get<double>(j, "d_n", c.d_n);
  c.histogram_bins = get<int>(j, "histogram_bins", c.histogram_bins);
  if (j.contains("labelings")) {
    c.labelings.clear();
    for (const auto& l : j["labelings"]) c.labelings.push_back({get<double>(l, "acc", 1.0), get<double>(l, "rec", 1.0)});
  }
  if (j.contains("z")) {
    const auto& z = j["z"];
    if (z.is_number())
      c.z = {z.get<double>(), 0.0};
    else if (z.is_array() && z.size() == 2)
      c.z = {z[0].get<double>(), z[1].get<double>()};
    else
      schema("z is a number or [re, im]");
  }
  if (j.contains("lsd_mode")) {
    const auto m = need<std::string>(j, "lsd_mode");
    if (m == "ultrahigh")
      c.lsd_mode = RegimeMode::Ultrahigh;
    else if (m == "unified")
      c.lsd_mode = RegimeMode::Unified;
    else
      schema("lsd_mode is 'ultrahigh' or 'unified'");
  }
  if (c.replicates < 1) schema("replicates must be >= 1");
  return c;
}

// ------------------------------------------------------------------ output

json to_json(const StudyResult& r) {
  json j;
  j["schema"] = kSchema;
  j["kind"] = "study_result";
  j["name"] = r.name;
  j["study"] = to_string(r.study);
  j["n"] = r.n;
  j["p"] = r.p;
  j["replicates"] = r.replicates;
  j["seed"] = r.seed;
  char hash[19];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  j["config_hash"] = hash;
  j["fields"] = r.fields;
  j["failures"] = r.failures;
  j["constants"] = r.constants;
  j["aggregates"] = r.aggregates;
  json h = json::object();
  for (const auto& [k, v] : r.histograms) h[k] = {{"bin_edges", v.edges}, {"counts", v.counts}};
  j["histograms"] = h;
  json recs = json::array();
  for (const auto& rec : r.records) {
    json x = {{"replicate", rec.replicate}, {"ok", rec.ok}};
    if (rec.ok)
      x["values"] = rec.values;
    else
      x["error"] = rec.error;
    recs.push_back(std::move(x));
  }
  j["records"] = recs;
  return j;
}

StudyResult study_result_from_json(const json& j) {
  if (get<std::string>(j, "schema", "") != kSchema) schema("not a spikelab/v1 document");
  if (get<std::string>(j, "kind", "") != "study_result") schema("not a study result");
  StudyResult r;
  r.name = need<std::string>(j, "name");
  r.study = study_from_name(need<std::string>(j, "study"));
  r.n = need<int>(j, "n");
  r.p = need<Eigen::Index>(j, "p");
  r.replicates = need<int>(j, "replicates");
  r.seed = need<std::uint64_t>(j, "seed");
  r.config_hash = std::stoull(need<std::string>(j, "config_hash"), nullptr, 16);
  r.fields = need<std::vector<std::string>>(j, "fields");
  r.failures = need<int>(j, "failures");
  r.constants = need<std::map<std::string, double>>(j, "constants");
  r.aggregates = need<std::map<std::string, double>>(j, "aggregates");
  const json hist = need<json>(j, "histograms");
  for (const auto& [k, v] : hist.items())
    r.histograms[k] = {need<std::vector<double>>(v, "bin_edges"), need<std::vector<int>>(v, "counts")};
  for (const auto& x : need<json>(j, "records")) {
    ReplicateRecord rec;
    rec.replicate = need<int>(x, "replicate");
    rec.ok = need<bool>(x, "ok");
    if (rec.ok) {
      rec.values = need<std::vector<double>>(x, "values");
      if (rec.values.size() != r.fields.size()) schema("record width differs from fields");
    } else {
      rec.error = need<std::string>(x, "error");
      rec.values.assign(r.fields.size(), 0.0);
    }
    r.records.push_back(std::move(rec));
  }
  return r;
}

json to_json(const ClusterScore& s) {
  json j = {{"schema", kSchema},      {"kind", "cluster_score"},        {"T", s.T},
            {"alpha_hat", s.alpha_hat}, {"alpha_check", s.alpha_check}, {"tau_used", s.tau_used},
            {"excluded_spikes", s.excluded}};
  if (s.t0) j["t0"] = *s.t0;
  if (s.t0_bounds) j["t0_bounds"] = {s.t0_bounds->first, s.t0_bounds->second};
  return j;
}

json to_json(const SpikeReport& r) {
  json cl = json::array();
  for (const auto& c : r.clusters)
    cl.push_back({{"alpha", c.alpha},
                  {"multiplicity", c.multiplicity},
                  {"kind", c.kind == SpikeKind::Distant ? "distant" : "close"},
                  {"lambda_limit", c.lambda_limit},
                  {"phi_prime", c.phi_prime}});
  return {{"schema", kSchema},
          {"kind", "spike_report"},
          {"edges", {{"a_frak", r.edges.a_frak}, {"b_frak", r.edges.b_frak}}},
          {"clusters", cl}};
}

}  // namespace spikelab
