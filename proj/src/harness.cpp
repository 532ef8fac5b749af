#include "lowdim/harness.hpp"

#include "lowdim/serialization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace lowdim::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// --- config helpers --------------------------------------------------------

std::string child(const std::string& path, const std::string& name) {
  return path + "/" + name;
}

const json* optional_field(const json& j, const std::string& name) {
  const auto it = j.find(name);
  return it == j.end() ? nullptr : &*it;
}

const json& required_field(const json& j, const std::string& name, const std::string& path) {
  const json* v = optional_field(j, name);
  if (!v) throw ConfigError(child(path, name), "missing field");
  return *v;
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

int positive_int(const json& j, const std::string& name, const std::string& path, int fallback) {
  const json* v = optional_field(j, name);
  if (!v) return fallback;
  const long long x = as_integer(*v, child(path, name));
  if (x < 1 || x > std::numeric_limits<int>::max()) {
    throw ConfigError(child(path, name), "expected a positive integer");
  }
  return static_cast<int>(x);
}

double positive_number(const json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x > 0.0)) throw ConfigError(path, "expected a positive number");
  return x;
}

std::optional<double> optional_positive(const json& j, const std::string& name,
                                        const std::string& path) {
  const json* v = optional_field(j, name);
  if (!v) return std::nullopt;
  return positive_number(*v, child(path, name));
}

std::vector<double> positive_array(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(positive_number(v[i], child(path, std::to_string(i))));
  }
  return out;
}

KRange parse_k_range(const json& j, const std::string& path) {
  const json& v = required_field(j, "k_range", path);
  const std::string p = child(path, "k_range");
  if (!v.is_object()) throw ConfigError(p, "expected an object");
  KRange r;
  r.start = positive_int(v, "start", p, 0);
  if (!optional_field(v, "start")) throw ConfigError(child(p, "start"), "missing field");
  r.end = positive_int(v, "end", p, r.start);
  r.step = positive_int(v, "step", p, 1);
  if (r.end < r.start) throw ConfigError(child(p, "end"), "range is empty (end < start)");
  return r;
}

EnsembleLaw parse_law(const json& j, const std::string& path) {
  const json* v = optional_field(j, "ensemble");
  if (!v) return EnsembleLaw::gaussian();
  const std::string p = child(path, "ensemble");
  if (!v->is_object()) throw ConfigError(p, "expected an object");
  const json* dist = optional_field(*v, "distribution");
  std::string name = "gaussian";
  if (dist) {
    if (!dist->is_string()) throw ConfigError(child(p, "distribution"), "expected a string");
    name = dist->get<std::string>();
  }
  if (name == "gaussian") return EnsembleLaw::gaussian();
  if (name != "uniform_ball") {
    throw ConfigError(child(p, "distribution"), "unknown distribution '" + name + "'");
  }
  const double ra = optional_positive(*v, "radius_a", p).value_or(1.0);
  const double rb = optional_positive(*v, "radius_b", p).value_or(1.0);
  return EnsembleLaw::uniform_ball(ra, rb);
}

bool projectable(SetKind kind) {
  switch (kind) {
    case SetKind::Sparse:
    case SetKind::FixedSupport:
    case SetKind::LowRank:
    case SetKind::Orthogonal:
    case SetKind::UpperTriangularSparse:
      return true;
    default:
      return false;
  }
}

DecoderConfig parse_decoder(const json& j, const std::string& path, const SetDescriptor& d) {
  DecoderConfig out;
  const json* v = optional_field(j, "decoder");
  const std::string p = child(path, "decoder");
  std::string name = "brute_force";
  if (v) {
    if (!v->is_object()) throw ConfigError(p, "expected an object");
    const json& nm = required_field(*v, "name", p);
    if (!nm.is_string()) throw ConfigError(child(p, "name"), "expected a string");
    name = nm.get<std::string>();
  }
  if (name == "brute_force") {
    out.kind = DecoderKind::BruteForce;
    if (d.kind() != SetKind::Sparse) {
      throw ConfigError(child(p, "name"), "brute_force needs a sparse descriptor");
    }
  } else if (name == "als") {
    out.kind = DecoderKind::Als;
    if (d.kind() != SetKind::LowRank) {
      throw ConfigError(child(p, "name"), "als needs a low_rank descriptor");
    }
  } else if (name == "projected") {
    out.kind = DecoderKind::Projected;
    if (!projectable(d.kind())) {
      throw ConfigError(child(p, "name"),
                        std::string("no projection available for ") + to_string(d.kind()));
    }
  } else {
    throw ConfigError(child(p, "name"), "unknown decoder '" + name + "'");
  }
  if (out.kind == DecoderKind::Projected) out.iters = ProjectedOptions{}.iters;
  if (v) {
    out.restarts = positive_int(*v, "restarts", p, out.restarts);
    out.iters = positive_int(*v, "iters", p, out.iters);
    if (const auto s = optional_positive(*v, "step", p)) out.step = *s;
    if (const json* cap = optional_field(*v, "cap")) {
      const long long c = as_integer(*cap, child(p, "cap"));
      if (c < 1) throw ConfigError(child(p, "cap"), "expected a positive integer");
      out.cap = static_cast<std::uint64_t>(c);
    }
  }
  return out;
}

SetDescriptor parse_descriptor(const json& j, const std::string& path) {
  return descriptor_from_json(required_field(j, "descriptor", path), child(path, "descriptor"));
}

std::vector<Expectation> parse_expectations(const json& j, const std::string& path) {
  std::vector<Expectation> out;
  const json* v = optional_field(j, "expect");
  if (!v) return out;
  const std::string p = child(path, "expect");
  if (!v->is_array()) throw ConfigError(p, "expected an array");
  for (std::size_t i = 0; i < v->size(); ++i) {
    const std::string q = child(p, std::to_string(i));
    const json& e = (*v)[i];
    if (!e.is_object()) throw ConfigError(q, "expected an object");
    Expectation x;
    x.k = static_cast<int>(as_integer(required_field(e, "k", q), child(q, "k")));
    if (const json* lo = optional_field(e, "min")) x.min_rate = as_number(*lo, child(q, "min"));
    if (const json* hi = optional_field(e, "max")) x.max_rate = as_number(*hi, child(q, "max"));
    out.push_back(x);
  }
  return out;
}

Matrix parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].empty()) {
      throw ConfigError(child(path, std::to_string(i)), "expected a nonempty row");
    }
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols) throw ConfigError(child(path, std::to_string(i)), "ragged row");
  }
  Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          as_number(v[i][c], child(child(path, std::to_string(i)), std::to_string(c)));
    }
  }
  return x;
}

void parse_delta_range(const json& j, const std::string& path, ExperimentConfig& c) {
  c.delta_min = optional_positive(j, "delta_min", path);
  c.delta_max = optional_positive(j, "delta_max", path);
  if (c.delta_min && c.delta_max && !(*c.delta_min < *c.delta_max)) {
    throw ConfigError(child(path, "delta_max"), "must exceed delta_min");
  }
  if (const json* g = optional_field(j, "grid_size")) {
    const long long n = as_integer(*g, child(path, "grid_size"));
    if (n < 4 || n > 10'000) throw ConfigError(child(path, "grid_size"), "expected 4..10000");
    c.grid_size = static_cast<int>(n);
  }
}

// --- shared run helpers ----------------------------------------------------

// 8 radii per decade, at least 4.
int default_grid_size(double lo, double hi) {
  const int n = static_cast<int>(std::ceil(8.0 * std::log10(hi / lo))) + 1;
  return std::max(n, 4);
}

std::optional<long long> safe_k(const SetDescriptor& d, bool unique) {
  try {
    const ThresholdReport t = thresholds(d);
    return unique ? t.k_unique : t.k_probabilistic;
  } catch (const NoFiniteThresholdError&) {
    return std::nullopt;
  }
}

std::string optional_number(const std::optional<long long>& x) {
  return x ? format_number(*x) : std::string();
}

TrialRecord run_trial(const ExperimentConfig& c, const SetDescriptor& d, int k, int trial) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrialRecord rec;
  rec.k = k;
  rec.trial = trial;
  rec.seed = derive_seed(c.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(trial));
  Rng rng(rec.seed);
  const Matrix x = sample_member(d, rng, c.amplitude);
  const MeasurementEnsemble ens = sample_ensemble(d.rows(), d.cols(), k, c.law, rng());
  const Vector y = apply(ens, x);

  DecodeResult res;
  try {
    switch (c.decoder.kind) {
      case DecoderKind::BruteForce: {
        const auto& sp = std::get<set::Sparse>(d.node());
        res = sparse_brute_force_decode(ens, y, sp.s, c.tolerances, c.decoder.cap);
        break;
      }
      case DecoderKind::Als: {
        const auto& lr = std::get<set::LowRank>(d.node());
        AlsOptions opt;
        opt.restarts = c.decoder.restarts;
        opt.iters = c.decoder.iters;
        opt.tol_res = c.tolerances.residual;
        opt.tol_dup = c.tolerances.duplicate;
        opt.seed = rng();
        res = lowrank_als_decode(ens, y, lr.r, opt);
        break;
      }
      case DecoderKind::Projected: {
        ProjectedOptions opt;
        opt.step = c.decoder.step;
        opt.iters = c.decoder.iters;
        opt.tol_res = c.tolerances.residual;
        res = generic_projected_decode(d, ens, y, opt);
        break;
      }
    }
  } catch (const CapacityError&) {
    res = DecodeResult{};  // counted as a failed trial
  }

  rec.status = res.status;
  if (res.candidates.empty()) {
    rec.residual = kNaN;
    rec.error_norm = kNaN;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.residuals.size(); ++i) {
      if (res.residuals[i] < res.residuals[best]) best = i;
    }
    rec.residual = res.residuals[best];
    rec.error_norm = (res.candidates[best] - x).norm();
  }
  rec.success = rec.status == DecodeStatus::Unique &&
                rec.error_norm <= 1e-6 * (1.0 + x.norm());
  rec.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return rec;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Phase: return "phase";
    case ExperimentKind::Nsp: return "nsp";
    case ExperimentKind::Concentration: return "concentration";
    case ExperimentKind::Rifs: return "rifs";
    case ExperimentKind::Dimension: return "dimension";
    case ExperimentKind::Holder: return "holder";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Phase, ExperimentKind::Nsp, ExperimentKind::Concentration,
                 ExperimentKind::Rifs, ExperimentKind::Dimension, ExperimentKind::Holder}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("/kind", "unknown experiment kind '" + name + "'");
}

std::vector<int> KRange::values() const {
  std::vector<int> out;
  for (int k = start; k <= end; k += step) out.push_back(k);
  return out;
}

ExperimentConfig parse_config(const json& j, ExperimentKind kind, const fs::path& config_dir) {
  const std::string root;
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  if (const json* k = optional_field(j, "kind")) {
    if (!k->is_string()) throw ConfigError("/kind", "expected a string");
    if (parse_kind(k->get<std::string>()) != kind) {
      throw ConfigError("/kind", std::string("config is for '") + k->get<std::string>() +
                                     "', not '" + to_string(kind) + "'");
    }
  }
  ExperimentConfig c;
  c.kind = kind;
  {
    const json& s = required_field(j, "seed", root);
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                   s.get<long long>() < 0)) {
      throw ConfigError("/seed", "expected a nonnegative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.expectations = parse_expectations(j, root);
  if (const json* a = optional_field(j, "amplitude")) c.amplitude = positive_number(*a, "/amplitude");

  switch (kind) {
    case ExperimentKind::Phase: {
      c.descriptor = parse_descriptor(j, root);
      c.k_range = parse_k_range(j, root);
      c.trials = positive_int(j, "trials", root, 1);
      c.decoder = parse_decoder(j, root, *c.descriptor);
      c.law = parse_law(j, root);
      if (const json* t = optional_field(j, "tolerances")) {
        if (!t->is_object()) throw ConfigError("/tolerances", "expected an object");
        if (auto r = optional_positive(*t, "residual", "/tolerances")) c.tolerances.residual = *r;
        if (auto r = optional_positive(*t, "duplicate", "/tolerances")) c.tolerances.duplicate = *r;
      }
      break;
    }
    case ExperimentKind::Nsp: {
      c.descriptor = parse_descriptor(j, root);
      if (c.descriptor->kind() != SetKind::Sparse) {
        throw ConfigError("/descriptor/kind", "nsp needs a sparse descriptor");
      }
      c.k_range = parse_k_range(j, root);
      c.trials = positive_int(j, "trials", root, 1);
      c.law = parse_law(j, root);
      if (const json* cap = optional_field(j, "cap")) {
        const long long v = as_integer(*cap, "/cap");
        if (v < 1) throw ConfigError("/cap", "expected a positive integer");
        c.decoder.cap = static_cast<std::uint64_t>(v);
      }
      break;
    }
    case ExperimentKind::Concentration: {
      c.x = parse_matrix(required_field(j, "x", root), "/x");
      if (c.x.norm() == 0.0) throw ConfigError("/x", "must be nonzero");
      if (const auto r = optional_positive(j, "radius", root)) c.radius = *r;
      c.delta_grid = positive_array(required_field(j, "delta_grid", root), "/delta_grid");
      Eigen::JacobiSVD<Matrix> svd(c.x);
      const double sigma1 = svd.singularValues()(0);
      const double cap = sigma1 * c.radius * c.radius;
      for (std::size_t i = 0; i < c.delta_grid.size(); ++i) {
        if (c.delta_grid[i] > cap * (1.0 + 1e-12)) {
          std::ostringstream msg;
          msg << "delta " << format_number(c.delta_grid[i]) << " exceeds sigma1 s^2 = "
              << format_number(cap);
          throw ConfigError("/delta_grid/" + std::to_string(i), msg.str());
        }
      }
      if (const json* s = optional_field(j, "samples")) {
        const long long v = as_integer(*s, "/samples");
        if (v < 1) throw ConfigError("/samples", "expected a positive integer");
        c.samples = static_cast<std::size_t>(v);
      }
      c.product_k = positive_int(j, "k", root, c.product_k);
      break;
    }
    case ExperimentKind::Rifs: {
      try {
        c.rifs = std::make_shared<const Rifs>(rifs_from_json(required_field(j, "rifs", root), "/rifs"));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError("/rifs", e.what());
      }
      c.points_per_component = positive_int(j, "points_per_component", root, c.points_per_component);
      c.burn_in = positive_int(j, "burn_in", root, c.burn_in);
      if (c.burn_in < 50) throw ConfigError("/burn_in", "must be at least 50");
      parse_delta_range(j, root, c);
      if (const auto t = optional_positive(j, "tolerance", root)) c.dimension_tolerance = *t;
      if (const json* e = optional_field(j, "export_points")) {
        if (!e->is_boolean()) throw ConfigError("/export_points", "expected a boolean");
        c.export_points = e->get<bool>();
      }
      break;
    }
    case ExperimentKind::Dimension: {
      const json* cloud = optional_field(j, "cloud_csv");
      const json* desc = optional_field(j, "descriptor");
      if ((cloud == nullptr) == (desc == nullptr)) {
        throw ConfigError("/", "give exactly one of 'cloud_csv' and 'descriptor'");
      }
      if (cloud) {
        if (!cloud->is_string()) throw ConfigError("/cloud_csv", "expected a path string");
        fs::path p = cloud->get<std::string>();
        if (p.is_relative() && !config_dir.empty()) p = config_dir / p;
        c.cloud_csv = p;
      } else {
        c.descriptor = parse_descriptor(j, root);
        if (const json* n = optional_field(j, "points")) {
          const long long v = as_integer(*n, "/points");
          if (v < 2) throw ConfigError("/points", "expected at least 2");
          c.points = static_cast<std::size_t>(v);
        }
        c.within_radius = optional_positive(j, "within_radius", root);
      }
      parse_delta_range(j, root, c);
      if (const auto t = optional_positive(j, "tolerance", root)) c.dimension_tolerance = *t;
      break;
    }
    case ExperimentKind::Holder: {
      c.descriptor = parse_descriptor(j, root);
      c.k_range = parse_k_range(j, root);
      c.law = parse_law(j, root);
      c.betas = positive_array(required_field(j, "betas", root), "/betas");
      for (std::size_t i = 0; i < c.betas.size(); ++i) {
        if (!(c.betas[i] < 1.0)) throw ConfigError("/betas/" + std::to_string(i), "need 0 < beta < 1");
      }
      const std::vector<double> pc =
          positive_array(required_field(j, "pair_counts", root), "/pair_counts");
      for (std::size_t i = 0; i < pc.size(); ++i) {
        if (pc[i] != std::floor(pc[i])) {
          throw ConfigError("/pair_counts/" + std::to_string(i), "expected an integer");
        }
        c.pair_counts.push_back(static_cast<std::size_t>(pc[i]));
      }
      break;
    }
  }
  return c;
}

// --- phase -----------------------------------------------------------------

PhaseCurve run_phase(const ExperimentConfig& config, int threads) {
  if (!config.descriptor) throw ConfigError("/descriptor", "missing field");
  const SetDescriptor& d = *config.descriptor;
  const std::vector<int> ks = config.k_range.values();
  const std::size_t per_k = static_cast<std::size_t>(config.trials);

  PhaseCurve curve;
  curve.k_probabilistic = safe_k(d, false);
  curve.k_unique = safe_k(d, true);
  curve.trials.resize(ks.size() * per_k);
  parallel_for(curve.trials.size(), threads, [&](std::size_t idx) {
    const int k = ks[idx / per_k];
    const int trial = static_cast<int>(idx % per_k);
    curve.trials[idx] = run_trial(config, d, k, trial);
  });

  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    PhaseRow row;
    row.k = ks[ki];
    row.trials = config.trials;
    double sum = 0.0;
    int with_residual = 0;
    for (std::size_t t = 0; t < per_k; ++t) {
      const TrialRecord& rec = curve.trials[ki * per_k + t];
      if (rec.success) ++row.successes;
      if (!std::isnan(rec.residual)) {
        sum += rec.residual;
        ++with_residual;
      }
    }
    row.success_rate = static_cast<double>(row.successes) / row.trials;
    row.mean_residual = with_residual ? sum / with_residual : kNaN;
    curve.rows.push_back(row);
  }
  return curve;
}

CsvTable to_csv(const PhaseCurve& curve) {
  CsvTable t;
  t.header = {"k", "trials", "successes", "success_rate", "mean_residual",
              "k_probabilistic", "k_unique"};
  for (const PhaseRow& r : curve.rows) {
    t.rows.push_back({format_number(static_cast<long long>(r.k)),
                      format_number(static_cast<long long>(r.trials)),
                      format_number(static_cast<long long>(r.successes)),
                      format_number(r.success_rate), format_number(r.mean_residual),
                      optional_number(curve.k_probabilistic), optional_number(curve.k_unique)});
  }
  return t;
}

// --- nsp -------------------------------------------------------------------

std::vector<NspRow> run_nsp(const ExperimentConfig& config, int threads) {
  if (!config.descriptor || config.descriptor->kind() != SetKind::Sparse) {
    throw ConfigError("/descriptor", "nsp needs a sparse descriptor");
  }
  const auto& sp = std::get<set::Sparse>(config.descriptor->node());
  const int mn = sp.m * sp.n;
  const int t = std::min(2 * sp.s, mn);
  if (binomial(static_cast<std::uint64_t>(mn), static_cast<std::uint64_t>(t)) > config.decoder.cap) {
    throw CapacityError("nsp: binomial(" + std::to_string(mn) + ", " + std::to_string(t) +
                        ") supports exceed the enumeration cap");
  }
  const std::vector<int> ks = config.k_range.values();
  const std::size_t per_k = static_cast<std::size_t>(config.trials);
  std::vector<char> holds(ks.size() * per_k, 0);
  parallel_for(holds.size(), threads, [&](std::size_t idx) {
    const int k = ks[idx / per_k];
    const auto trial = static_cast<std::uint64_t>(idx % per_k);
    const MeasurementEnsemble ens = sample_ensemble(
        sp.m, sp.n, k, config.law, derive_seed(config.seed, static_cast<std::uint64_t>(k), trial));
    holds[idx] = nsp_check_sparse(ens, sp.s, config.decoder.cap).holds ? 1 : 0;
  });
  std::vector<NspRow> rows;
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    NspRow r;
    r.k = ks[ki];
    r.ensembles_tested = config.trials;
    const auto first = holds.begin() + static_cast<std::ptrdiff_t>(ki * per_k);
    const int count = static_cast<int>(std::count(first, first + static_cast<std::ptrdiff_t>(per_k), 1));
    r.fraction_holding = static_cast<double>(count) / config.trials;
    rows.push_back(r);
  }
  return rows;
}

CsvTable nsp_to_csv(const std::vector<NspRow>& rows) {
  CsvTable t;
  t.header = {"k", "ensembles_tested", "fraction_holding"};
  for (const NspRow& r : rows) {
    t.rows.push_back({format_number(static_cast<long long>(r.k)),
                      format_number(static_cast<long long>(r.ensembles_tested)),
                      format_number(r.fraction_holding)});
  }
  return t;
}

// --- concentration ---------------------------------------------------------

ConcentrationReport run_concentration(const ExperimentConfig& config, int threads) {
  return concentration_verify(config.x, config.radius, config.delta_grid, config.samples,
                              config.product_k, config.seed, threads);
}

CsvTable to_csv(const ConcentrationReport& report) {
  CsvTable t;
  t.header = {"delta", "empirical", "ci_hi", "bound_single", "empirical_k", "ci_hi_k", "bound_k"};
  for (const ConcentrationRow& r : report.rows) {
    t.rows.push_back({format_number(r.delta), format_number(r.single.estimate),
                      format_number(r.single.upper), format_number(r.bound_single),
                      format_number(r.product.estimate), format_number(r.product.upper),
                      format_number(r.bound_product)});
  }
  return t;
}

// --- rifs ------------------------------------------------------------------

RifsStudy run_rifs(const ExperimentConfig& config, int threads) {
  if (!config.rifs) throw ConfigError("/rifs", "missing field");
  const Rifs& rifs = *config.rifs;
  RifsStudy study;
  study.d = contraction_dimension(rifs);
  study.nd_bound = rifs.size() * study.d;
  study.sample = attractor_points(rifs, config.points_per_component, config.burn_in,
                                  config.seed, false);
  EstimateOptions opt;
  opt.threads = threads;
  for (const auto& comp : study.sample.components) {
    const PointCloud cloud = PointCloud::from_vectors(comp);
    const double diag = cloud.bounding_diagonal();
    // three decades average out the log-periodic wobble of self-similar sets
    const double hi = config.delta_max.value_or(0.1 * diag);
    const double lo = config.delta_min.value_or(hi * 1e-3);
    const int grid = config.grid_size ? config.grid_size : default_grid_size(lo, hi);
    study.per_component.push_back(estimate_minkowski(cloud, lo, hi, grid, opt));
  }
  for (std::size_t i = 0; i < study.per_component.size(); ++i) {
    if (study.per_component[i].slope > study.per_component[study.max_component].slope) {
      study.max_component = static_cast<int>(i);
    }
  }
  study.boxcount_estimate = study.per_component[study.max_component].slope;
  study.within_tolerance = std::abs(study.boxcount_estimate - study.d) <= config.dimension_tolerance;
  return study;
}

json to_json(const RifsStudy& study) {
  json j;
  j["d"] = study.d;
  j["nd_bound"] = study.nd_bound;
  j["boxcount_estimate"] = study.boxcount_estimate;
  j["max_component"] = study.max_component;
  j["within_tolerance"] = study.within_tolerance;
  j["burn_in"] = study.sample.burn_in;
  j["chain_seed"] = study.sample.chain_seed;
  json per = json::array();
  for (const auto& e : study.per_component) per.push_back(estimate_to_json(e));
  j["per_component_estimates"] = per;
  return j;
}

// --- dimension -------------------------------------------------------------

DimensionStudy run_dimension(const ExperimentConfig& config, int threads) {
  DimensionStudy study;
  std::optional<PointCloud> cloud;
  if (config.cloud_csv) {
    std::ifstream in(*config.cloud_csv, std::ios::binary);
    if (!in) throw ConfigError("/cloud_csv", "cannot open " + config.cloud_csv->string());
    try {
      cloud = read_cloud_csv(in);
    } catch (const std::exception& e) {
      throw ConfigError("/cloud_csv", e.what());
    }
  } else {
    const SetDescriptor& d = *config.descriptor;
    study.rect_param = rect_param(d).rect_param;
    Rng rng(derive_seed(config.seed, 0, 0));
    std::vector<Matrix> members;
    members.reserve(config.points);
    const std::size_t max_attempts = 1000 * config.points;
    std::size_t attempts = 0;
    while (members.size() < config.points) {
      if (++attempts > max_attempts) {
        throw CapacityError("dimension: too few samples fall within the requested radius");
      }
      Matrix x = sample_member(d, rng, config.amplitude);
      if (config.within_radius && x.norm() > *config.within_radius) continue;
      members.push_back(std::move(x));
    }
    cloud = PointCloud::from_matrices(members);
  }
  study.points = cloud->size();
  const double diag = cloud->bounding_diagonal();
  const double hi = config.delta_max.value_or(0.25 * diag);
  const double lo = config.delta_min.value_or(hi * 1e-2);
  const int grid = config.grid_size ? config.grid_size : default_grid_size(lo, hi);
  EstimateOptions opt;
  opt.threads = threads;
  study.estimate = estimate_minkowski(*cloud, lo, hi, grid, opt);
  return study;
}

CsvTable to_csv(const DimensionEstimate& estimate) {
  CsvTable t;
  t.header = {"delta", "count", "used"};
  for (std::size_t i = 0; i < estimate.delta_grid.size(); ++i) {
    t.rows.push_back({format_number(estimate.delta_grid[i]), format_number(estimate.counts[i]),
                      estimate.used[i] ? "1" : "0"});
  }
  return t;
}

// --- holder ----------------------------------------------------------------

std::vector<HolderRow> run_holder(const ExperimentConfig& config, int threads) {
  if (!config.descriptor) throw ConfigError("/descriptor", "missing field");
  const SetDescriptor& d = *config.descriptor;
  std::optional<ThresholdReport> th;
  try {
    th = thresholds(d);
  } catch (const NoFiniteThresholdError&) {
  }
  const std::vector<int> ks = config.k_range.values();
  struct Cell {
    double beta;
    int k;
    std::size_t pairs;
  };
  std::vector<Cell> cells;
  for (double beta : config.betas) {
    for (int k : ks) {
      for (std::size_t p : config.pair_counts) cells.push_back({beta, k, p});
    }
  }
  std::vector<HolderRow> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    const auto k = static_cast<std::uint64_t>(c.k);
    // one ensemble per k shared across beta and pair counts; pair streams are
    // prefixes of each other
    const MeasurementEnsemble ens =
        sample_ensemble(d.rows(), d.cols(), c.k, config.law, derive_seed(config.seed, k, 0));
    const HolderQuotientEstimate est = holder_quotient(ens, d, c.beta, c.pairs, config.amplitude,
                                                       derive_seed(config.seed, k, 1));
    HolderRow& r = rows[i];
    r.beta = c.beta;
    r.k = c.k;
    r.pair_count = est.pair_count;
    r.sampled_min = est.sampled_min;
    r.violates = th ? c.k < th->k_holder_unique(c.beta) : true;
  });
  return rows;
}

CsvTable holder_to_csv(const std::vector<HolderRow>& rows) {
  CsvTable t;
  t.header = {"beta", "k", "pair_count", "sampled_min", "violates"};
  for (const HolderRow& r : rows) {
    t.rows.push_back({format_number(r.beta), format_number(static_cast<long long>(r.k)),
                      format_number(r.pair_count), format_number(r.sampled_min),
                      r.violates ? "1" : "0"});
  }
  return t;
}

// --- driver ----------------------------------------------------------------

namespace {

fs::path write_table(const fs::path& out_dir, const std::string& name, const CsvTable& table) {
  const fs::path p = out_dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  write_csv(out, table);
  return p;
}

fs::path write_json(const fs::path& out_dir, const std::string& name, const json& j) {
  const fs::path p = out_dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
  return p;
}

// Checks expectations on (k, value) pairs; appends failures to `messages`.
bool check_expectations(const std::vector<Expectation>& expect,
                        const std::vector<std::pair<int, double>>& values,
                        std::vector<std::string>& messages) {
  bool ok = true;
  for (const Expectation& e : expect) {
    const auto it = std::find_if(values.begin(), values.end(),
                                 [&](const auto& v) { return v.first == e.k; });
    if (it == values.end()) {
      messages.push_back("expectation for k=" + std::to_string(e.k) + " has no matching row");
      ok = false;
      continue;
    }
    if ((e.min_rate && it->second < *e.min_rate) || (e.max_rate && it->second > *e.max_rate)) {
      messages.push_back("k=" + std::to_string(e.k) + ": value " + format_number(it->second) +
                         " outside expected range");
      ok = false;
    }
  }
  return ok;
}

}  // namespace

RunOutcome run_experiment(ExperimentKind kind, const fs::path& config_path, const fs::path& out_dir,
                          std::optional<std::uint64_t> seed_override, int threads) {
  RunOutcome outcome;
  ExperimentConfig config;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("/", "cannot open config " + config_path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    if (seed_override && j.is_object()) j["seed"] = *seed_override;
    config = parse_config(j, kind, config_path.parent_path());
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.messages.push_back(std::string("config error at ") + e.what());
    return outcome;
  }

  const std::string stem = std::string(to_string(kind)) + "_" + std::to_string(config.seed);
  try {
    fs::create_directories(out_dir);
    bool ok = true;
    switch (kind) {
      case ExperimentKind::Phase: {
        const PhaseCurve curve = run_phase(config, threads);
        outcome.files.push_back(write_table(out_dir, stem + ".csv", to_csv(curve)));
        std::vector<std::pair<int, double>> vals;
        for (const auto& r : curve.rows) vals.emplace_back(r.k, r.success_rate);
        ok = check_expectations(config.expectations, vals, outcome.messages);
        json s;
        s["kind"] = "phase";
        s["seed"] = config.seed;
        s["descriptor"] = descriptor_to_json(*config.descriptor);
        s["k_probabilistic"] = curve.k_probabilistic ? json(*curve.k_probabilistic) : json();
        s["k_unique"] = curve.k_unique ? json(*curve.k_unique) : json();
        s["expectations_met"] = ok;
        outcome.files.push_back(write_json(out_dir, stem + ".json", s));
        break;
      }
      case ExperimentKind::Nsp: {
        const auto rows = run_nsp(config, threads);
        outcome.files.push_back(write_table(out_dir, stem + ".csv", nsp_to_csv(rows)));
        std::vector<std::pair<int, double>> vals;
        for (const auto& r : rows) vals.emplace_back(r.k, r.fraction_holding);
        ok = check_expectations(config.expectations, vals, outcome.messages);
        json s;
        s["kind"] = "nsp";
        s["seed"] = config.seed;
        s["descriptor"] = descriptor_to_json(*config.descriptor);
        s["k_unique"] = thresholds(*config.descriptor).k_unique;
        s["expectations_met"] = ok;
        outcome.files.push_back(write_json(out_dir, stem + ".json", s));
        break;
      }
      case ExperimentKind::Concentration: {
        const ConcentrationReport rep = run_concentration(config, threads);
        outcome.files.push_back(write_table(out_dir, stem + ".csv", to_csv(rep)));
        ok = rep.dominated();
        if (!ok) outcome.messages.push_back("an upper confidence limit exceeds its bound");
        json s;
        s["kind"] = "concentration";
        s["seed"] = config.seed;
        s["m"] = rep.m;
        s["n"] = rep.n;
        s["radius"] = rep.radius;
        s["sigma1"] = rep.sigma1;
        s["k"] = rep.k;
        s["samples"] = rep.samples;
        s["dominated"] = ok;
        outcome.files.push_back(write_json(out_dir, stem + ".json", s));
        break;
      }
      case ExperimentKind::Rifs: {
        const RifsStudy study = run_rifs(config, threads);
        outcome.files.push_back(write_json(out_dir, stem + ".json", to_json(study)));
        CsvTable t;
        t.header = {"component", "slope", "r_squared", "accepted"};
        for (std::size_t i = 0; i < study.per_component.size(); ++i) {
          const auto& e = study.per_component[i];
          t.rows.push_back({format_number(i), format_number(e.slope),
                            format_number(e.r_squared), e.accepted ? "1" : "0"});
        }
        outcome.files.push_back(write_table(out_dir, stem + ".csv", t));
        if (config.export_points) {
          const fs::path p = out_dir / (stem + "_points.csv");
          std::ofstream out(p, std::ios::binary);
          write_attractor_csv(out, study.sample);
          outcome.files.push_back(p);
        }
        ok = study.within_tolerance;
        if (!ok) {
          outcome.messages.push_back("box-count estimate " + format_number(study.boxcount_estimate) +
                                     " is not within " + format_number(config.dimension_tolerance) +
                                     " of d = " + format_number(study.d));
        }
        break;
      }
      case ExperimentKind::Dimension: {
        const DimensionStudy study = run_dimension(config, threads);
        outcome.files.push_back(write_table(out_dir, stem + ".csv", to_csv(study.estimate)));
        json s = estimate_to_json(study.estimate);
        s["points"] = study.points;
        s["rect_param"] = study.rect_param ? json(*study.rect_param) : json();
        outcome.files.push_back(write_json(out_dir, stem + ".json", s));
        break;
      }
      case ExperimentKind::Holder: {
        const auto rows = run_holder(config, threads);
        outcome.files.push_back(write_table(out_dir, stem + ".csv", holder_to_csv(rows)));
        const ThresholdReport t = thresholds(*config.descriptor);
        json s;
        s["kind"] = "holder";
        s["seed"] = config.seed;
        s["descriptor"] = descriptor_to_json(*config.descriptor);
        json ks = json::object();
        for (double b : config.betas) ks[format_number(b)] = t.k_holder_unique(b);
        s["k_holder_unique"] = ks;
        s["violating_cells"] = std::count_if(rows.begin(), rows.end(),
                                             [](const HolderRow& r) { return r.violates; });
        outcome.files.push_back(write_json(out_dir, stem + ".json", s));
        break;
      }
    }
    outcome.exit_code = ok ? kExitOk : kExitAssertion;
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.messages.push_back(std::string("config error at ") + e.what());
  } catch (const CapacityError& e) {
    outcome.exit_code = kExitConfig;
    outcome.messages.push_back(std::string("capacity error: ") + e.what());
  } catch (const std::exception& e) {
    outcome.exit_code = kExitFailure;
    outcome.messages.push_back(std::string("error: ") + e.what());
  }
  return outcome;
}

}  // namespace lowdim::harness
