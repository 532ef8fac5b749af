// Acceptance run: one line per criterion, nonzero exit if any fails.
// Reads the shipped configs so the CLI and this check cannot drift apart.

#include "lowdim/harness.hpp"
#include "lowdim/serialization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

using namespace lowdim;
using namespace lowdim::harness;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = LOWDIM_CONFIG_DIR;

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

ExperimentConfig load(const std::string& file, ExperimentKind kind) {
  std::ifstream in(kConfigs / file);
  if (!in) throw std::runtime_error("cannot open " + (kConfigs / file).string());
  return parse_config(json::parse(in), kind, kConfigs);
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s,
               const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream time;
  time.precision(2);
  time << std::fixed << secs << "s of " << budget_s << "s";
  if (secs > budget_s) {
    v.pass = false;
    v.detail += " [over budget]";
  }
  if (!v.pass) ++failures;
  std::printf("[%s] criterion %d: %s -- %s (%s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str(), time.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double rate_at(const PhaseCurve& c, int k) {
  for (const auto& r : c.rows)
    if (r.k == k) return r.success_rate;
  throw std::runtime_error("no row for k=" + std::to_string(k));
}

std::string csv_bytes(const CsvTable& t) {
  std::ostringstream out;
  write_csv(out, t);
  return out.str();
}

Matrix gaussian(int m, int n, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix x(m, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

// --- property checks for criterion 9 ----------------------------------------

std::string linearity_and_adjoint() {
  Rng rng(901);
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    const auto e = sample_ensemble(3, 4, 5, EnsembleLaw::gaussian(), rng());
    const Matrix x = gaussian(3, 4, rng), y = gaussian(3, 4, rng);
    const double a = g(rng), b = g(rng);
    const Vector rhs = a * apply(e, x) + b * apply(e, y);
    if ((apply(e, a * x + b * y) - rhs).norm() > 1e-10 * (1.0 + rhs.norm())) return "linearity";
    Vector z(5);
    for (int i = 0; i < 5; ++i) z(i) = g(rng);
    const double scale = x.norm() * z.norm() * e.a().norm() * e.b().norm();
    if (std::abs(inner(adjoint(e, z), x) - z.dot(apply(e, x))) > 1e-10 * scale) return "adjoint";
  }
  return "";
}

std::string projection_optimality() {
  Rng rng(902);
  for (auto [m, n] : {std::pair{2, 2}, {3, 3}, {2, 4}, {1, 9}, {3, 2}}) {
    for (int s = 0; s <= m * n; ++s) {
      const SetDescriptor d = SetDescriptor::sparse(m, n, s);
      for (int t = 0; t < 20; ++t) {
        const Matrix x = gaussian(m, n, rng);
        const Matrix p = project(d, x);
        if ((project(d, p) - p).norm() > 0.0) return "idempotence";
        // exhaustive oracle: the best support discards the least squared mass
        double best = std::numeric_limits<double>::infinity();
        for_each_combination(m * n, s, [&](const std::vector<int>& idx) {
          double dropped = 0.0;
          std::size_t j = 0;
          for (int i = 0; i < m * n; ++i) {
            if (j < idx.size() && idx[j] == i) {
              ++j;
              continue;
            }
            dropped += x(i / n, i % n) * x(i / n, i % n);
          }
          best = std::min(best, dropped);
          return true;
        });
        if (std::abs((x - p).norm() - std::sqrt(best)) > 1e-12 * (1.0 + x.norm())) return "optimality";
      }
    }
  }
  return "";
}

std::string covering_properties() {
  Rng rng(903);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(6000), b(6000);
  for (double& v : a) v = u(rng);
  for (double& v : b) v = u(rng);
  const PointCloud ca(2, a), cb(2, b);
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const PointCloud both(2, ab);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double delta : geometric_grid(0.01, 0.5, 15)) {
    const std::size_t n = covering_number(both, delta);
    if (n > prev) return "monotonicity";
    prev = n;
    if (n > covering_number(ca, delta) + covering_number(cb, delta)) return "subadditivity";
  }
  return "";
}

std::string holder_homogeneity() {
  const auto e = sample_ensemble(3, 3, 10, EnsembleLaw::gaussian(), 904);
  Rng rng(905);
  for (int t = 0; t < 200; ++t) {
    const Matrix x = sample_member(SetDescriptor::sparse(3, 3, 2), rng);
    for (double beta : {0.3, 0.5, 0.9}) {
      for (double c : {0.01, 0.5, 3.0, 100.0}) {
        const double lhs = holder_ratio(e, c * x, beta);
        const double rhs = std::pow(c, 1.0 - 1.0 / beta) * holder_ratio(e, x, beta);
        if (std::abs(lhs / rhs - 1.0) > 1e-9) return "homogeneity";
      }
    }
  }
  return "";
}

std::string thread_determinism() {
  auto phase = load("phase_sparse.json", ExperimentKind::Phase);
  phase.trials = 40;
  if (csv_bytes(to_csv(run_phase(phase, 1))) != csv_bytes(to_csv(run_phase(phase, 4))))
    return "phase";
  auto nsp = load("nsp.json", ExperimentKind::Nsp);
  nsp.trials = 30;
  if (csv_bytes(nsp_to_csv(run_nsp(nsp, 1))) != csv_bytes(nsp_to_csv(run_nsp(nsp, 4))))
    return "nsp";
  auto conc = load("concentration.json", ExperimentKind::Concentration);
  conc.samples = 100'000;
  if (csv_bytes(to_csv(run_concentration(conc, 1))) != csv_bytes(to_csv(run_concentration(conc, 4))))
    return "concentration";
  auto holder = load("holder.json", ExperimentKind::Holder);
  holder.pair_counts = {200};
  if (csv_bytes(holder_to_csv(run_holder(holder, 1))) !=
      csv_bytes(holder_to_csv(run_holder(holder, 4))))
    return "holder";
  auto dim = load("dimension_rank_one.json", ExperimentKind::Dimension);
  dim.points = 20'000;
  if (csv_bytes(to_csv(run_dimension(dim, 1).estimate)) !=
      csv_bytes(to_csv(run_dimension(dim, 4).estimate)))
    return "dimension";
  return "";
}

}  // namespace

int main() {
  std::printf("acceptance run, %d thread(s)\n", threads());

  criterion(1, "sparse probabilistic threshold k > s", 10.0, [] {
    const auto cfg = load("phase_sparse.json", ExperimentKind::Phase);
    const PhaseCurve c = run_phase(cfg, threads());
    const double r1 = rate_at(c, 1), r2 = rate_at(c, 2);
    return Verdict{cfg.trials == 200 && r1 <= 0.05 && r2 >= 0.98,
                   "rate(k=1)=" + fmt(r1) + " rate(k=2)=" + fmt(r2)};
  });

  criterion(2, "null-space property threshold k > 2s", 30.0, [] {
    const auto cfg = load("nsp.json", ExperimentKind::Nsp);
    const auto rows = run_nsp(cfg, threads());
    bool ok = cfg.trials == 100;
    std::string detail;
    for (const auto& r : rows) {
      if (r.k < 2 && r.fraction_holding != 0.0) ok = false;
      if (r.k >= 3 && r.fraction_holding < 0.99) ok = false;
      detail += "k=" + std::to_string(r.k) + ":" + fmt(r.fraction_holding) + " ";
    }
    return Verdict{ok, detail};
  });

  criterion(3, "low-rank threshold k > (m+n-r)r", 300.0, [] {
    const auto cfg = load("phase_lowrank.json", ExperimentKind::Phase);
    const PhaseCurve c = run_phase(cfg, threads());
    bool ok = cfg.trials == 200 && cfg.decoder.restarts == 50;
    ok = ok && rate_at(c, 7) >= 0.9 && rate_at(c, 3) <= 0.2;
    std::string detail;
    double best = 0.0;
    for (const auto& r : c.rows) {
      if (r.success_rate < best - 0.05) ok = false;
      best = std::max(best, r.success_rate);
      detail += "k=" + std::to_string(r.k) + ":" + fmt(r.success_rate) + " ";
    }
    return Verdict{ok, detail};
  });

  criterion(4, "concentration bounds dominate", 60.0, [] {
    const auto cfg = load("concentration.json", ExperimentKind::Concentration);
    const auto rep = run_concentration(cfg, threads());
    double worst = 0.0;
    for (const auto& r : rep.rows) {
      worst = std::max({worst, r.single.upper / r.bound_single, r.product.upper / r.bound_product});
    }
    const bool ok = rep.rows.size() == 6 && rep.samples == 1'000'000 && rep.k == 3 && rep.dominated();
    return Verdict{ok, "max ci_hi/bound=" + fmt(worst)};
  });

  criterion(5, "D constant and unit-ball volumes", 5.0, [] {
    bool ok = true;
    double worst = 0.0;
    for (int m = 1; m <= 20; ++m) {
      for (int n = 1; n <= 20; ++n) {
        const double ratio = d_constant(m, n) / std::pow(2.0, (m + n) / 2.0);
        worst = std::max(worst, ratio);
        if (ratio > 1.0) ok = false;
      }
    }
    ok = ok && std::abs(unit_ball_volume(0) - 1.0) <= 1e-12 &&
         std::abs(unit_ball_volume(1) - 2.0) <= 1e-12 &&
         std::abs(unit_ball_volume(2) - std::numbers::pi) <= 1e-12;
    return Verdict{ok, "max D/2^((m+n)/2)=" + fmt(worst)};
  });

  criterion(6, "four-map RIFS dimension", 120.0, [] {
    const auto cfg = load("rifs_four_maps.json", ExperimentKind::Rifs);
    const RifsStudy s = run_rifs(cfg, threads());
    const double want = std::log(1.0 / 3.0) / std::log(0.2);
    const bool ok = cfg.points_per_component == 100'000 && std::abs(s.d - want) <= 1e-6 &&
                    std::abs(s.boxcount_estimate - s.d) <= 0.1 &&
                    std::abs(s.nd_bound - 4.0 * s.d) <= 1e-12;
    return Verdict{ok, "d=" + fmt(s.d) + " boxcount=" + fmt(s.boxcount_estimate) +
                           " bound=" + fmt(s.nd_bound)};
  });

  criterion(7, "box-counting sanity", 120.0, [] {
    Rng rng(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> coords(200'000);
    for (double& c : coords) c = u(rng);
    EstimateOptions opt;
    opt.threads = threads();
    const auto square = estimate_minkowski(PointCloud(2, std::move(coords)), 0.01, 0.2, 11, opt);
    const auto cfg = load("dimension_rank_one.json", ExperimentKind::Dimension);
    const auto rank_one = run_dimension(cfg, threads());
    const bool ok = std::abs(square.slope - 2.0) <= 0.15 &&
                    std::abs(rank_one.estimate.slope - 3.0) <= 0.4;
    return Verdict{ok, "square=" + fmt(square.slope) + " rank-1=" + fmt(rank_one.estimate.slope)};
  });

  criterion(8, "dimension calculus golden table", 5.0, [] {
    using SD = SetDescriptor;
    const auto sp = thresholds(SD::sparse(4, 4, 2));
    const auto lr = thresholds(SD::low_rank(3, 3, 1));
    const auto qr = rect_param(SD::product(SD::orthogonal(3), SD::upper_triangular_sparse(3, 3, 2)));
    const bool ok = rect_param(SD::sparse(4, 4, 2)).rect_param == 2 && sp.k_probabilistic == 3 &&
                    sp.k_unique == 5 && rect_param(SD::low_rank(3, 3, 1)).rect_param == 5 &&
                    lr.k_probabilistic == 6 && lr.k_unique == 9 && qr.rect_param == 5;
    return Verdict{ok, "sparse(" + std::to_string(sp.k_probabilistic) + "," +
                           std::to_string(sp.k_unique) + ") low-rank(" +
                           std::to_string(lr.k_probabilistic) + "," + std::to_string(lr.k_unique) +
                           ") qr-sparse " + std::to_string(qr.rect_param.value_or(-1))};
  });

  criterion(9, "property suites", 120.0, [] {
    std::string failed;
    for (auto [name, check] :
         std::vector<std::pair<std::string, std::function<std::string()>>>{
             {"measurement", linearity_and_adjoint},
             {"projection", projection_optimality},
             {"covering", covering_properties},
             {"holder", holder_homogeneity},
             {"determinism", thread_determinism}}) {
      const std::string what = check();
      if (!what.empty()) failed += name + ":" + what + " ";
    }
    return Verdict{failed.empty(), failed.empty() ? "all properties hold" : failed};
  });

  criterion(10, "Hoelder quotient stability", 60.0, [] {
    const auto cfg = load("holder.json", ExperimentKind::Holder);
    const auto rows = run_holder(cfg, threads());
    double small = -1.0, large = -1.0;
    for (const auto& r : rows) {
      if (r.beta != 0.3 || r.k != 10) continue;
      if (r.pair_count == 1000) small = r.sampled_min;
      if (r.pair_count == 10000) large = r.sampled_min;
    }
    const bool ok = small > 0.0 && large > 0.0 && large <= small && small / large <= 10.0;
    return Verdict{ok, "min@1e3=" + fmt(small) + " min@1e4=" + fmt(large)};
  });

  std::printf("%s: %d criterion failure(s)\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
