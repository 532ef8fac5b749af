#pragma once

// Experiment runner: configs, sweeps, and CSV/JSON emission.

#include "lowdim/csv.hpp"
#include "lowdim/dimest.hpp"
#include "lowdim/measurement.hpp"
#include "lowdim/recovery.hpp"
#include "lowdim/rifs.hpp"
#include "lowdim/setmodel.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lowdim::harness {

enum class ExperimentKind { Phase, Nsp, Concentration, Rifs, Dimension, Holder };

const char* to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind parse_kind(const std::string& name);

struct KRange {
  int start = 1;
  int end = 1;
  int step = 1;
  std::vector<int> values() const;
};

enum class DecoderKind { BruteForce, Als, Projected };

struct DecoderConfig {
  DecoderKind kind = DecoderKind::BruteForce;
  int restarts = 50;
  int iters = 500;
  double step = -1.0;
  std::uint64_t cap = kDefaultEnumerationCap;
};

/// Optional acceptance check on one row of a sweep.
struct Expectation {
  int k = 0;
  std::optional<double> min_rate;
  std::optional<double> max_rate;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Phase;
  std::uint64_t seed = 0;
  std::optional<SetDescriptor> descriptor;
  std::shared_ptr<const Rifs> rifs;
  KRange k_range;
  int trials = 1;
  DecoderConfig decoder;
  EnsembleLaw law;
  double amplitude = 1.0;
  DecodeTolerances tolerances;
  std::vector<Expectation> expectations;

  // concentration
  Matrix x;
  double radius = 1.0;
  std::vector<double> delta_grid;
  std::size_t samples = 1'000'000;
  int product_k = 3;

  // rifs / dimension
  int points_per_component = 100'000;
  int burn_in = 100;
  std::optional<double> delta_min;
  std::optional<double> delta_max;
  int grid_size = 0;  ///< 0 selects 8 radii per decade
  double dimension_tolerance = 0.15;
  bool export_points = false;
  std::optional<std::filesystem::path> cloud_csv;
  std::size_t points = 100'000;
  std::optional<double> within_radius;

  // holder
  std::vector<double> betas;
  std::vector<std::size_t> pair_counts;
};

/// Validates and fills defaults. Errors carry JSON field paths. When
/// `config_dir` is given, relative file references resolve against it.
ExperimentConfig parse_config(const nlohmann::json& j, ExperimentKind kind,
                              const std::filesystem::path& config_dir = {});

// --- phase -----------------------------------------------------------------

struct TrialRecord {
  int k = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  DecodeStatus status = DecodeStatus::NoneFound;
  double residual = 0.0;     ///< best candidate residual, NaN without candidates
  double error_norm = 0.0;   ///< ||X_hat - X||_F, NaN without candidates
  bool success = false;
  double wall_seconds = 0.0;
};

struct PhaseRow {
  int k = 0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_residual = 0.0;
};

struct PhaseCurve {
  std::vector<PhaseRow> rows;
  std::optional<long long> k_probabilistic;
  std::optional<long long> k_unique;
  std::vector<TrialRecord> trials;
};

PhaseCurve run_phase(const ExperimentConfig& config, int threads = 1);
CsvTable to_csv(const PhaseCurve& curve);

// --- nsp -------------------------------------------------------------------

struct NspRow {
  int k = 0;
  int ensembles_tested = 0;
  double fraction_holding = 0.0;
};

/// Requires a sparse descriptor. CapacityError aborts the sweep.
std::vector<NspRow> run_nsp(const ExperimentConfig& config, int threads = 1);
CsvTable nsp_to_csv(const std::vector<NspRow>& rows);

// --- concentration ---------------------------------------------------------

ConcentrationReport run_concentration(const ExperimentConfig& config, int threads = 1);
CsvTable to_csv(const ConcentrationReport& report);

// --- rifs ------------------------------------------------------------------

struct RifsStudy {
  double d = 0.0;
  double nd_bound = 0.0;
  double boxcount_estimate = 0.0;  ///< largest per-component slope
  int max_component = 0;
  std::vector<DimensionEstimate> per_component;
  AttractorSample sample;
  bool within_tolerance = false;
};

RifsStudy run_rifs(const ExperimentConfig& config, int threads = 1);
nlohmann::json to_json(const RifsStudy& study);

// --- dimension -------------------------------------------------------------

struct DimensionStudy {
  std::size_t points = 0;
  DimensionEstimate estimate;
  std::optional<long long> rect_param;
};

DimensionStudy run_dimension(const ExperimentConfig& config, int threads = 1);
CsvTable to_csv(const DimensionEstimate& estimate);

// --- holder ----------------------------------------------------------------

struct HolderRow {
  double beta = 0.0;
  int k = 0;
  std::size_t pair_count = 0;
  double sampled_min = 0.0;
  bool violates = false;  ///< k at or below dim(U - U) / (1 - beta)
};

std::vector<HolderRow> run_holder(const ExperimentConfig& config, int threads = 1);
CsvTable holder_to_csv(const std::vector<HolderRow>& rows);

// --- driver ----------------------------------------------------------------

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAssertion = 3;

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;
};

/// Runs one experiment and writes `<kind>_<seed>.csv` / `.json` into
/// `out_dir`. Never throws for config, capacity or assertion problems; those
/// map onto exit codes.
RunOutcome run_experiment(ExperimentKind kind, const std::filesystem::path& config_path,
                          const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override, int threads);

}  // namespace lowdim::harness
