#pragma once

// Per-instance optimal preconditioner parameters by grid search, and
// the (features, optimal parameter) dataset built from them.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symmap/krylov.hpp"
#include "symmap/precond.hpp"
#include "symmap/problems.hpp"

namespace symmap {

enum class ObjectiveKind { Time, Iterations, ConditionNumber, Hybrid };

std::string_view to_string(ObjectiveKind k);
/// Accepts time, iters|iterations, cond|condition, hybrid.
ObjectiveKind parse_objective_kind(std::string_view s);

struct Objective {
    ObjectiveKind kind = ObjectiveKind::Iterations;
    double w_cond = 0.0;   ///< Hybrid only
    double w_time = 1.0;
    double w_iters = 0.0;

    void validate() const;
    bool deterministic() const;
};

/// Everything needed to score one parameter value on one instance.
struct EvalSettings {
    PrecondConfig precond;   ///< kind and the fixed fields; the searched value is overwritten
    SolverConfig solver;
    Objective objective;
    int repeats = 3;         ///< timed solves per point (median taken)
    int cond_steps = 60;
};

/// Writes the searched value into the field it controls (omega for SOR/SSOR,
/// theta for AMG).
PrecondConfig with_param(PrecondConfig cfg, double param);
/// Two-parameter form for AMG with the SOR smoother: (theta, omega).
PrecondConfig with_params(PrecondConfig cfg, double theta, double omega);

/// Objective value, or nullopt when the solve did not converge or threw.
std::optional<double> objective_eval(const ProblemInstance& p, const EvalSettings& s, double param);
std::optional<double> objective_eval(const ProblemInstance& p, const EvalSettings& s, const PrecondConfig& cfg);

using ScalarObjective = std::function<std::optional<double>(double)>;
using PairObjective = std::function<std::optional<double>(double, double)>;

struct SearchPoint {
    double param = 0.0;
    double param2 = 0.0;
    double value = 0.0;   ///< penalty substituted for infeasible points
    bool feasible = false;
};

struct SearchResult {
    double param = 0.0;
    double param2 = 0.0;
    double value = 0.0;
    std::vector<SearchPoint> evaluated;  ///< sorted by parameter
    bool used_fallback = false;          ///< binary search fell back to the grid
};

class NoFeasibleParameter : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPenaltyFactor = 10.0;

/// Coarse sweep, then a fine sweep within +-coarse_step of the three best
/// coarse points. Ties go to the smaller parameter. Throws NoFeasibleParameter
/// if nothing is feasible.
SearchResult adaptive_grid_search(const ScalarObjective& f, ParamRange range, double coarse_step = 0.05,
                                  double fine_step = 0.001);

/// Bracketing search from the two ends and the midpoint. The lowest of the
/// three decides the next probe: an end point pulls the bracket toward it, the
/// midpoint is probed on both sides. Stops when the half-width is <= precision.
/// Falls back to adaptive_grid_search if both ends beat the midpoint.
SearchResult binary_search_min(const ScalarObjective& f, ParamRange range, double precision = 0.001,
                               double fallback_coarse = 0.05, double fallback_fine = 0.001);

/// Product grid at coarse_step, then two local refinements around the best
/// cell (coarse_step/10, then fine_step). An axis with lo == hi stays fixed.
SearchResult product_grid_search(const PairObjective& f, ParamRange r1, ParamRange r2, double coarse_step = 0.05,
                                 double fine_step = 0.001);

enum class SearchMethod { Grid, Binary };
std::string_view to_string(SearchMethod m);
SearchMethod parse_search_method(std::string_view s);

struct SearchConfig {
    SearchMethod method = SearchMethod::Grid;
    double lo = 0.0;
    double hi = 2.0;
    double coarse_step = 0.05;
    double fine_step = 0.001;
    double precision = 0.001;        ///< binary search
    bool two_param = false;          ///< AMG + SOR smoother: (theta, omega)
    double lo2 = 0.0;
    double hi2 = 2.0;

    void validate() const;
};

/// The searched range intersected with the preconditioner's legal range.
ParamRange search_range(PrecondKind kind, double lo, double hi);

/// Optimal parameter(s) for one instance.
SearchResult search_instance(const ProblemInstance& p, const EvalSettings& s, const SearchConfig& sc);

struct DatasetRow {
    std::vector<double> features;
    std::vector<double> targets;     ///< y, or (y, y2) in two-parameter mode
    double objective_value = 0.0;
};

struct ParamDataset {
    std::vector<std::string> feature_names;
    std::vector<DatasetRow> rows;
    std::vector<std::size_t> train;  ///< indices into rows, ascending
    std::vector<std::size_t> test;

    // provenance kept in the metadata sidecar
    std::string family;
    std::string precond;
    std::string objective;
    std::string search;
    std::uint64_t seed = 0;
    std::vector<std::string> log;    ///< dropped instances and other notes

    std::size_t feature_dim() const { return rows.empty() ? feature_names.size() : rows.front().features.size(); }
    std::size_t target_dim() const { return rows.empty() ? 1 : rows.front().targets.size(); }
};

/// Number of training rows under the default 5:1 split: round(5n/6).
std::size_t default_train_count(std::size_t n);

/// Seeded split. test_count < 0 selects the default ratio.
void assign_split(ParamDataset& ds, std::uint64_t seed, long test_count = -1);

struct DatasetConfig {
    EvalSettings eval;
    SearchConfig search;
    std::uint64_t seed = 0;
    long test_count = -1;
    int jobs = 0;  ///< <= 0: OpenMP default, 1: serial
};

/// One row per instance, in input order; instances whose search fails are
/// dropped and noted in ParamDataset::log.
ParamDataset build_dataset(const std::vector<ProblemInstance>& problems, const DatasetConfig& cfg);

// Text formats. The CSV header is x1..xd,y[,y2],objective_value with values
// printed round-trip exact; the sidecar <csv>.meta.json holds everything else.
void write_dataset_csv(const std::string& path, const ParamDataset& ds);
void write_dataset(const std::string& csv_path, const ParamDataset& ds);
ParamDataset read_dataset_csv(const std::string& path);
/// CSV plus sidecar when present; without one, every row is a training row.
ParamDataset read_dataset(const std::string& csv_path);
std::string dataset_meta_path(const std::string& csv_path);

} // namespace symmap
