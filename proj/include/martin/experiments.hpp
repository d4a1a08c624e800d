#ifndef MARTIN_EXPERIMENTS_HPP
#define MARTIN_EXPERIMENTS_HPP

#include "martin/absorbing.hpp"
#include "martin/lattice.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace martin {

/**
 * One scan, read from JSON. Coordinates in `lambda` are 1-based in the file
 * and stored 0-based. Keys:
 *
 *   kind            convergence | ratio | ldrate | renewal | metric
 *   measure_file    path of a measure file, or
 *   measure         {"dim": d, "atoms": [[z1, .., zd, p], ...]}
 *   direction       q (normalised on load); defaults to M / |M|
 *   base, step, ns  x_n = round(base + n step q)
 *   x, x0, xp       probe point, reference point, base point x'
 *   shift           w for the ratio scan
 *   delta           renewal cut
 *   lambda          kill set for ratio / ldrate / renewal
 *   y, y2, radii    metric endpoints and probe-cube sides
 *   threshold       final-deviation bound (default 0.05)
 *   monotone        require nonincreasing deviations (default true)
 *   margin_min, margin_factor, harmonic_side, seed
 */
struct ExperimentConfig {
    nlohmann::json raw;
    std::string kind;
    JumpMeasure measure;
    Vector direction;
    Point base;
    double step = 1.0;
    std::vector<std::int64_t> ns;
    Point x, x0, xp, shift, y, y2;
    std::vector<std::int64_t> radii;
    double delta = 0.5;
    std::optional<CoordSet> lambda;
    double threshold = 0.05;
    bool monotone = true;
    std::int64_t margin_min = 40;
    double margin_factor = 6.0;
    std::int64_t harmonic_side = 0;  // 0: chosen from the dimension
    std::uint64_t seed = 1;
};

/// Measure from `measure` (inline) or `measure_file` (relative to `dir`).
JumpMeasure config_measure(const nlohmann::json& j, const std::string& dir = ".");

/// Relative paths in measure_file resolve against `dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& dir = ".");
ExperimentConfig load_config(const std::string& path);

std::uint64_t config_hash(const nlohmann::json& j);

struct ReportRow {
    std::int64_t n = 0;
    double norm = 0.0;         // |x_n|
    double measured = 0.0;
    double reference = 0.0;
    double deviation = 0.0;
    double certificate = 0.0;  // truncation bound attached to the measured value
};

struct ExperimentReport {
    std::string kind;
    nlohmann::json config;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<ReportRow> rows;
    bool pass = false;
    std::string verdict;
};

/// x_n for every n of the config; coordinates in the kill set are raised to at least 1.
std::vector<Point> scan_points(const ExperimentConfig& cfg, const CoordSet& kill);

/**
 * Window around `points` for the walk killed on `kill`: lower side 1 on
 * killed coordinates, upper side (and lower side elsewhere) padded by
 * max(margin_min, margin_factor sqrt(var_i T)) with T the travel time.
 */
Box scan_box(const JumpMeasure& measure, const CoordSet& kill, const std::vector<Point>& points,
             std::int64_t margin_min, double margin_factor);

/// Deviations nonincreasing over the last three doublings (when `monotone`) and final <= threshold.
bool trend_verdict(const std::vector<ReportRow>& rows, double threshold, bool monotone, std::string& why);

/// K(x, x_n) = G(x, x_n) / G(x0, x_n) against h_q(x) / h_q(x0).
ExperimentReport martin_convergence(const ExperimentConfig& cfg);
/// G_L(x + w, x_n) / G_L(x, x_n) against 1; w^L must vanish.
ExperimentReport ratio_limit_scan(const ExperimentConfig& cfg);
/// log G_L(x', x_n) / |x_n| against -sup_{a in D} a.q.
ExperimentReport ld_rate_scan(const ExperimentConfig& cfg);
/// Principal part over G(x, x_n) against 1, L = Lambda(M).
ExperimentReport renewal_dominance_scan(const ExperimentConfig& cfg);
/// d_M(y, y2) over growing probe cubes; deviation from the largest cube within each remainder.
ExperimentReport metric_scan(const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct MetricValue {
    double value = 0.0;
    double remainder = 0.0;  // bound on the omitted probes
};

/**
 * Truncated Martin metric sum_{x in {1..r}^d} w_x (|K(x,y) - K(x,y')| + |1{x=y} - 1{x=y'}|)
 * with w_x = e^{-sum x^i} P_{x0}(hit x), computed on `box`.
 */
MetricValue martin_metric(const WalkSpec& spec, const Point& y, const Point& yp, const Point& x0,
                          std::int64_t radius, const Box& box, const SolverOptions& opt = {});

/// Header lines `# config: <json>`, `# config_hash`, `# seed`, `# verdict`, then the rows.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// Config JSON embedded in a report written by write_report_csv.
nlohmann::json config_from_report(std::istream& in);

}  // namespace martin

#endif  // MARTIN_EXPERIMENTS_HPP
