#ifndef MARTIN_MONTECARLO_HPP
#define MARTIN_MONTECARLO_HPP

#include "martin/lattice.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>

namespace martin {

enum class ExitType {
    KilledLambda,      // some coordinate in Lambda became <= 0
    KilledComplement,  // killed, but every Lambda coordinate still positive
    Censored,          // still alive at the horizon
};

struct PathExit {
    ExitType kind = ExitType::Censored;
    Point state;
    std::int64_t time = 0;
};

/// Alias-table sampler over the atoms of a jump measure.
class JumpSampler {
public:
    explicit JumpSampler(const JumpMeasure& measure);
    const Point& operator()(std::mt19937_64& rng) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

/**
 * Run the walk of `spec` from x until it leaves the state space or `horizon`
 * steps have been made. Exits are classified against `lambda`.
 */
PathExit simulate_until_exit(const WalkSpec& spec, const CoordSet& lambda, const Point& x, std::int64_t horizon,
                             std::mt19937_64& rng);
PathExit simulate_until_exit(const WalkSpec& spec, const CoordSet& lambda, const Point& x, std::int64_t horizon,
                             std::mt19937_64& rng, const JumpSampler& sampler);

enum class ExitEvent {
    BeforeLambda,  // tau < tau_Lambda
    Finite,        // tau < infinity
};

struct McOptions {
    std::int64_t n = 10000;
    std::int64_t horizon = 100000;
    std::uint64_t seed = 1;
    int threads = 0;               // 0: hardware concurrency
    std::int64_t block_size = 4096;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
    double censored_fraction = 0.0;
    std::uint64_t seed = 0;
    std::int64_t horizon = 0;
    double max_share = 0.0;  // largest |contribution| / sum of |contributions|
};

/**
 * Paths are split into fixed blocks; block b uses its own engine seeded from
 * (seed, b) and block results are combined in block order, so the estimate
 * is bitwise independent of the thread count.
 */
McEstimate run_paths(const McOptions& opt, const std::function<double(std::mt19937_64&, bool&)>& path);

/// E_x[reward(S(tau)); event]; censored paths contribute 0.
McEstimate estimate_exit_functional(const WalkSpec& spec, const CoordSet& lambda, const Point& x,
                                    const std::function<double(const Point&)>& reward, ExitEvent event,
                                    const McOptions& opt);

/// E_x[exp(eps |S(tau)|); tau < tau_Lambda], or with |S^Lambda(tau)| when `lambda_norm`.
McEstimate estimate_exp_moment(const WalkSpec& spec, const CoordSet& lambda, const Point& x, double eps,
                               const McOptions& opt, bool lambda_norm = false);

/// P_x(the walk visits `target` before being killed).
McEstimate estimate_hitting(const WalkSpec& spec, const Point& x, const Point& target, const McOptions& opt);

struct DoublingReport {
    std::vector<McEstimate> levels;
    bool stable = false;
};

/**
 * Re-run an estimator at n, 2n, 4n, ... (fresh seeds per level). Stable when
 * the last two levels agree within 3 combined standard errors and no single
 * path carries more than `max_share` of the total.
 */
DoublingReport doubling_check(const std::function<McEstimate(const McOptions&)>& estimator, McOptions opt,
                              int levels = 4, double max_share = 0.05);

void write_estimate_csv(std::ostream& out, const std::string& label, const McEstimate& e, bool header);

}  // namespace martin

#endif  // MARTIN_MONTECARLO_HPP
