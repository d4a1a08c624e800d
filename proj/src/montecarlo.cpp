#include "martin/montecarlo.hpp"

#include <boost/random/discrete_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace martin {

struct JumpSampler::Impl {
    std::vector<Point> jumps;
    boost::random::discrete_distribution<std::size_t, double> dist;
};

JumpSampler::JumpSampler(const JumpMeasure& measure) {
    auto impl = std::make_shared<Impl>();
    std::vector<double> w;
    for (const auto& a : measure.atoms()) {
        impl->jumps.push_back(a.z);
        w.push_back(a.p);
    }
    impl->dist = boost::random::discrete_distribution<std::size_t, double>(w.begin(), w.end());
    impl_ = std::move(impl);
}

const Point& JumpSampler::operator()(std::mt19937_64& rng) const {
    return impl_->jumps[impl_->dist(rng)];
}

PathExit simulate_until_exit(const WalkSpec& spec, const CoordSet& lambda, const Point& x, std::int64_t horizon,
                             std::mt19937_64& rng) {
    return simulate_until_exit(spec, lambda, x, horizon, rng, JumpSampler(spec.measure));
}

PathExit simulate_until_exit(const WalkSpec& spec, const CoordSet& lambda, const Point& x, std::int64_t horizon,
                             std::mt19937_64& rng, const JumpSampler& sampler) {
    if (!spec.in_state_space(x)) throw DomainError("simulate_until_exit: start " + to_string(x) + " is not a state");
    PathExit out;
    out.state = x;
    const auto kill = spec.kill_set.elements();
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const Point& z = sampler(rng);
        for (std::size_t i = 0; i < z.size(); ++i) out.state[i] += z[i];
        bool dead = false;
        for (int i : kill) dead = dead || out.state[static_cast<std::size_t>(i)] <= 0;
        if (dead) {
            bool lam = false;
            for (int i : lambda.elements()) lam = lam || out.state[static_cast<std::size_t>(i)] <= 0;
            out.kind = lam ? ExitType::KilledLambda : ExitType::KilledComplement;
            out.time = t;
            return out;
        }
    }
    out.kind = ExitType::Censored;
    out.time = horizon;
    return out;
}

namespace {

struct BlockStats {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double abs_sum = 0.0;
    double abs_max = 0.0;
    std::int64_t censored = 0;
};

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

McEstimate run_paths(const McOptions& opt, const std::function<double(std::mt19937_64&, bool&)>& path) {
    if (opt.n < 1) throw DomainError("monte carlo: need at least one path");
    const std::int64_t bs = std::max<std::int64_t>(1, opt.block_size);
    const std::int64_t nblocks = (opt.n + bs - 1) / bs;
    std::vector<BlockStats> stats(static_cast<std::size_t>(nblocks));

    auto run_block = [&](std::int64_t b) {
        auto rng = block_engine(opt.seed, static_cast<std::uint64_t>(b));
        BlockStats s;
        const std::int64_t count = std::min(bs, opt.n - b * bs);
        for (std::int64_t k = 0; k < count; ++k) {
            bool censored = false;
            const double v = path(rng, censored);
            s.censored += censored ? 1 : 0;
            ++s.n;
            const double delta = v - s.mean;
            s.mean += delta / static_cast<double>(s.n);
            s.m2 += delta * (v - s.mean);
            s.abs_sum += std::abs(v);
            s.abs_max = std::max(s.abs_max, std::abs(v));
        }
        stats[static_cast<std::size_t>(b)] = s;
    };

    int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::int64_t>(threads, nblocks));
    if (threads <= 1) {
        for (std::int64_t b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::int64_t b = next++; b < nblocks; b = next++) run_block(b);
            });
        }
        for (auto& th : pool) th.join();
    }

    // Combine in block order (Chan et al. pairwise update).
    BlockStats tot;
    for (const auto& s : stats) {
        if (s.n == 0) continue;
        const auto n = tot.n + s.n;
        const double delta = s.mean - tot.mean;
        tot.mean += delta * static_cast<double>(s.n) / static_cast<double>(n);
        tot.m2 += s.m2 + delta * delta * static_cast<double>(tot.n) * static_cast<double>(s.n) / static_cast<double>(n);
        tot.n = n;
        tot.abs_sum += s.abs_sum;
        tot.abs_max = std::max(tot.abs_max, s.abs_max);
        tot.censored += s.censored;
    }
    McEstimate e;
    e.mean = tot.mean;
    e.n_samples = tot.n;
    e.std_error = tot.n > 1 ? std::sqrt(tot.m2 / static_cast<double>(tot.n - 1) / static_cast<double>(tot.n)) : 0.0;
    e.censored_fraction = static_cast<double>(tot.censored) / static_cast<double>(tot.n);
    e.seed = opt.seed;
    e.horizon = opt.horizon;
    e.max_share = tot.abs_sum > 0.0 ? tot.abs_max / tot.abs_sum : 0.0;
    return e;
}

McEstimate estimate_exit_functional(const WalkSpec& spec, const CoordSet& lambda, const Point& x,
                                    const std::function<double(const Point&)>& reward, ExitEvent event,
                                    const McOptions& opt) {
    if (!spec.in_state_space(x)) throw DomainError("estimate_exit_functional: start is not a state");
    const JumpSampler sampler(spec.measure);
    return run_paths(opt, [&](std::mt19937_64& rng, bool& censored) {
        const auto ex = simulate_until_exit(spec, lambda, x, opt.horizon, rng, sampler);
        censored = ex.kind == ExitType::Censored;
        if (censored) return 0.0;
        if (event == ExitEvent::BeforeLambda && ex.kind != ExitType::KilledComplement) return 0.0;
        return reward(ex.state);
    });
}

McEstimate estimate_exp_moment(const WalkSpec& spec, const CoordSet& lambda, const Point& x, double eps,
                               const McOptions& opt, bool lambda_norm) {
    if (eps < 0.0) throw DomainError("estimate_exp_moment: eps must be nonnegative");
    return estimate_exit_functional(
        spec, lambda, x,
        [&](const Point& w) {
            double n2 = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (lambda_norm && !lambda.contains(static_cast<int>(i))) continue;
                n2 += static_cast<double>(w[i] * w[i]);
            }
            return std::exp(eps * std::sqrt(n2));
        },
        ExitEvent::BeforeLambda, opt);
}

McEstimate estimate_hitting(const WalkSpec& spec, const Point& x, const Point& target, const McOptions& opt) {
    if (!spec.in_state_space(x)) throw DomainError("estimate_hitting: start is not a state");
    if (x == target) {
        McEstimate e;
        e.mean = 1.0;
        e.n_samples = opt.n;
        e.seed = opt.seed;
        e.horizon = opt.horizon;
        return e;
    }
    const JumpSampler sampler(spec.measure);
    const auto kill = spec.kill_set.elements();
    return run_paths(opt, [&](std::mt19937_64& rng, bool& censored) {
        Point s = x;
        for (std::int64_t t = 1; t <= opt.horizon; ++t) {
            const Point& z = sampler(rng);
            for (std::size_t i = 0; i < z.size(); ++i) s[i] += z[i];
            for (int i : kill) {
                if (s[static_cast<std::size_t>(i)] <= 0) return 0.0;
            }
            if (s == target) return 1.0;
        }
        censored = true;
        return 0.0;
    });
}

DoublingReport doubling_check(const std::function<McEstimate(const McOptions&)>& estimator, McOptions opt,
                              int levels, double max_share) {
    DoublingReport rep;
    for (int l = 0; l < levels; ++l) {
        rep.levels.push_back(estimator(opt));
        opt.n *= 2;
        opt.seed += 0x9e3779b97f4a7c15ull;
    }
    if (rep.levels.size() < 2) {
        rep.stable = true;
        return rep;
    }
    const auto& a = rep.levels[rep.levels.size() - 2];
    const auto& b = rep.levels.back();
    const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    rep.stable = std::abs(a.mean - b.mean) <= 3.0 * se && b.max_share <= max_share;
    return rep;
}

void write_estimate_csv(std::ostream& out, const std::string& label, const McEstimate& e, bool header) {
    if (header) out << "label,mean,std_error,n,seed,horizon,censored_fraction,max_share\n";
    out.precision(17);
    out << label << ',' << e.mean << ',' << e.std_error << ',' << e.n_samples << ',' << e.seed << ',' << e.horizon
        << ',' << e.censored_fraction << ',' << e.max_share << '\n';
}

}  // namespace martin
