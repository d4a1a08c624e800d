#include "martin/experiments.hpp"
#include "martin/genfun.hpp"
#include "martin/green.hpp"
#include "martin/harmonic.hpp"
#include "martin/montecarlo.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace martin;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    std::string first;
    std::getline(in, first);
    in.seekg(0);
    if (first.rfind("# config:", 0) == 0) return config_from_report(in);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
}

std::string config_dir(const std::string& path) { return std::filesystem::path(path).parent_path().string(); }

Point point_of(const json& j, const char* key) {
    Point p;
    for (const auto& v : j.at(key)) p.push_back(v.get<std::int64_t>());
    return p;
}

CoordSet lambda_of(const json& j, int d, CoordSet fallback) {
    if (!j.contains("lambda")) return fallback;
    std::vector<int> idx;
    for (const auto& v : j.at("lambda")) idx.push_back(v.get<int>() - 1);
    return CoordSet::of(d, idx);
}

/// Writes to --out when given, otherwise to stdout.
template <class F>
void emit(const Globals& g, F&& write) {
    if (g.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(g.out);
    if (!f) throw ValidationError("cannot write " + g.out);
    write(f);
}

int run_scan(const Globals& g, const std::string& kind) {
    json j = read_json(g.config);
    j["kind"] = kind;
    if (g.seed) j["seed"] = *g.seed;
    if (g.tol) j["threshold"] = *g.tol;
    const auto cfg = parse_config(j, config_dir(g.config));
    const auto report = run_experiment(cfg);
    emit(g, [&](std::ostream& o) { write_report_csv(o, report); });
    std::cerr << kind << ": " << (report.pass ? "PASS " : "FAIL ") << report.verdict << '\n';
    return report.pass ? 0 : 1;
}

int run_validate(const Globals& g) {
    const json j = read_json(g.config);
    const auto m = config_measure(j, config_dir(g.config));
    const auto r = validate(m);
    emit(g, [&](std::ostream& o) {
        o << "check,value\n";
        o << "irreducible," << r.irreducible << '\n';
        o << "finite_support," << r.finite_support << '\n';
        o << "nonzero_mean," << r.nonzero_mean << '\n';
        o << "axis_jumps_on_zero_mean," << r.axis_jumps_on_zero_mean << '\n';
        o << "axis_jumps," << r.axis_jumps << '\n';
        o << "lambda_of_mean," << r.lambda_of_mean.to_string() << '\n';
        o << "communication_constant," << r.communication_constant << '\n';
        o << "window," << r.window << '\n';
        for (const auto& [set, ok] : r.irreducible_by_kill_set) o << "irreducible_kill_set_" << set.to_string() << ',' << ok << '\n';
    });
    std::cerr << "validate: " << (r.standing_assumptions() ? "PASS" : "FAIL") << '\n';
    return r.standing_assumptions() ? 0 : 1;
}

int run_green(const Globals& g) {
    const json j = read_json(g.config);
    const auto m = config_measure(j, config_dir(g.config));
    const int d = m.dim();
    const WalkSpec spec(m, lambda_of(j, d, CoordSet::all(d)));
    const Box box(point_of(j, "box_lo"), point_of(j, "box_hi"));
    const auto table = green_table(spec, point_of(j, "x"), box);
    emit(g, [&](std::ostream& o) { write_green_csv(o, table); });
    const bool pass = !g.tol || table.trunc_error <= *g.tol;
    std::cerr << "green: trunc_error " << table.trunc_error << (table.certified ? " (certified)" : " (uncertified)")
              << (pass ? " PASS" : " FAIL") << '\n';
    return pass ? 0 : 1;
}

int run_harmonic(const Globals& g) {
    const json j = read_json(g.config);
    const auto m = config_measure(j, config_dir(g.config));
    const int d = m.dim();
    const WalkSpec spec = WalkSpec::killed(m);
    const Box box = Box::cube(d, 1, j.value("side", std::int64_t{60}));
    const std::string builder = j.value("builder", std::string("directional"));
    HarmonicFunction h;
    if (builder == "factor") {
        h = build_from_factor(spec, zero_mean_factor(m, 4 * box.hi()[0]), box);
    } else if (builder == "survival") {
        h = build_survival(spec, box);
    } else if (builder == "linear") {
        h = build_linear(spec, box);
    } else if (builder == "coordinate_product") {
        h = build_coordinate_product(spec, box);
    } else if (builder == "directional") {
        Vector q(d);
        const auto& jq = j.at("direction");
        for (int i = 0; i < d; ++i) q[i] = jq[static_cast<std::size_t>(i)].get<double>();
        h = build_directional(spec, q / q.norm(), box);
    } else {
        throw ValidationError("unknown builder `" + builder + "`");
    }
    emit(g, [&](std::ostream& o) { write_harmonic_csv(o, h); });
    const double tol = g.tol.value_or(1e-7);
    const double res = verify_harmonic(h, spec, h.region);
    const double low = verify_positive(h, h.region);
    const bool pass = res <= tol && low > 0.0;
    std::cerr << "harmonic: " << to_string(h.construction) << " residual " << res << " min " << low
              << (pass ? " PASS" : " FAIL") << '\n';
    return pass ? 0 : 1;
}

int run_mc(const Globals& g) {
    const json j = read_json(g.config);
    const auto m = config_measure(j, config_dir(g.config));
    const int d = m.dim();
    const WalkSpec spec = WalkSpec::killed(m);
    const CoordSet lambda = lambda_of(j, d, zero_coordinates(m.mean()));
    const Point x = point_of(j, "x");
    McOptions opt;
    opt.n = j.value("n", std::int64_t{10000});
    opt.horizon = j.value("horizon", std::int64_t{100000});
    opt.seed = g.seed.value_or(j.value("seed", std::uint64_t{1}));
    const std::string event_name = j.value("event", std::string("finite"));
    const ExitEvent event = event_name == "before_lambda" ? ExitEvent::BeforeLambda : ExitEvent::Finite;
    const std::string reward_name = j.value("reward", std::string("one"));
    const double eps = j.value("eps", 0.0);
    std::function<double(const Point&)> reward;
    if (reward_name == "one") {
        reward = [](const Point&) { return 1.0; };
    } else if (reward_name == "lambda_product") {
        reward = [lambda](const Point& w) {
            double v = 1.0;
            for (int i : lambda.elements()) v *= static_cast<double>(w[static_cast<std::size_t>(i)]);
            return v;
        };
    } else if (reward_name == "exp_norm") {
        reward = [eps](const Point& w) { return std::exp(eps * euclidean_norm(w)); };
    } else {
        throw ValidationError("unknown reward `" + reward_name + "`");
    }
    const auto e = estimate_exit_functional(spec, lambda, x, reward, event, opt);
    emit(g, [&](std::ostream& o) { write_estimate_csv(o, reward_name, e, true); });
    bool pass = true;
    if (j.contains("exact_side")) {
        // exact counterpart on a box; the event {tau < tau_Lambda} keeps exits with S^Lambda > 0
        const AbsorbingSystem sys(spec, Box::cube(d, 1, j.at("exact_side").get<std::int64_t>()));
        const Eigen::VectorXd u = sys.solve(sys.exit_rhs([&](const Point& w, ExitKind k) {
            if (k != ExitKind::Killed) return 0.0;
            if (event == ExitEvent::BeforeLambda) {
                for (int i : lambda.elements()) {
                    if (w[static_cast<std::size_t>(i)] <= 0) return 0.0;
                }
            }
            return reward(w);
        }));
        const double exact = u[sys.state_index(x)];
        pass = std::abs(e.mean - exact) <= 3.0 * e.std_error;
        std::cerr << "mc: exact " << exact << " estimate " << e.mean << " +- " << e.std_error << '\n';
    }
    std::cerr << "mc: " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Martin boundary experiments for killed lattice walks"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    double tol = 0.0;
    app.add_option("--config", g.config, "JSON config, or a report CSV to re-run")->required();
    app.add_option("--out", g.out, "output CSV (default stdout)");
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    auto* tol_opt = app.add_option("--tol", tol, "override the verdict threshold");

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"validate", "check the standing assumptions of a measure"},
        {"green", "Green function table with truncation certificate"},
        {"harmonic", "build a harmonic function and verify it"},
        {"convergence", "Martin kernel against the harmonic limit"},
        {"ratio", "ratio limit G(x + w, x_n) / G(x, x_n)"},
        {"ldrate", "logarithmic decay rate of the Green function"},
        {"renewal", "principal part of the renewal equation"},
        {"metric", "truncated Martin metric"},
        {"mc", "Monte Carlo exit functional"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help);
    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed;
    if (*tol_opt) g.tol = tol;

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "validate") return run_validate(g);
        if (cmd == "green") return run_green(g);
        if (cmd == "harmonic") return run_harmonic(g);
        if (cmd == "mc") return run_mc(g);
        return run_scan(g, cmd);
    } catch (const std::exception& e) {
        std::cerr << cmd << ": error: " << e.what() << '\n';
        return 2;
    }
}
