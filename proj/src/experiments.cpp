#include "martin/experiments.hpp"

#include "martin/genfun.hpp"
#include "martin/green.hpp"
#include "martin/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace martin {

namespace {

Point read_point(const nlohmann::json& j, const char* key) {
    Point p;
    for (const auto& v : j.at(key)) p.push_back(v.get<std::int64_t>());
    return p;
}

Point read_point_or(const nlohmann::json& j, const char* key, Point fallback) {
    return j.contains(key) ? read_point(j, key) : fallback;
}

JumpMeasure inline_measure(const nlohmann::json& m) {
    const int d = m.at("dim").get<int>();
    std::vector<Atom> atoms;
    for (const auto& row : m.at("atoms")) {
        if (static_cast<int>(row.size()) != d + 1) throw ValidationError("config: each atom needs d coordinates and a weight");
        Atom a;
        for (int i = 0; i < d; ++i) a.z.push_back(row[static_cast<std::size_t>(i)].get<std::int64_t>());
        a.p = row[static_cast<std::size_t>(d)].get<double>();
        atoms.push_back(std::move(a));
    }
    return JumpMeasure(d, std::move(atoms));
}

nlohmann::json measure_json(const JumpMeasure& m) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : m.atoms()) {
        nlohmann::json row = nlohmann::json::array();
        for (auto c : a.z) row.push_back(c);
        row.push_back(a.p);
        atoms.push_back(row);
    }
    return {{"dim", m.dim()}, {"atoms", atoms}};
}

void require_dim(const Point& p, int d, const char* what) {
    if (static_cast<int>(p.size()) != d) throw ValidationError(std::string("config: ") + what + " has the wrong dimension");
}

ExperimentReport new_report(const ExperimentConfig& cfg) {
    ExperimentReport r;
    r.kind = cfg.kind;
    r.config = cfg.raw;
    r.config_hash = config_hash(cfg.raw);
    r.seed = cfg.seed;
    return r;
}

void finish(ExperimentReport& r, const ExperimentConfig& cfg) {
    std::sort(r.rows.begin(), r.rows.end(), [](const ReportRow& a, const ReportRow& b) { return a.n < b.n; });
    std::string why;
    r.pass = trend_verdict(r.rows, cfg.threshold, cfg.monotone, why);
    r.verdict = why;
}

double value_at(const AbsorbingSystem& sys, const Eigen::VectorXd& col, const Point& x) {
    const auto k = sys.state_index(x);
    if (k < 0) throw DomainError("scan: " + to_string(x) + " is not a state of the truncated walk");
    return col[k];
}

double relative_bound(const AbsorbingSystem& sys, const Eigen::VectorXd& col, const Point& x, const Point& y) {
    return target_error_bound(sys, x, y) / value_at(sys, col, x);
}

Point add(const Point& a, const Point& b) {
    Point c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

}  // namespace

std::uint64_t config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

JumpMeasure config_measure(const nlohmann::json& j, const std::string& dir) {
    if (j.contains("measure")) return inline_measure(j.at("measure"));
    if (j.contains("measure_file")) {
        std::filesystem::path p = j.at("measure_file").get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(dir) / p;
        return load_measure(p.string());
    }
    throw ValidationError("config: needs `measure` or `measure_file`");
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::string& dir) {
    ExperimentConfig c;
    c.kind = j.at("kind").get<std::string>();
    c.measure = config_measure(j, dir);
    const int d = c.measure.dim();
    c.raw = j;
    c.raw.erase("measure_file");
    c.raw["measure"] = measure_json(c.measure);

    if (j.contains("direction")) {
        const auto& q = j.at("direction");
        if (static_cast<int>(q.size()) != d) throw ValidationError("config: direction has the wrong dimension");
        c.direction = Vector(d);
        for (int i = 0; i < d; ++i) c.direction[i] = q[static_cast<std::size_t>(i)].get<double>();
    } else {
        c.direction = c.measure.mean();
    }
    if (c.direction.minCoeff() < -1e-12) throw ValidationError("config: direction must have nonnegative coordinates");
    if (c.direction.norm() == 0.0) throw ValidationError("config: direction is zero (zero mean needs an explicit direction)");
    c.direction /= c.direction.norm();
    for (int i = 0; i < d; ++i) {
        if (std::abs(c.direction[i]) < 1e-12) c.direction[i] = 0.0;
    }

    c.base = read_point_or(j, "base", Point(static_cast<std::size_t>(d), 1));
    require_dim(c.base, d, "base");
    c.step = j.value("step", 1.0);
    c.ns = j.value("ns", std::vector<std::int64_t>{20, 40, 80, 160});
    c.x = read_point_or(j, "x", {});
    c.x0 = read_point_or(j, "x0", Point(static_cast<std::size_t>(d), 1));
    c.xp = read_point_or(j, "xp", c.base);
    c.shift = read_point_or(j, "shift", Point(static_cast<std::size_t>(d), 0));
    c.y = read_point_or(j, "y", {});
    c.y2 = read_point_or(j, "y2", {});
    c.radii = j.value("radii", std::vector<std::int64_t>{2, 4, 8});
    c.delta = j.value("delta", 0.5);
    if (j.contains("lambda")) {
        std::vector<int> idx;
        for (const auto& v : j.at("lambda")) {
            const int i = v.get<int>();
            if (i < 1 || i > d) throw ValidationError("config: lambda index out of range");
            idx.push_back(i - 1);
        }
        c.lambda = CoordSet::of(d, idx);
    }
    c.threshold = j.value("threshold", 0.05);
    c.monotone = j.value("monotone", true);
    c.margin_min = j.value("margin_min", std::int64_t{40});
    c.margin_factor = j.value("margin_factor", 6.0);
    c.harmonic_side = j.value("harmonic_side", std::int64_t{0});
    c.seed = j.value("seed", std::uint64_t{1});
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    nlohmann::json j;
    const std::string first = [&] {
        std::string line;
        std::getline(in, line);
        return line;
    }();
    in.seekg(0);
    if (first.rfind("# config:", 0) == 0) {
        j = config_from_report(in);
    } else {
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("config " + path + ": " + e.what());
        }
    }
    return parse_config(j, std::filesystem::path(path).parent_path().string());
}

std::vector<Point> scan_points(const ExperimentConfig& cfg, const CoordSet& kill) {
    std::vector<Point> out;
    const int d = cfg.measure.dim();
    for (auto n : cfg.ns) {
        Point p(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            p[ii] = std::llround(static_cast<double>(cfg.base[ii]) + static_cast<double>(n) * cfg.step * cfg.direction[i]);
            if (kill.contains(i)) p[ii] = std::max<std::int64_t>(1, p[ii]);
        }
        out.push_back(p);
    }
    return out;
}

Box scan_box(const JumpMeasure& measure, const CoordSet& kill, const std::vector<Point>& points,
             std::int64_t margin_min, double margin_factor) {
    if (points.empty()) throw DomainError("scan_box: no points");
    const int d = measure.dim();
    double dist = 0.0;
    for (const auto& p : points) dist = std::max(dist, euclidean_norm(p));
    const double drift = measure.mean().norm();
    const double travel = drift > 1e-12 ? (dist + 1.0) / drift : (dist + 1.0) * (dist + 1.0);
    Point lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double second = 0.0;
        for (const auto& a : measure.atoms()) second += a.p * static_cast<double>(a.z[ii] * a.z[ii]);
        const double var = std::max(0.0, second - measure.mean()[i] * measure.mean()[i]);
        const auto margin = std::max<std::int64_t>(margin_min, static_cast<std::int64_t>(std::ceil(margin_factor * std::sqrt(var * travel))));
        std::int64_t mn = points.front()[ii], mx = mn;
        for (const auto& p : points) {
            mn = std::min(mn, p[ii]);
            mx = std::max(mx, p[ii]);
        }
        lo[ii] = kill.contains(i) ? 1 : mn - margin;
        hi[ii] = mx + margin;
    }
    return Box(lo, hi);
}

bool trend_verdict(const std::vector<ReportRow>& rows, double threshold, bool monotone, std::string& why) {
    if (rows.empty()) {
        why = "no rows";
        return false;
    }
    if (monotone) {
        const std::size_t first = rows.size() > 4 ? rows.size() - 4 : 0;
        for (std::size_t k = first + 1; k < rows.size(); ++k) {
            if (rows[k].deviation > rows[k - 1].deviation) {
                why = "deviation increases from n=" + std::to_string(rows[k - 1].n) + " to n=" + std::to_string(rows[k].n);
                return false;
            }
        }
    }
    const double last = rows.back().deviation;
    if (!(last <= threshold)) {
        std::ostringstream s;
        s << "final deviation " << last << " exceeds " << threshold;
        why = s.str();
        return false;
    }
    std::ostringstream s;
    s << "final deviation " << last << " <= " << threshold;
    why = s.str();
    return true;
}

ExperimentReport martin_convergence(const ExperimentConfig& cfg) {
    const int d = cfg.measure.dim();
    require_dim(cfg.x, d, "x");
    require_dim(cfg.x0, d, "x0");
    const WalkSpec spec = WalkSpec::killed(cfg.measure);
    if (!spec.in_state_space(cfg.x) || !spec.in_state_space(cfg.x0)) throw DomainError("convergence: x and x0 must be states");

    const std::int64_t side = cfg.harmonic_side > 0 ? cfg.harmonic_side : (d <= 2 ? 200 : 50);
    const auto h = build_directional(spec, cfg.direction, Box::cube(d, 1, side));
    const double reference = h(cfg.x) / h(cfg.x0);

    ExperimentReport r = new_report(cfg);
    const auto pts = scan_points(cfg, spec.kill_set);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& xn = pts[k];
        const Box box = scan_box(cfg.measure, spec.kill_set, {cfg.x, cfg.x0, xn}, cfg.margin_min, cfg.margin_factor);
        const AbsorbingSystem sys(spec, box);
        const Eigen::VectorXd col = sys.green_column(xn);
        const double kx = value_at(sys, col, cfg.x) / value_at(sys, col, cfg.x0);
        ReportRow row;
        row.n = cfg.ns[k];
        row.norm = euclidean_norm(xn);
        row.measured = kx;
        row.reference = reference;
        row.deviation = std::abs(kx - reference);
        row.certificate = kx * (relative_bound(sys, col, cfg.x, xn) + relative_bound(sys, col, cfg.x0, xn));
        r.rows.push_back(row);
    }
    finish(r, cfg);
    return r;
}

ExperimentReport ratio_limit_scan(const ExperimentConfig& cfg) {
    const int d = cfg.measure.dim();
    require_dim(cfg.x, d, "x");
    require_dim(cfg.shift, d, "shift");
    const CoordSet lambda = cfg.lambda.value_or(zero_coordinates(cfg.measure.mean()));
    for (int i : lambda.elements()) {
        if (cfg.shift[static_cast<std::size_t>(i)] != 0) {
            throw DomainError("ratio: the shift must vanish on Lambda = " + lambda.to_string());
        }
    }
    const WalkSpec spec(cfg.measure, lambda);
    const Point xw = add(cfg.x, cfg.shift);
    if (!spec.in_state_space(cfg.x) || !spec.in_state_space(xw)) throw DomainError("ratio: x and x + w must be states");

    ExperimentReport r = new_report(cfg);
    const auto pts = scan_points(cfg, lambda);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& xn = pts[k];
        const Box box = scan_box(cfg.measure, lambda, {cfg.x, xw, xn}, cfg.margin_min, cfg.margin_factor);
        const AbsorbingSystem sys(spec, box);
        const Eigen::VectorXd col = sys.green_column(xn);
        const double ratio = value_at(sys, col, xw) / value_at(sys, col, cfg.x);
        ReportRow row;
        row.n = cfg.ns[k];
        row.norm = euclidean_norm(xn);
        row.measured = ratio;
        row.reference = 1.0;
        row.deviation = std::abs(ratio - 1.0);
        row.certificate = ratio * (relative_bound(sys, col, xw, xn) + relative_bound(sys, col, cfg.x, xn));
        r.rows.push_back(row);
    }
    finish(r, cfg);
    return r;
}

ExperimentReport ld_rate_scan(const ExperimentConfig& cfg) {
    const int d = cfg.measure.dim();
    require_dim(cfg.xp, d, "xp");
    const CoordSet lambda = cfg.lambda.value_or(CoordSet::all(d));
    const WalkSpec spec(cfg.measure, lambda);
    if (!spec.in_state_space(cfg.xp)) throw DomainError("ldrate: x' must be a state");
    const GenFun gf(cfg.measure);
    const double reference = -quasipotential(gf, cfg.direction, Vector::Zero(d));

    ExperimentReport r = new_report(cfg);
    const auto pts = scan_points(cfg, lambda);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& xn = pts[k];
        const Box box = scan_box(cfg.measure, lambda, {cfg.xp, xn}, cfg.margin_min, cfg.margin_factor);
        double log_g = 0.0, rel = 0.0;
        {
            const AbsorbingSystem sys(spec, box);
            const Eigen::VectorXd col = sys.green_column(xn);
            const double g = value_at(sys, col, cfg.xp);
            if (g > 1e-280) {
                log_g = std::log(g);
                rel = relative_bound(sys, col, cfg.xp, xn);
            } else {
                // log domain: G(x', x_n) = e^{-a.(x_n - x')} G_a(x', x_n) with a = a(q)
                const Vector a = solve_direction(gf, cfg.direction).a;
                const AbsorbingSystem tw(twist(spec, a), box);
                const Eigen::VectorXd cola = tw.green_column(xn);
                Vector diff(d);
                for (int i = 0; i < d; ++i) diff[i] = static_cast<double>(xn[static_cast<std::size_t>(i)] - cfg.xp[static_cast<std::size_t>(i)]);
                log_g = std::log(value_at(tw, cola, cfg.xp)) - a.dot(diff);
                rel = relative_bound(tw, cola, cfg.xp, xn);
            }
        }
        ReportRow row;
        row.n = cfg.ns[k];
        row.norm = euclidean_norm(xn);
        row.measured = log_g / row.norm;
        row.reference = reference;
        row.deviation = std::abs(row.measured - reference);
        row.certificate = std::log1p(rel) / row.norm;
        r.rows.push_back(row);
    }
    finish(r, cfg);
    return r;
}

ExperimentReport renewal_dominance_scan(const ExperimentConfig& cfg) {
    const int d = cfg.measure.dim();
    require_dim(cfg.x, d, "x");
    const CoordSet lambda = zero_coordinates(cfg.measure.mean());
    if (cfg.lambda && *cfg.lambda != lambda) throw DomainError("renewal: Lambda must equal Lambda(M) = " + lambda.to_string());
    const WalkSpec spec_z = WalkSpec::killed(cfg.measure);

    ExperimentReport r = new_report(cfg);
    const auto pts = scan_points(cfg, spec_z.kill_set);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Point& xn = pts[k];
        double factor = cfg.margin_factor;
        RenewalSplit s;
        for (int attempt = 0;; ++attempt) {
            const Box box = scan_box(cfg.measure, lambda, {cfg.x, xn}, cfg.margin_min, factor);
            try {
                s = renewal_split(spec_z, lambda, cfg.x, xn, cfg.delta, box);
                break;
            } catch (const DomainError&) {
                if (attempt == 2) throw;
                factor *= 1.5;
            }
        }
        ReportRow row;
        row.n = cfg.ns[k];
        row.norm = euclidean_norm(xn);
        row.measured = s.main / s.green;
        row.reference = 1.0;
        row.deviation = std::abs(row.measured - 1.0);
        row.certificate = s.relative_error;
        r.rows.push_back(row);
    }
    finish(r, cfg);
    return r;
}

MetricValue martin_metric(const WalkSpec& spec, const Point& y, const Point& yp, const Point& x0, std::int64_t radius,
                          const Box& box, const SolverOptions& opt) {
    if (radius < 1) throw DomainError("martin_metric: probe radius must be positive");
    const int d = spec.dim();
    const Box probes = Box::cube(d, 1, radius);
    if (!box.contains(probes.hi()) || !box.contains(y) || !box.contains(yp) || !box.contains(x0)) {
        throw DomainError("martin_metric: box must contain the probes, y, y' and x0");
    }
    const AbsorbingSystem sys(spec, box, opt);
    const Eigen::VectorXd gy = sys.green_column(y);
    const Eigen::VectorXd gyp = sys.green_column(yp);
    const double gy0 = value_at(sys, gy, x0), gyp0 = value_at(sys, gyp, x0);
    MetricValue out;
    for (std::int64_t k = 0; k < probes.volume(); ++k) {
        const Point x = probes.point(k);
        const Eigen::VectorXd gx = sys.green_column(x);
        const double hit = value_at(sys, gx, x0) / value_at(sys, gx, x);
        double sum = 0.0;
        for (auto c : x) sum += static_cast<double>(c);
        const double w = std::exp(-sum) * hit;
        const double kdiff = std::abs(value_at(sys, gy, x) / gy0 - value_at(sys, gyp, x) / gyp0);
        const double ddiff = std::abs((x == y ? 1.0 : 0.0) - (x == yp ? 1.0 : 0.0));
        out.value += w * (kdiff + ddiff);
    }
    // w_x (|K - K'| + |delta - delta'|) <= 2 e^{-sum x^i} since w_x K(x, .) <= e^{-sum x^i}
    const double all = 1.0 / (std::exp(1.0) - 1.0);
    const double kept = all * (1.0 - std::exp(-static_cast<double>(radius)));
    out.remainder = 2.0 * (std::pow(all, d) - std::pow(kept, d));
    return out;
}

ExperimentReport metric_scan(const ExperimentConfig& cfg) {
    const int d = cfg.measure.dim();
    require_dim(cfg.y, d, "y");
    require_dim(cfg.y2, d, "y2");
    require_dim(cfg.x0, d, "x0");
    if (cfg.radii.empty()) throw ValidationError("metric: radii must not be empty");
    const WalkSpec spec = WalkSpec::killed(cfg.measure);
    const std::int64_t rmax = *std::max_element(cfg.radii.begin(), cfg.radii.end());
    const Box box = scan_box(cfg.measure, spec.kill_set, {cfg.y, cfg.y2, cfg.x0, Point(static_cast<std::size_t>(d), rmax)},
                             cfg.margin_min, cfg.margin_factor);
    ExperimentReport r = new_report(cfg);
    std::vector<MetricValue> vals;
    for (auto rad : cfg.radii) vals.push_back(martin_metric(spec, cfg.y, cfg.y2, cfg.x0, rad, box));
    for (std::size_t k = 0; k < vals.size(); ++k) {
        ReportRow row;
        row.n = cfg.radii[k];
        row.norm = std::pow(static_cast<double>(cfg.radii[k]), d);
        row.measured = vals[k].value;
        row.reference = vals.back().value;
        row.deviation = std::abs(vals[k].value - vals.back().value);
        row.certificate = vals[k].remainder;
        r.rows.push_back(row);
    }
    std::sort(r.rows.begin(), r.rows.end(), [](const ReportRow& a, const ReportRow& b) { return a.n < b.n; });
    r.pass = true;
    r.verdict = "every truncation within its remainder";
    for (const auto& row : r.rows) {
        if (row.deviation > row.certificate) {
            r.pass = false;
            r.verdict = "radius " + std::to_string(row.n) + " deviates beyond its remainder";
        }
    }
    if (cfg.y == cfg.y2 && r.rows.back().measured != 0.0) {
        r.pass = false;
        r.verdict = "distance of a point to itself is not zero";
    }
    return r;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind == "convergence") return martin_convergence(cfg);
    if (cfg.kind == "ratio") return ratio_limit_scan(cfg);
    if (cfg.kind == "ldrate") return ld_rate_scan(cfg);
    if (cfg.kind == "renewal") return renewal_dominance_scan(cfg);
    if (cfg.kind == "metric") return metric_scan(cfg);
    throw ValidationError("unknown experiment kind `" + cfg.kind + "`");
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "# config: " << report.config.dump() << '\n';
    out << "# config_hash: " << report.config_hash << '\n';
    out << "# seed: " << report.seed << '\n';
    out << "# verdict: " << (report.pass ? "PASS" : "FAIL") << ' ' << report.verdict << '\n';
    out << "n,norm,measured,reference,deviation,certificate\n";
    out.precision(17);
    for (const auto& r : report.rows) {
        out << r.n << ',' << r.norm << ',' << r.measured << ',' << r.reference << ',' << r.deviation << ','
            << r.certificate << '\n';
    }
}

nlohmann::json config_from_report(std::istream& in) {
    std::string line;
    const std::string tag = "# config: ";
    while (std::getline(in, line)) {
        if (line.rfind(tag, 0) == 0) return nlohmann::json::parse(line.substr(tag.size()));
    }
    throw ValidationError("report has no `# config:` line");
}

}  // namespace martin
