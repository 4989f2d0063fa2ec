#include "mrm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mrm/chaos2d.hpp"
#include "mrm/cone.hpp"
#include "mrm/csv.hpp"
#include "mrm/field.hpp"
#include "mrm/fractal.hpp"
#include "mrm/measure.hpp"
#include "mrm/random.hpp"

namespace fs = std::filesystem;

namespace mrm {

namespace {

class Artifacts {
  public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

    std::ofstream open(const std::string& name, bool binary = false) {
        std::ofstream f(dir_ / name, binary ? std::ios::binary : std::ios::out);
        if (!f) throw ValidationError("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return f;
    }

  private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Context {
    const ExperimentConfig& cfg;
    std::uint64_t seed;
    unsigned threads;
    Artifacts& out;
    std::ostream& log;
    std::vector<std::string> seed_notes;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

EstimatorOptions estimator_options(const Context& c) {
    EstimatorOptions o;
    o.field.resolution = c.cfg.grid.resolution;
    if (const auto* d = std::get_if<DensityJumps>(&c.cfg.model.triple.nu)) o.field.jump_eps = d->eps;
    o.bootstrap = c.cfg.run.bootstrap;
    o.threads = c.threads;
    o.batch = c.cfg.run.batch;
    o.blocks = c.cfg.run.blocks;
    return o;
}

FractalSet make_set_1d(const ExperimentConfig& cfg) {
    switch (cfg.set.kind) {
        case SetChoice::Cantor: return make_cantor(cfg.set.ratio, cfg.set.depth, cfg.grid.length);
        case SetChoice::FullInterval: return make_full_interval(cfg.grid.length);
        case SetChoice::Points: {
            FractalSet s = make_point_set(cfg.set.points);
            s.domain_length = cfg.grid.length;
            return s;
        }
        default: throw ValidationError("set.kind: not a 1D set");
    }
}

Set2D make_set_2d(const ExperimentConfig& cfg) {
    if (cfg.set.kind == SetChoice::CantorDust) return make_cantor_dust(cfg.set.ratio, cfg.set.depth);
    if (cfg.set.kind == SetChoice::FullSquare) return make_full_square();
    throw ValidationError("set.kind: not a 2D set");
}

void write_summary_csv(std::ostream& os, const KpzReport& r) {
    os << "set,delta0,delta_pred,mean,stderr,replicas,discarded,tolerance,pass,outside_hypotheses\n"
       << '"' << r.set << "\"," << csv::num(r.delta0) << ',' << csv::num(r.delta_pred) << ','
       << csv::num(r.mean) << ',' << csv::num(r.std_error) << ',' << r.replicas.size() << ','
       << r.discarded << ',' << csv::num(r.tolerance) << ',' << (r.pass ? 1 : 0) << ','
       << (r.outside_hypotheses ? 1 : 0) << '\n';
}

void emit_kpz(Context& c, const KpzReport& r) {
    {
        auto f = c.out.open("kpz.csv");
        write_kpz_csv(f, r);
    }
    {
        auto f = c.out.open("kpz_summary.csv");
        write_summary_csv(f, r);
    }
    auto f = c.out.open("summary.txt");
    write_kpz_summary(f, r);
    c.log << "delta0 " << csv::num(r.delta0) << " delta_pred " << csv::num(r.delta_pred) << " mean "
          << csv::num(r.mean) << " +- " << csv::num(r.std_error) << (r.pass ? " pass" : " FAIL") << '\n';
}

void cmd_zeta_table(Context& c) {
    const auto& cfg = c.cfg;
    auto f = c.out.open("zeta.csv");
    if (cfg.model.kind == ModelKind::Levy1D) {
        const auto table = exponent_table(cfg.model.triple, cfg.run.q);
        f << "q,psi,zeta\n";
        for (std::size_t i = 0; i < table.qs.size(); ++i)
            f << csv::num(table.qs[i]) << ',' << csv::num(table.psi_vals[i]) << ','
              << csv::num(table.zeta_vals[i]) << '\n';
        auto s = c.out.open("summary.txt");
        s << "triple: " << describe(cfg.model.triple) << "\nq_c: " << csv::num(table.q_c) << '\n';
    } else {
        std::vector<double> qs = cfg.run.q;
        std::sort(qs.begin(), qs.end());
        f << "q,zeta,zeta_mass_consistent\n";
        for (double q : qs)
            f << csv::num(q) << ',' << csv::num(zeta2d(cfg.model.gamma2, q)) << ','
              << csv::num(zeta2d_mass_consistent(cfg.model.gamma2, q)) << '\n';
    }
}

void cmd_simulate_1d(Context& c) {
    const auto& cfg = c.cfg;
    const auto opts = estimator_options(c);
    const auto fits = estimate_zeta(cfg.model.triple, cfg.cone(), cfg.run.q, cfg.run.scales,
                                    cfg.run.replicas, c.seed, opts);
    {
        auto f = c.out.open("moments.csv");
        write_moment_csv(f, fits);
    }
    const auto n = static_cast<std::size_t>(std::ceil(cfg.grid.length * cfg.grid.resolution / cfg.grid.l - 1e-9));
    const FieldMethod method = cfg.run.method.value_or(default_method(cfg.model.triple));
    const FieldSampler sampler(midpoint_grid(cfg.grid.length, n), cfg.cone(), cfg.model.triple, method, opts.field);
    for (std::size_t r = 0; r < cfg.run.dumps; ++r) {
        const Field1D field = sampler.sample(derive_seed(c.seed, "replica", r));
        const MeasureGrid m = build_measure(field);
        std::ostringstream name;
        name << std::setw(3) << std::setfill('0') << r;
        {
            auto f = c.out.open("measure_" + name.str() + ".csv");
            f << "x,omega,mass,cumulative\n";
            for (std::size_t i = 0; i < m.cells(); ++i)
                f << csv::num(m.origin + m.spacing * static_cast<double>(i)) << ',' << csv::num(field.values[i])
                  << ',' << csv::num(m.masses[i]) << ',' << csv::num(m.cumulative[i + 1]) << '\n';
        }
        if (cfg.wants("bin")) {
            auto f = c.out.open("field_" + name.str() + ".bin", true);
            write_field_binary(f, field);
        }
    }
    c.seed_notes.push_back("field dumps use derive_seed(seed, \"replica\", r) for r < " + std::to_string(cfg.run.dumps));
    for (const auto& fit : fits)
        c.log << "q " << csv::num(fit.q) << " zeta_hat " << csv::num(fit.slope) << " +- "
              << csv::num(fit.slope_se) << " analytic " << csv::num(fit.analytic_zeta) << '\n';
}

void cmd_kpz_1d(Context& c) {
    const auto& cfg = c.cfg;
    Kpz1DOptions o;
    o.estimator = estimator_options(c);
    o.tolerance = cfg.run.tolerance.value_or(0.08);
    emit_kpz(c, kpz_verify_1d(make_set_1d(cfg), cfg.model.triple, cfg.cone(), cfg.run.replicas, c.seed,
                              cfg.run.scales, o));
}

void scaling_row(std::ostream& f, const std::string& check, double lambda, double q, double observed,
                 double se, double predicted, double z, bool pass) {
    f << check << ',' << csv::num(lambda) << ',' << csv::num(q) << ',' << csv::num(observed) << ','
      << csv::num(se) << ',' << csv::num(predicted) << ',' << csv::num(z) << ',' << (pass ? 1 : 0) << '\n';
}

void cmd_scaling_check(Context& c) {
    const auto& cfg = c.cfg;
    auto f = c.out.open("scaling.csv");
    f << "check,lambda,q,observed,stderr,predicted,z,pass\n";
    bool all = true;
    if (cfg.model.kind == ModelKind::Levy1D) {
        const auto opts = estimator_options(c);
        for (std::size_t k = 0; k < cfg.run.lambda.size(); ++k) {
            const double lambda = cfg.run.lambda[k];
            const auto si = scale_invariance_check(cfg.cone(), cfg.model.triple, lambda, cfg.run.replicas,
                                                   derive_seed(c.seed, "scale-invariance", k), opts.field);
            scaling_row(f, "variance-gap", lambda, 0.0, si.expected_gap + si.max_variance_gap_error, 0.0,
                        si.expected_gap, 0.0, si.max_variance_gap_error <= 1e-12 * std::max(1.0, cfg.model.triple.sigma2));
            for (const auto& m : si.moments)
                scaling_row(f, "law-" + m.statistic, lambda, 0.0, m.lhs, m.stderr_diff, m.rhs, m.z, m.pass);
            all = all && si.pass;
            for (std::size_t j = 0; j < cfg.run.q.size(); ++j) {
                const double q = cfg.run.q[j];
                const auto g = global_scaling_check(cfg.model.triple, cfg.cone(), lambda, q, cfg.run.replicas,
                                                    derive_seed(c.seed, "global", k * 1000 + j), opts);
                scaling_row(f, "global-moment", lambda, q, g.ratio, g.ratio_se, g.predicted, g.z, g.pass);
                all = all && g.pass;
            }
        }
        c.seed_notes.push_back("scale invariance uses derive_seed(seed, \"scale-invariance\", k); global checks derive_seed(seed, \"global\", 1000 k + j)");
        if (!cfg.run.scales.empty()) {
            const auto fits = estimate_zeta(cfg.model.triple, cfg.cone(), cfg.run.q, cfg.run.scales,
                                            cfg.run.replicas, derive_seed(c.seed, "zeta-fit", 0), opts);
            auto mf = c.out.open("moments.csv");
            write_moment_csv(mf, fits);
            for (const auto& fit : fits) {
                const double z = fit.slope_se > 0 ? (fit.slope - fit.analytic_zeta) / fit.slope_se : 0.0;
                scaling_row(f, "zeta-fit", 1.0, fit.q, fit.slope, fit.slope_se, fit.analytic_zeta, z,
                            std::abs(fit.slope - fit.analytic_zeta) <= cfg.run.tolerance.value_or(0.05));
            }
        }
    } else {
        Ball2DOptions o;
        o.n = cfg.grid.n;
        o.bootstrap = cfg.run.bootstrap;
        o.threads = c.threads;
        o.batch = cfg.run.batch;
        const double l = cfg.grid.l_set ? cfg.grid.l : cfg.model.R / static_cast<double>(cfg.grid.n);
        for (std::size_t k = 0; k < cfg.run.lambda.size(); ++k)
            for (std::size_t j = 0; j < cfg.run.q.size(); ++j) {
                const auto b = ball_mass_scaling_check(cfg.model.gamma2, cfg.model.R, l, cfg.run.lambda[k],
                                                       cfg.run.q[j], cfg.run.replicas,
                                                       derive_seed(c.seed, "ball", k * 1000 + j), o);
                scaling_row(f, "ball-moment", b.lambda, b.q, b.ratio, b.ratio_se, b.predicted, b.z, b.pass);
                scaling_row(f, "ball-moment-mass-consistent", b.lambda, b.q, b.ratio, b.ratio_se,
                            b.predicted_mass_consistent, b.z_mass_consistent, std::abs(b.z_mass_consistent) <= 5);
                all = all && b.pass;
            }
        c.seed_notes.push_back("ball checks use derive_seed(seed, \"ball\", 1000 k + j)");
    }
    c.log << (all ? "all scaling checks pass\n" : "some scaling checks FAIL\n");
}

Kpz2DParams kpz2d_params(const Context& c) {
    const auto& cfg = c.cfg;
    Kpz2DParams p;
    p.kind = cfg.model.kind == ModelKind::Gff2D ? KernelKind::GffDisk : KernelKind::LognormalMrm;
    p.gamma2 = cfg.model.gamma2;
    p.R = cfg.model.R;
    p.r = cfg.model.r;
    p.l = cfg.grid.l_set ? cfg.grid.l : 0.0;
    p.n = cfg.grid.n;
    if (!cfg.run.levels.empty()) p.levels = cfg.run.levels;
    p.base = cfg.run.base;
    p.tolerance = cfg.run.tolerance.value_or(0.1);
    p.threads = c.threads;
    p.batch = cfg.run.batch;
    return p;
}

void run_kpz_2d(Context& c) {
    const Kpz2DParams p = kpz2d_params(c);
    emit_kpz(c, kpz_verify_2d(make_set_2d(c.cfg), p, c.cfg.run.replicas, c.seed));
    if (!c.cfg.wants("bin")) return;
    const auto [grid, kernel] = kpz2d_setup(p);
    for (std::size_t r = 0; r < std::min(c.cfg.run.dumps, c.cfg.run.replicas); ++r) {
        std::ostringstream name;
        name << "field2d_" << std::setw(3) << std::setfill('0') << r << ".bin";
        auto f = c.out.open(name.str(), true);
        write_field2d_binary(f, sample_field2d(grid, kernel, derive_seed(c.seed, "replica", r)));
    }
}

void cmd_kpz_2d(Context& c) { run_kpz_2d(c); }

void cmd_gff_kpz(Context& c) {
    const auto& cfg = c.cfg;
    const double R = cfg.model.R, r = cfg.model.r;
    const auto sw = sandwich_check(cfg.model.gamma2, R, r, 0.5 * (R - r), 24);
    std::vector<Point2> probes;
    Engine rng(derive_seed(c.seed, "harmonic-probes", 0));
    std::uniform_real_distribution<double> u(-0.7 * R, 0.7 * R);
    const Point2 pole{0.1 * R, -0.2 * R};
    while (probes.size() < 50) {
        const Point2 p{u(rng), u(rng)};
        if (std::hypot(p.x, p.y) < 0.7 * R && distance(p, pole) > 0.1 * R) probes.push_back(p);
    }
    const double harm = green_harmonicity_residual(probes, pole, R, 1e-3 * R);
    double boundary = 0.0;
    for (int k = 0; k < 16; ++k) {
        const double a = 2 * M_PI * k / 16;
        const double rad = R * (1 - 1e-6);
        boundary = std::max(boundary, std::abs(green_disk({rad * std::cos(a), rad * std::sin(a)}, pole, R)));
    }
    {
        auto f = c.out.open("gff_kernel.csv");
        f << "quantity,value\n"
          << "sandwich_min," << csv::num(sw.min_diff) << '\n'
          << "sandwich_max," << csv::num(sw.max_diff) << '\n'
          << "sandwich_cauchy_gap," << csv::num(sw.cauchy_gap) << '\n'
          << "sandwich_pass," << (sw.pass ? 1 : 0) << '\n'
          << "harmonicity_residual," << csv::num(harm) << '\n'
          << "boundary_max," << csv::num(boundary) << '\n';
    }
    run_kpz_2d(c);
}

void cmd_geometry_selftest(Context& c) {
    Engine rng(derive_seed(c.seed, "geometry", 0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto f = c.out.open("geometry.csv");
    f << "l,T,tau,analytic,quadrature,abs_err\n";
    double worst = 0.0;
    auto row = [&](double l, double T, double tau) {
        const ConeParams p{l, T};
        const double a = cone_overlap(p, tau), q = cone_overlap_quadrature(p, tau);
        worst = std::max(worst, std::abs(a - q));
        f << csv::num(l) << ',' << csv::num(T) << ',' << csv::num(tau) << ',' << csv::num(a) << ','
          << csv::num(q) << ',' << csv::num(std::abs(a - q)) << '\n';
    };
    const std::size_t count = std::max<std::size_t>(50, std::min<std::size_t>(c.cfg.run.replicas, 1000));
    for (std::size_t k = 0; k < count; ++k) {
        const double T = 0.5 + 1.5 * u(rng);
        const double l = T * std::pow(10.0, -3.0 * u(rng));
        const double tau = 1.5 * T * u(rng);
        row(l, T, tau);
    }
    for (double frac : {1e-3, 0.1, 0.5, 1.0}) row(frac, 1.0, frac);  // seam tau = l
    auto s = c.out.open("summary.txt");
    s << "max_abs_err: " << csv::num(worst) << "\npass: " << (worst <= 1e-8 ? "true" : "false") << '\n';
    c.log << "geometry max |analytic - quadrature| = " << csv::num(worst) << '\n';
    if (worst > 1e-8) throw NumericalError("geometry-selftest: analytic and quadrature overlaps disagree");
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void require_1d(const ExperimentConfig& cfg, std::vector<std::string>& issues, const std::string& cmd) {
    if (cfg.model.kind != ModelKind::Levy1D) issues.push_back("model.kind: " + cmd + " needs kind = levy");
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"zeta-table", "simulate-1d", "kpz-1d", "scaling-check",
                                                   "kpz-2d", "gff-kpz", "geometry-selftest"};
    return names;
}

void validate_for_command(const ExperimentConfig& cfg, const std::string& cmd) {
    std::vector<std::string> issues;
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), cmd) == names.end()) {
        issues.push_back("unknown command '" + cmd + "'");
        throw ConfigError(issues);
    }
    const auto& r = cfg.run;
    const double T = cfg.grid.T, l = cfg.grid.l;
    auto scales_for_zeta = [&] {
        if (r.scales.size() < 4) issues.push_back("run.scales: need at least 4 scales");
        for (double t : r.scales)
            if (t < 32 * l * (1 - 1e-12) || t > T * (1 + 1e-12) || t > cfg.grid.length * (1 + 1e-12))
                issues.push_back("run.scales: " + csv::num(t) + " must lie in [32 l, min(T, length)]");
        if (r.replicas < 100) issues.push_back("run.replicas: moment fits need at least 100 replicas");
        if (!r.scales.empty() && cfg.model.kind == ModelKind::Levy1D) {
            const auto& t = cfg.model.triple;
            const bool gaussian_part = t.sigma2 > 0 || default_method(t) == FieldMethod::TruncatedGeneral;
            const double cells = std::ceil(static_cast<double>(r.blocks) * r.scales.back() * cfg.grid.resolution / l - 1e-9);
            if (gaussian_part && cells > static_cast<double>(kMaxExactGrid))
                issues.push_back("run.blocks: blocks * max scale * resolution / l exceeds the exact grid limit 8192");
        }
        for (double q : r.q)
            if (q < 0) issues.push_back("run.q: moment fits need q >= 0");
    };
    if (cmd == "simulate-1d") {
        require_1d(cfg, issues, cmd);
        scales_for_zeta();
        if (r.method && *r.method != default_method(cfg.model.triple))
            issues.push_back("run.method: only the default method for this triple is supported by simulate-1d");
    } else if (cmd == "kpz-1d") {
        require_1d(cfg, issues, cmd);
        if (cfg.set.kind != SetChoice::Cantor && cfg.set.kind != SetChoice::FullInterval &&
            cfg.set.kind != SetChoice::Points)
            issues.push_back("set.kind: kpz-1d needs cantor, full-interval or points");
        if (r.scales.size() < 4) issues.push_back("run.scales: need at least 4 image-space scales");
        else if (std::log2(r.scales.back() / r.scales.front()) < 3 - 1e-9)
            issues.push_back("run.scales: must span at least 3 octaves");
        for (double t : r.scales)
            if (t > 1) issues.push_back("run.scales: image-space scales are fractions of the total mass, <= 1");
        if (cfg.model.kind == ModelKind::Levy1D) {
            const auto& t = cfg.model.triple;
            const bool lebesgue = t.is_gaussian() && t.sigma2 == 0.0;
            if (!lebesgue && !check_nondegenerate(t).nondegenerate)
                issues.push_back("model: kpz-1d needs a nondegenerate triple");
        }
        if (cfg.set.kind == SetChoice::Cantor && !r.scales.empty() &&
            r.scales.front() < std::pow(cfg.set.ratio, cfg.set.depth))
            issues.push_back("run.scales: finer than the Cantor construction scale");
    } else if (cmd == "scaling-check") {
        if (cfg.model.kind == ModelKind::Levy1D) {
            if (r.replicas < 2) issues.push_back("run.replicas: need at least 2");
            for (double q : r.q)
                if (q < 0) issues.push_back("run.q: need q >= 0");
            if (!r.scales.empty()) scales_for_zeta();
        } else if (cfg.model.kind == ModelKind::Lognormal2D) {
            if (r.replicas < 2) issues.push_back("run.replicas: need at least 2");
            for (double q : r.q)
                if (q < 0 || q > 1) issues.push_back("run.q: ball checks need q in [0, 1]");
            const double h = cfg.model.R / static_cast<double>(cfg.grid.n);
            for (double lam : r.lambda)
                if (lam * 0.5 * cfg.model.R < 16 * h * (1 - 1e-12))
                    issues.push_back("run.lambda: ball of radius lambda R/2 under-resolved (needs >= 16 cells)");
            if (cfg.grid.l_set && cfg.grid.l > cfg.model.R) issues.push_back("grid.l: must be <= R");
        } else {
            issues.push_back("model.kind: scaling-check supports levy and lognormal-2d");
        }
    } else if (cmd == "kpz-2d" || cmd == "gff-kpz") {
        const ModelKind want = cmd == "kpz-2d" ? ModelKind::Lognormal2D : ModelKind::Gff2D;
        if (cfg.model.kind != want)
            issues.push_back(std::string("model.kind: ") + cmd + " needs kind = " +
                             (cmd == "kpz-2d" ? "lognormal-2d" : "gff"));
        if (cfg.set.kind != SetChoice::CantorDust && cfg.set.kind != SetChoice::FullSquare)
            issues.push_back("set.kind: " + cmd + " needs cantor-dust or full-square");
        const auto levels = r.levels.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6} : r.levels;
        if (levels.size() < 3) issues.push_back("run.levels: need at least 3 levels");
        for (int L : levels)
            if (std::pow(static_cast<double>(r.base), L) > static_cast<double>(cfg.grid.n) * (1 + 1e-12))
                issues.push_back("run.levels: level " + std::to_string(L) + " is finer than a grid cell");
        if (cfg.grid.l_set && cfg.grid.l > cfg.model.R) issues.push_back("grid.l: must be <= R");
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

RunResult run_command(const std::string& command, ExperimentConfig cfg, const RunOverrides& ov,
                      std::ostream& log) {
    RunResult res;
    try {
        validate_for_command(cfg, command);
    } catch (const ConfigError& e) {
        res.exit_code = kExitValidation;
        res.errors = e.issues();
        return res;
    }
    const std::uint64_t seed = ov.seed.value_or(cfg.run.seed);
    const unsigned threads = ov.threads.value_or(cfg.run.threads);
    res.out_dir = ov.out.value_or(cfg.output.dir);
    std::error_code ec;
    fs::create_directories(res.out_dir, ec);
    if (ec) {
        res.exit_code = kExitValidation;
        res.errors = {"output.dir: cannot create '" + res.out_dir + "': " + ec.message()};
        return res;
    }
    Artifacts out(res.out_dir);
    Context ctx{cfg, seed, threads, out, log, {}};
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    std::string status = "ok";
    try {
        if (command == "zeta-table") cmd_zeta_table(ctx);
        else if (command == "simulate-1d") cmd_simulate_1d(ctx);
        else if (command == "kpz-1d") cmd_kpz_1d(ctx);
        else if (command == "scaling-check") cmd_scaling_check(ctx);
        else if (command == "kpz-2d") cmd_kpz_2d(ctx);
        else if (command == "gff-kpz") cmd_gff_kpz(ctx);
        else cmd_geometry_selftest(ctx);
    } catch (const ValidationError& e) {
        res.exit_code = kExitValidation;
        res.errors = {e.what()};
        status = "failed";
    } catch (const std::exception& e) {
        res.exit_code = kExitNumerical;
        res.errors = {e.what()};
        status = "failed";
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream m(fs::path(res.out_dir) / "manifest.txt");
    m << "command = " << command << '\n'
      << "status = " << status << '\n'
      << "toolkit_version = " << kToolkitVersion << '\n'
      << "config_hash = fnv1a64:" << hex64(cfg.hash) << '\n'
      << "seed = " << seed << '\n'
      << "replica_seeds = derive_seed(seed, \"replica\", i)\n"
      << "threads = " << threads << '\n'
      << "started_utc = " << started << '\n'
      << "wall_clock_seconds = " << std::fixed << std::setprecision(3) << wall << '\n';
    for (const auto& note : ctx.seed_notes) m << "seed_note = " << note << '\n';
    for (const auto& e : res.errors) m << "error = " << e << '\n';
    for (const auto& f : out.files()) m << "file = " << f << (status == "ok" ? "" : " (partial)") << '\n';
    res.files = out.files();
    res.files.push_back("manifest.txt");
    return res;
}

}  // namespace mrm
