#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

#include "mrm/chaos2d.hpp"
#include "mrm/config.hpp"
#include "mrm/cone.hpp"
#include "mrm/experiment.hpp"
#include "mrm/field.hpp"
#include "mrm/fractal.hpp"
#include "mrm/levy.hpp"
#include "mrm/measure.hpp"
#include "mrm/random.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

mrm::JumpMeasure atoms_to_nu(const std::vector<std::pair<double, double>>& atoms) {
    if (atoms.empty()) return mrm::NoJumps{};
    mrm::AtomicJumps a;
    for (const auto& [x, w] : atoms) a.atoms.push_back({x, w});
    return a;
}

py::dict report_dict(const mrm::KpzReport& r) {
    std::vector<double> est, se;
    std::vector<bool> disc;
    for (const auto& rep : r.replicas) {
        est.push_back(rep.estimate);
        se.push_back(rep.std_error);
        disc.push_back(rep.discarded);
    }
    return py::dict("set"_a = r.set, "delta0"_a = r.delta0, "delta_pred"_a = r.delta_pred,
                    "estimates"_a = to_array(est), "stderrs"_a = to_array(se), "discarded_mask"_a = disc,
                    "discarded"_a = r.discarded, "mean"_a = r.mean, "stderr"_a = r.std_error,
                    "tolerance"_a = r.tolerance, "pass"_a = r.pass, "outside_hypotheses"_a = r.outside_hypotheses,
                    "notes"_a = r.notes);
}

py::dict fit_dict(const mrm::MomentScalingFit& f) {
    return py::dict("q"_a = f.q, "scales"_a = to_array(f.scales), "log_means"_a = to_array(f.log_means),
                    "stderrs"_a = to_array(f.stderrs), "replicas"_a = f.replicas, "slope"_a = f.slope,
                    "slope_se"_a = f.slope_se, "intercept"_a = f.intercept, "r2"_a = f.r2,
                    "reliable"_a = f.reliable, "analytic_zeta"_a = f.analytic_zeta);
}

mrm::EstimatorOptions estimator(double resolution, std::size_t bootstrap, unsigned threads, std::size_t blocks) {
    mrm::EstimatorOptions o;
    o.field.resolution = resolution;
    o.bootstrap = bootstrap;
    o.threads = threads;
    o.blocks = blocks;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multifractal random measures: exponents, samplers, dimension estimators";
    m.attr("__version__") = mrm::kToolkitVersion;

    static py::exception<mrm::ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<mrm::NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const mrm::ValidationError& e) {
            PyErr_SetString(validation_error.ptr(), e.what());
        } catch (const mrm::NumericalError& e) {
            PyErr_SetString(numerical_error.ptr(), e.what());
        }
    });

    py::class_<mrm::LevyTriple>(m, "LevyTriple")
        .def_readonly("m", &mrm::LevyTriple::m)
        .def_readonly("sigma2", &mrm::LevyTriple::sigma2)
        .def_property_readonly("atoms",
                               [](const mrm::LevyTriple& t) {
                                   std::vector<std::pair<double, double>> out;
                                   if (const auto* a = std::get_if<mrm::AtomicJumps>(&t.nu))
                                       for (const auto& at : a->atoms) out.emplace_back(at.x, at.w);
                                   return out;
                               })
        .def("psi", [](const mrm::LevyTriple& t, double q) { return mrm::psi(t, q); }, "q"_a)
        .def("zeta", [](const mrm::LevyTriple& t, double q) { return mrm::zeta(t, q); }, "q"_a)
        .def("critical_moment", [](const mrm::LevyTriple& t) { return mrm::critical_moment(t); })
        .def("to_config", [](const mrm::LevyTriple& t) { return mrm::triple_to_config(t); })
        .def("__repr__", [](const mrm::LevyTriple& t) { return "LevyTriple(" + mrm::describe(t) + ")"; });

    m.def("lognormal", &mrm::lognormal, "sigma2"_a, "Normalized log-normal triple.");
    m.def(
        "normalize",
        [](double sigma2, const std::vector<std::pair<double, double>>& atoms) {
            return mrm::normalize(sigma2, atoms_to_nu(atoms));
        },
        "sigma2"_a, "atoms"_a = std::vector<std::pair<double, double>>{},
        "Triple with drift fixed so that psi(1) = 0; atoms are (jump size, weight) pairs.");
    m.def(
        "triple",
        [](double drift, double sigma2, const std::vector<std::pair<double, double>>& atoms) {
            mrm::LevyTriple t{drift, sigma2, atoms_to_nu(atoms)};
            mrm::validate(t);
            return t;
        },
        "m"_a, "sigma2"_a, "atoms"_a = std::vector<std::pair<double, double>>{});
    m.def("triple_from_config", &mrm::triple_from_config, "text"_a);
    m.def("check_nondegenerate", [](const mrm::LevyTriple& t) {
        const auto c = mrm::check_nondegenerate(t);
        return py::dict("nondegenerate"_a = c.nondegenerate, "witness_eps"_a = c.witness_eps,
                        "witness_zeta"_a = c.witness_zeta, "negative_moments_finite"_a = c.negative_moments_finite);
    });

    m.def("cone_mass", [](double l, double T) { return mrm::cone_mass({l, T}); }, "l"_a, "T"_a);
    m.def("cone_overlap", [](double l, double T, double tau) { return mrm::cone_overlap({l, T}, tau); }, "l"_a,
          "T"_a, "tau"_a);
    m.def("cone_overlap_quadrature",
          [](double l, double T, double tau) { return mrm::cone_overlap_quadrature({l, T}, tau); }, "l"_a, "T"_a,
          "tau"_a);

    m.def(
        "sample_field",
        [](const mrm::LevyTriple& t, double l, double T, double length, std::uint64_t seed, double resolution) {
            const auto n = static_cast<std::size_t>(std::ceil(length * resolution / l - 1e-9));
            mrm::FieldOptions o;
            o.resolution = resolution;
            const mrm::FieldSampler s(mrm::midpoint_grid(length, n), {l, T}, t, mrm::default_method(t), o);
            const auto f = s.sample(seed);
            const auto m = mrm::build_measure(f);
            return py::dict("x"_a = to_array(f.grid.points()), "omega"_a = to_array(f.values),
                            "masses"_a = to_array(m.masses), "cumulative"_a = to_array(m.cumulative),
                            "method"_a = std::string(mrm::to_string(f.method)));
        },
        "triple"_a, "l"_a, "T"_a, "length"_a, "seed"_a, "resolution"_a = 4.0,
        "Log-field on cell midpoints and the induced measure.");

    m.def(
        "estimate_zeta",
        [](const mrm::LevyTriple& t, double l, double T, std::vector<double> qs, std::vector<double> scales,
           std::size_t replicas, std::uint64_t seed, std::size_t blocks, std::size_t bootstrap, unsigned threads) {
            py::gil_scoped_release release;
            auto fits = mrm::estimate_zeta(t, {l, T}, qs, scales, replicas, seed,
                                           estimator(4.0, bootstrap, threads, blocks));
            py::gil_scoped_acquire acquire;
            py::list out;
            for (const auto& f : fits) out.append(fit_dict(f));
            return out;
        },
        "triple"_a, "l"_a, "T"_a, "qs"_a, "scales"_a, "replicas"_a, "seed"_a, "blocks"_a = 1, "bootstrap"_a = 200,
        "threads"_a = 1);

    py::class_<mrm::FractalSet>(m, "FractalSet")
        .def_property_readonly("delta0", [](const mrm::FractalSet& s) { return s.delta0; })
        .def_property_readonly("intervals", [](const mrm::FractalSet& s) {
            std::vector<std::pair<double, double>> out;
            for (const auto& iv : s.cover) out.emplace_back(iv.a, iv.b);
            return out;
        })
        .def("__repr__", [](const mrm::FractalSet& s) { return s.describe(); });
    m.def("make_cantor", &mrm::make_cantor, "ratio"_a, "depth"_a, "domain_length"_a = 1.0);
    m.def("make_full_interval", &mrm::make_full_interval, "domain_length"_a = 1.0);
    m.def("make_point_set", &mrm::make_point_set, "points"_a);
    m.def("box_count", &mrm::box_count, "set"_a, "eps"_a);
    m.def(
        "box_dimension",
        [](const mrm::FractalSet& s, std::vector<double> scales) {
            const auto d = mrm::box_dimension(s, scales);
            return py::dict("slope"_a = d.slope, "stderr"_a = d.std_error, "r2"_a = d.r2,
                            "scales"_a = to_array(d.scales), "counts"_a = to_array(d.counts));
        },
        "set"_a, "scales"_a);
    m.def("kpz_solve", &mrm::kpz_solve, "zeta"_a, "delta0"_a,
          "Root in [0, 1] of zeta(delta) = delta0 for an increasing exponent function.");
    m.def(
        "kpz_verify_1d",
        [](const mrm::FractalSet& s, const mrm::LevyTriple& t, double l, double T, std::size_t replicas,
           std::uint64_t seed, std::vector<double> scales, double tolerance, unsigned threads) {
            mrm::Kpz1DOptions o;
            o.tolerance = tolerance;
            o.estimator.threads = threads;
            mrm::KpzReport r;
            {
                py::gil_scoped_release release;
                r = mrm::kpz_verify_1d(s, t, {l, T}, replicas, seed, scales, o);
            }
            return report_dict(r);
        },
        "set"_a, "triple"_a, "l"_a, "T"_a, "replicas"_a, "seed"_a, "scales"_a, "tolerance"_a = 0.08,
        "threads"_a = 1);

    m.def("zeta2d", &mrm::zeta2d, "gamma2"_a, "q"_a);
    m.def("zeta2d_mass_consistent", &mrm::zeta2d_mass_consistent, "gamma2"_a, "q"_a);
    m.def(
        "green_disk",
        [](std::pair<double, double> x, std::pair<double, double> y, double R) {
            return mrm::green_disk({x.first, x.second}, {y.first, y.second}, R);
        },
        "x"_a, "y"_a, "R"_a = 1.0);
    m.def(
        "kpz_verify_2d",
        [](const std::string& kernel, double gamma2, double ratio, int depth, std::size_t replicas,
           std::uint64_t seed, std::vector<int> levels, int base, std::size_t n, double R, double r,
           double tolerance, unsigned threads) {
            mrm::Kpz2DParams p;
            p.kind = mrm::kernel_kind_from_string(kernel);
            p.gamma2 = gamma2;
            p.R = R;
            p.r = r;
            p.n = n;
            p.levels = std::move(levels);
            p.base = base;
            p.tolerance = tolerance;
            p.threads = threads;
            mrm::KpzReport rep;
            {
                py::gil_scoped_release release;
                rep = mrm::kpz_verify_2d(mrm::make_cantor_dust(ratio, depth), p, replicas, seed);
            }
            return report_dict(rep);
        },
        "kernel"_a, "gamma2"_a, "ratio"_a, "depth"_a, "replicas"_a, "seed"_a,
        "levels"_a = std::vector<int>{0, 1, 2, 3}, "base"_a = 3, "n"_a = 64, "R"_a = 1.0, "r"_a = 0.8,
        "tolerance"_a = 0.1, "threads"_a = 1, "Cantor-dust KPZ check; kernel is 'lognormal-mrm' or 'gff-disk'.");

    m.def("derive_seed", [](std::uint64_t base, const std::string& label, std::uint64_t index) {
        return mrm::derive_seed(base, label, index);
    }, "base"_a, "label"_a, "index"_a);

    m.def("commands", &mrm::command_names);
    m.def(
        "run",
        [](const std::string& command, const std::string& config_text, std::optional<std::uint64_t> seed,
           std::optional<unsigned> threads, std::optional<std::string> out) {
            mrm::ExperimentConfig cfg;
            try {
                cfg = mrm::parse_config(config_text);
            } catch (const mrm::ConfigError& e) {
                return py::dict("exit_code"_a = int(mrm::kExitValidation), "out_dir"_a = "",
                                "files"_a = std::vector<std::string>{}, "errors"_a = e.issues(), "log"_a = "");
            }
            std::ostringstream log;
            mrm::RunResult res;
            {
                py::gil_scoped_release release;
                res = mrm::run_command(command, std::move(cfg), {seed, threads, out}, log);
            }
            return py::dict("exit_code"_a = res.exit_code, "out_dir"_a = res.out_dir, "files"_a = res.files,
                            "errors"_a = res.errors, "log"_a = log.str());
        },
        "command"_a, "config"_a, "seed"_a = py::none(), "threads"_a = py::none(), "out"_a = py::none(),
        "Run an experiment command from config text; returns exit code, files and errors.");
}
