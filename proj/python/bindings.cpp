#include "sticky/cli.hpp"
#include "sticky/config.hpp"
#include "sticky/errors.hpp"
#include "sticky/linalg.hpp"
#include "sticky/mc.hpp"
#include "sticky/model.hpp"
#include "sticky/rates.hpp"
#include "sticky/sim.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace sticky;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n == 0 ? 0 : rows[0].size();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != m) {
            throw InvalidParameter("matrix rows must have equal length");
        }
        for (std::size_t j = 0; j < m; ++j) {
            out(i, j) = rows[i][j];
        }
    }
    return out;
}

Rows to_rows(const Matrix& a) {
    Rows out(a.rows(), std::vector<double>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out[i][j] = a(i, j);
        }
    }
    return out;
}

Scheme scheme_arg(const std::string& s) {
    const auto v = parse_scheme(s);
    if (!v) {
        throw InvalidParameter("scheme must be 'fd' or 'ed'");
    }
    return *v;
}

Functional functional_arg(const std::string& name, std::size_t coordinate) {
    if (name == "terminal_sum") {
        return terminal_sum();
    }
    if (name == "bond") {
        return BondFunctional{};
    }
    if (name == "occupation") {
        return OccupationFunctional{coordinate};
    }
    throw InvalidParameter("functional must be terminal_sum, bond or occupation");
}

// steps: None for exact simulation, 0 for the automatic discrete grid.
TimeStepping stepping_arg(std::optional<std::size_t> steps) {
    return steps ? TimeStepping::discrete(*steps) : TimeStepping::exact();
}

py::dict estimate_dict(const Estimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["stderr"] = e.std_error;
    d["n_paths"] = e.n_paths;
    d["h"] = e.h;
    d["scheme"] = std::string(to_string(e.scheme));
    d["time_mode"] = std::string(to_string(e.stepping.mode));
    if (e.stepping.mode == TimeMode::Discrete) {
        d["N"] = e.stepping.steps;
    }
    d["seed"] = e.seed;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sticky diffusions simulated by continuous-time Markov chains";
    m.attr("__version__") = STICKY_PY_VERSION;

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NegativeRate>(m, "NegativeRate", PyExc_ArithmeticError);
    py::register_exception<NotPsd>(m, "NotPsd", PyExc_ArithmeticError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);

    py::class_<StickyModel>(m, "StickyModel")
        .def_property_readonly("name", &StickyModel::name)
        .def_property_readonly("dim", &StickyModel::dim)
        .def_property_readonly("sticky_dim", &StickyModel::sticky_dim)
        .def("drift", py::overload_cast<const State&>(&StickyModel::drift, py::const_))
        .def("covariance",
             [](const StickyModel& s, const State& x) { return to_rows(s.covariance(x)); })
        .def("boundary_drift",
             py::overload_cast<const State&>(&StickyModel::boundary_drift, py::const_))
        .def("boundary_covariance", [](const StickyModel& s, const State& x) {
            return to_rows(s.boundary_covariance(x));
        });

    m.def(
        "queuing_model",
        [](std::optional<Rows> eta, double sigma) {
            return make_queuing_model(eta ? to_matrix(*eta) : default_queuing_eta(), sigma);
        },
        py::arg("eta") = py::none(), py::arg("sigma") = 1.0);

    m.def(
        "sticky_ou_model",
        [](py::kwargs kw) {
            StickyOuParams p;
            for (auto item : kw) {
                const auto key = item.first.cast<std::string>();
                if (key == "K") {
                    p.K = to_matrix(item.second.cast<Rows>());
                } else if (key == "theta") {
                    p.theta = item.second.cast<Vector>();
                } else if (key == "Sigma") {
                    p.Sigma = to_matrix(item.second.cast<Rows>());
                } else if (key == "kappa2") {
                    p.kappa2 = item.second.cast<double>();
                } else if (key == "theta2") {
                    p.theta2 = item.second.cast<double>();
                } else if (key == "sigma2") {
                    p.sigma2 = item.second.cast<double>();
                } else if (key == "nu") {
                    p.nu = item.second.cast<double>();
                } else {
                    throw InvalidParameter("unknown sticky OU parameter '" + key + "'");
                }
            }
            return make_sticky_ou_model(p);
        },
        "Sticky short-rate model; keyword arguments override the fitted defaults.");

    m.def(
        "eigh",
        [](const Rows& a) {
            const EigenPairs e = eigh_symmetric(to_matrix(a));
            return py::make_tuple(e.values, to_rows(e.vectors));
        },
        "Eigenvalues (ascending) and eigenvectors (columns) of a symmetric PSD matrix.");

    m.def(
        "rates",
        [](const StickyModel& model, const std::string& scheme, const State& x, double h) {
            const RateTable t = build_rates(model, scheme_arg(scheme), x, h);
            py::list out;
            for (std::size_t k = 0; k < t.size(); ++k) {
                const auto dx = t.displacement(k);
                out.append(py::make_tuple(Vector(dx.begin(), dx.end()), t.rate(k)));
            }
            return out;
        },
        py::arg("model"), py::arg("scheme"), py::arg("x"), py::arg("h"),
        "List of (displacement, rate) pairs of the chain at x.");

    m.def(
        "simulate_path",
        [](const StickyModel& model, const std::string& scheme, double h, double T, const State& x0,
           std::uint64_t seed, std::uint64_t stream, std::optional<std::size_t> steps) {
            const Scheme s = scheme_arg(scheme);
            RateBuilder builder(model, s, h);
            const TimeStepping st = resolve_stepping(model, s, stepping_arg(steps), h, T, x0);
            RngStream rng(seed, stream);
            Path p;
            {
                py::gil_scoped_release release;
                p = simulate(builder, st, T, x0, rng);
            }
            py::list out;
            for (const auto& e : p.events) {
                out.append(py::make_tuple(e.t, e.state));
            }
            return out;
        },
        py::arg("model"), py::arg("scheme"), py::arg("h"), py::arg("T"), py::arg("x0"),
        py::arg("seed") = 0, py::arg("stream") = 0, py::arg("steps") = py::none(),
        "Full path as a list of (t, state). steps selects the discrete sampler (0: automatic).");

    m.def(
        "estimate",
        [](const StickyModel& model, const std::string& functional, const std::string& scheme,
           double h, double T, const State& x0, std::size_t n_paths, std::uint64_t seed,
           std::optional<std::size_t> steps, std::size_t workers, std::size_t coordinate) {
            const Functional f = functional_arg(functional, coordinate);
            Estimate e;
            {
                py::gil_scoped_release release;
                e = estimate(model, f, scheme_arg(scheme), stepping_arg(steps), h, T, x0, n_paths,
                             seed, McOptions{workers});
            }
            return estimate_dict(e);
        },
        py::arg("model"), py::arg("functional"), py::arg("scheme"), py::arg("h"), py::arg("T"),
        py::arg("x0"), py::arg("n_paths"), py::arg("seed") = 0, py::arg("steps") = py::none(),
        py::arg("workers") = 0, py::arg("coordinate") = 0);

    m.def(
        "convergence_study",
        [](const StickyModel& model, const std::string& functional, const std::string& scheme,
           const std::vector<double>& h_list, double T, const State& x0, std::size_t n_paths,
           double reference, std::uint64_t seed, std::size_t workers) {
            const Functional f = functional_arg(functional, 0);
            ConvergenceResult r;
            {
                py::gil_scoped_release release;
                r = convergence_study(model, f, scheme_arg(scheme), TimeStepping::exact(), h_list,
                                      T, x0, n_paths, seed, reference, McOptions{workers});
            }
            py::list rows;
            for (const auto& row : r.rows) {
                py::dict d = estimate_dict(row.estimate);
                d["abs_error"] = row.abs_error;
                d["seconds"] = row.seconds;
                rows.append(d);
            }
            return py::make_tuple(rows, r.slope);
        },
        py::arg("model"), py::arg("functional"), py::arg("scheme"), py::arg("h_list"),
        py::arg("T"), py::arg("x0"), py::arg("n_paths"), py::arg("reference"),
        py::arg("seed") = 0, py::arg("workers") = 0);

    m.def(
        "loglog_slope",
        [](const std::vector<double>& h, const std::vector<double>& abs_error) {
            if (h.size() != abs_error.size()) {
                throw InvalidParameter("h and abs_error must have equal length");
            }
            std::vector<ConvergenceRow> rows(h.size());
            for (std::size_t i = 0; i < h.size(); ++i) {
                rows[i].h = h[i];
                rows[i].abs_error = abs_error[i];
            }
            return fit_loglog_slope(rows);
        },
        py::arg("h"), py::arg("abs_error"));

    m.def(
        "parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        "Validates config text and returns its canonical form.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
