#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bistab/config.hpp"
#include "bistab/decay_analysis.hpp"
#include "bistab/models.hpp"
#include "bistab/observability.hpp"
#include "bistab/propagator.hpp"
#include "bistab/runner.hpp"

namespace py = pybind11;
using namespace bistab;

namespace {

py::object from_json(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

RVector as_vector(const std::vector<Real>& v) {
    return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<HFunction> hfun_from(const std::optional<std::string>& descriptor) {
    if (!descriptor) return std::nullopt;
    return HFunction::from_descriptor(*descriptor);
}

py::dict trajectory_dict(const Trajectory& tr) {
    CMatrix states(static_cast<Eigen::Index>(tr.states.size()),
                   tr.states.empty() ? 0 : tr.states.front().size());
    for (std::size_t i = 0; i < tr.states.size(); ++i) states.row(static_cast<Eigen::Index>(i)) = tr.states[i];
    std::vector<Real> state_times;
    for (const auto n : tr.state_steps) state_times.push_back(tr.times[n]);
    py::dict d;
    d["dt"] = tr.dt;
    d["t"] = as_vector(tr.times);
    d["energy"] = as_vector(tr.energies);
    d["control"] = as_vector(tr.controls);
    d["norm_h"] = as_vector(tr.norms_h);
    d["norm_k"] = as_vector(tr.norms_k);
    d["b_form"] = as_vector(tr.b_forms);
    d["state_t"] = as_vector(state_times);
    d["states"] = states;
    return d;
}

}  // namespace

PYBIND11_MODULE(_bistab, m) {
    m.doc() = "Bilinear feedback stabilization on spectral truncations";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

    py::class_<SpectralSystem>(m, "SpectralSystem")
        .def(py::init<std::vector<Complex>, CMatrix, std::vector<Real>, Real, std::string>(), py::arg("eigenvalues"),
             py::arg("b_matrix"), py::arg("k_weights") = std::vector<Real>{}, py::arg("theta") = 0.5,
             py::arg("label") = "")
        .def_property_readonly("dim", &SpectralSystem::dim)
        .def_property_readonly("eigenvalues", &SpectralSystem::eigenvalues)
        .def_property_readonly("b_matrix", &SpectralSystem::b_matrix)
        .def_property_readonly("k_weights", &SpectralSystem::k_weights)
        .def_property_readonly("l_weights", &SpectralSystem::l_weights)
        .def_property_readonly("theta", &SpectralSystem::theta)
        .def_property_readonly("label", &SpectralSystem::label)
        .def("norm_h", [](const SpectralSystem& s, const State& y) { return norm_h(s, y); })
        .def("norm_k", [](const SpectralSystem& s, const State& y) { return norm_k(s, y); })
        .def("norm_l", [](const SpectralSystem& s, const State& y) { return norm_l(s, y); })
        .def("to_json", [](const SpectralSystem& s) { return from_json(to_json(s)); });

    m.def(
        "build_model",
        [](const std::string& family, int n_modes, std::optional<std::pair<Real, Real>> interval, Real beta,
           Real theta) {
            models::ModelSpec spec;
            spec.family = models::family_from_string(family);
            spec.n_modes = n_modes;
            spec.damping = interval ? models::DampingProfile::interval(interval->first, interval->second)
                                    : models::DampingProfile::global();
            spec.beta = beta;
            spec.theta = theta;
            return models::build(spec);
        },
        py::arg("family"), py::arg("n_modes") = 64, py::arg("interval") = std::make_pair(0.0, 1.5707963267948966),
        py::arg("beta") = 0.1, py::arg("theta") = 0.5,
        "wave1d, coupled_wave1d or schrodinger1d; interval=None gives global damping.");

    m.def(
        "simulate",
        [](const SpectralSystem& sys, const State& y0, Real r, Real dt, Real t_final, int stride,
           Real stop_energy_ratio, bool control_off) {
            SimulationOptions o;
            o.dt = dt;
            o.t_final = t_final;
            o.stride = stride;
            o.stop_energy_ratio = stop_energy_ratio;
            const FeedbackLaw law{r, std::nullopt, control_off};
            Trajectory tr;
            {
                py::gil_scoped_release release;
                tr = simulate(sys, law, y0, o);
            }
            auto d = trajectory_dict(tr);
            d["dissipation_residual"] = dissipation_residual(sys, law, tr);
            return d;
        },
        py::arg("system"), py::arg("y0"), py::arg("r") = 2.0, py::arg("dt") = 1e-3, py::arg("t_final") = 1.0,
        py::arg("stride") = 1, py::arg("stop_energy_ratio") = 0.0, py::arg("control_off") = false);

    m.def(
        "estimate_delta",
        [](const SpectralSystem& sys, Real horizon, const std::string& flavor, std::optional<std::string> hfun,
           int n_samples, std::uint64_t seed) {
            ObservabilityOptions o;
            o.n_samples = n_samples;
            o.seed = seed;
            return from_json(to_json(estimate_delta(sys, horizon, flavor_from_string(flavor), hfun_from(hfun), o)));
        },
        py::arg("system"), py::arg("horizon"), py::arg("flavor") = "exact", py::arg("hfun") = py::none(),
        py::arg("n_samples") = 64, py::arg("seed") = 42);

    m.def(
        "lemma1_verify",
        [](Real a0, Real c, Real alpha, int k_max) {
            const auto r = lemma1_verify(a0, c, alpha, k_max);
            py::dict d;
            d["sequence"] = as_vector(r.sequence);
            d["scaled"] = as_vector(r.scaled);
            d["m_empirical"] = r.m_empirical;
            d["m_analytic"] = r.m_analytic;
            d["max_recurrence_defect"] = r.max_recurrence_defect;
            d["bounded"] = r.bounded;
            d["tail_nonincreasing"] = r.tail_nonincreasing;
            d["tail_converging"] = r.tail_converging;
            d["holds"] = r.holds;
            return d;
        },
        py::arg("a0"), py::arg("c"), py::arg("alpha"), py::arg("k_max"));

    m.def(
        "fit_power",
        [](const std::vector<Real>& t, const std::vector<Real>& e, std::pair<Real, Real> window) {
            return from_json(to_json(fit_power(t, e, {window.first, window.second})));
        },
        py::arg("t"), py::arg("energy"), py::arg("window"));

    m.def(
        "validate_bound",
        [](const std::vector<Real>& t, const std::vector<Real>& e, const std::string& bound, Real y0_norm_da,
           std::pair<Real, Real> window, std::optional<std::string> hfun, Real split, Real slack) {
            ValidationOptions o;
            o.split = split;
            o.slack = slack;
            return from_json(to_json(validate_bound(t, e, bound_from_descriptor(bound, hfun_from(hfun)), y0_norm_da,
                                                    {window.first, window.second}, o)));
        },
        py::arg("t"), py::arg("energy"), py::arg("bound"), py::arg("y0_norm_da"), py::arg("window"),
        py::arg("hfun") = py::none(), py::arg("split") = 0.5, py::arg("slack") = 1.0);

    m.def(
        "parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("text"), "Parses and validates config text; returns the fully expanded form.");

    m.def(
        "run_config",
        [](const std::string& text, const std::string& out_dir) {
            auto cfg = parse_config(text);
            cfg.out_dir = out_dir;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_guarded(cfg, nullptr, err);
            }
            return code;
        },
        py::arg("text"), py::arg("out_dir"), "Runs a config like `bistab run`; returns the exit code.");
}
