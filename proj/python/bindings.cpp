#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qmenv/discrimination.hpp"
#include "qmenv/envelopment.hpp"
#include "qmenv/errors.hpp"
#include "qmenv/io.hpp"
#include "qmenv/protocols.hpp"
#include "qmenv/trials.hpp"

namespace py = pybind11;
using namespace qmenv;

namespace {

AttackSpec make_attack(const std::string& kind, double fraction, double r) {
    if (kind == "none")
        return AttackSpec::none();
    if (kind == "intercept")
        return AttackSpec::intercept(fraction);
    if (kind == "leakage")
        return AttackSpec::leakage(r);
    throw ParameterError("unknown attack '" + kind + "'");
}

ProtocolSpec make_protocol(const std::string& kind, double theta) {
    if (kind == "bb84")
        return ProtocolSpec::bb84();
    if (kind == "b92")
        return ProtocolSpec::b92(theta);
    throw ParameterError("unknown protocol '" + kind + "'");
}

py::tuple command_tuple(const Command& c) { return py::make_tuple(c.alice, c.bob, c.eve); }

py::dict table_dict(const ProbabilityTable& t) {
    py::dict out;
    for (const auto& [c, row] : t)
        out[command_tuple(c)] = row;
    return out;
}

} // namespace

PYBIND11_MODULE(_qmenv, m) {
    m.doc() = "Quantum-model envelopment workbench and QKD attack simulator";

    static py::exception<Error> base_error(m, "QmenvError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const ParameterError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const LookupError& e) {
            PyErr_SetString(PyExc_KeyError, e.what());
        } catch (const Error& e) {
            py::set_error(base_error, e.what());
        }
    });

    py::class_<Command>(m, "Command")
        .def(py::init<std::string, std::string, std::string>(), py::arg("alice"), py::arg("bob"), py::arg("eve"))
        .def_readonly("alice", &Command::alice)
        .def_readonly("bob", &Command::bob)
        .def_readonly("eve", &Command::eve)
        .def("__repr__", [](const Command& c) { return "Command" + to_string(c); });

    py::class_<QMModel>(m, "QMModel")
        .def_static("load", &load_model, py::arg("path"))
        .def_static("from_json", [](const std::string& text) { return model_from_json(parse_json(text, "model")); })
        .def("save", [](const QMModel& model, const std::filesystem::path& p) { save_model(model, p); })
        .def("to_json", [](const QMModel& model) { return model_to_json(model).dump(); })
        .def_property_readonly("dim", &QMModel::dim)
        .def_property_readonly("alice", [](const QMModel& model) { return model.commands().alice; })
        .def_property_readonly("bob", [](const QMModel& model) { return model.commands().bob; })
        .def_property_readonly("eve", [](const QMModel& model) { return model.commands().eve; })
        .def_property_readonly("eve_only", &QMModel::eve_only)
        .def_property_readonly("model_id", [](const QMModel& model) { return model_id(model); })
        .def("state", [](const QMModel& model, const std::string& a) { return Vector(model.state(a).dense()); });

    py::class_<EnvelopmentMap>(m, "EnvelopmentMap")
        .def_static("identity", &EnvelopmentMap::identity)
        .def_static("load", &load_map, py::arg("path"))
        .def("save", [](const EnvelopmentMap& f, const std::filesystem::path& p) { save_map(f, p); })
        .def("__len__", [](const EnvelopmentMap& f) { return f.mapping().size(); })
        .def_property_readonly("factored", [](const EnvelopmentMap& f) { return f.factored().has_value(); });

    m.def(
        "validate_model",
        [](const QMModel& model) {
            py::list out;
            for (const auto& v : validate_model(model).violations)
                out.append(py::dict(py::arg("invariant") = v.invariant, py::arg("location") = v.location,
                                    py::arg("deviation") = v.deviation));
            return out;
        },
        "List of invariant violations; empty when the model is valid.");

    m.def(
        "born_probability",
        [](const QMModel& model, const std::string& a, const std::string& b, const std::string& e,
           const std::string& outcome) { return born_probability(model, {a, b, e}, outcome); },
        py::arg("model"), py::arg("alice"), py::arg("bob"), py::arg("eve"), py::arg("outcome"));
    m.def("probability_table", [](const QMModel& model) { return table_dict(probability_table(model)); });
    m.def("overlap_matrix", [](const QMModel& model) {
        auto s = overlap_matrix(model);
        return py::make_tuple(s.labels, s.values);
    });

    m.def("bb84_model", [](const std::string& attack, double fraction, double r) {
        return bb84_model(make_attack(attack, fraction, r));
    }, py::arg("attack") = "none", py::arg("fraction") = 1.0, py::arg("r") = 0.0);
    m.def("b92_model", [](double theta, const std::string& attack, double fraction, double r) {
        return b92_model(theta, make_attack(attack, fraction, r));
    }, py::arg("theta"), py::arg("attack") = "none", py::arg("fraction") = 1.0, py::arg("r") = 0.0);

    m.def("build_leakage_vectors", &build_leakage_vectors, py::arg("n"), py::arg("r"));
    m.def(
        "envelop_with_leakage",
        [](const QMModel& alpha, double r) {
            auto env = envelop_with_leakage(alpha, r);
            return py::make_tuple(env.beta, env.map, env.leakage.extra_commands);
        },
        py::arg("alpha"), py::arg("r"));
    m.def(
        "check_envelopment",
        [](const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& f, double tol) {
            auto res = check_envelopment(alpha, beta, f, tol);
            return py::dict(py::arg("holds") = res.holds, py::arg("max_deviation") = res.max_deviation,
                            py::arg("witness") = py::make_tuple(command_tuple(res.witness.command), res.witness.outcome));
        },
        py::arg("alpha"), py::arg("beta"), py::arg("map"), py::arg("tol") = 1e-10);
    m.def(
        "verify_overlap_reduction",
        [](const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& f, double r) {
            auto res = verify_overlap_reduction(alpha, beta, alice_map(f), r);
            return py::dict(py::arg("holds") = res.holds, py::arg("worst_pair") = res.worst_pair,
                            py::arg("worst_margin") = res.worst_margin);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("map"), py::arg("r"));

    m.def("helstrom_error", &helstrom_error, py::arg("overlap"), py::arg("p0") = 0.5, py::arg("p1") = 0.5);
    m.def(
        "helstrom_binary",
        [](const Vector& s0, const Vector& s1, double p0, double p1) {
            auto res = helstrom_binary(s0, s1, p0, p1);
            return py::make_tuple(res.error_probability, Matrix(res.povm.element("0").dense()),
                                  Matrix(res.povm.element("1").dense()));
        },
        py::arg("state0"), py::arg("state1"), py::arg("p0") = 0.5, py::arg("p1") = 0.5);

    m.def(
        "exact_qber",
        [](const std::string& protocol, double theta, const std::string& attack, double fraction, double r) {
            auto p = make_protocol(protocol, theta);
            auto a = make_attack(attack, fraction, r);
            return exact_qber(protocol_model(p, a), p, a);
        },
        py::arg("protocol") = "bb84", py::arg("theta") = std::numbers::pi / 8, py::arg("attack") = "none",
        py::arg("fraction") = 1.0, py::arg("r") = 0.0);
    m.def(
        "simulate_qber",
        [](const std::string& protocol, double theta, const std::string& attack, double fraction, double r,
           std::size_t trials, std::uint64_t seed, double sample_fraction) {
            auto p = make_protocol(protocol, theta);
            auto a = make_attack(attack, fraction, r);
            auto model = protocol_model(p, a);
            auto log = run_trials(model, protocol_schedule(model, a, trials, seed), trials, seed);
            auto est = sift_and_estimate_qber(log, p, sample_fraction);
            return py::dict(py::arg("exact") = exact_qber(model, p, a), py::arg("qber") = est.qber,
                            py::arg("halfwidth") = est.confidence_halfwidth, py::arg("n_sifted") = est.n_sifted,
                            py::arg("n_compared") = est.n_compared);
        },
        py::arg("protocol") = "bb84", py::arg("theta") = std::numbers::pi / 8, py::arg("attack") = "none",
        py::arg("fraction") = 1.0, py::arg("r") = 0.0, py::arg("trials") = 10000, py::arg("seed") = 0,
        py::arg("sample_fraction") = 1.0);

    m.def(
        "run_trials",
        [](const QMModel& model, const std::vector<std::tuple<std::string, std::string, std::string>>& schedule,
           std::size_t n, std::uint64_t seed) {
            std::vector<Command> cmds;
            for (const auto& [a, b, e] : schedule)
                cmds.push_back({a, b, e});
            if (cmds.empty())
                cmds = cyclic_schedule(model);
            return log_to_text(run_trials(model, cmds, n, seed));
        },
        py::arg("model"), py::arg("schedule"), py::arg("n"), py::arg("seed"),
        "Run trials and return the run log text. An empty schedule cycles over the public commands.");
    m.def(
        "fit_model",
        [](const QMModel& model, const std::string& log_text) {
            auto report = fit_model(model, log_from_text(log_text));
            py::dict rows;
            for (const auto& [c, row] : report.per_command)
                rows[command_tuple(c)] = py::dict(py::arg("predicted") = row.predicted,
                                                  py::arg("empirical") = row.observed.frequencies,
                                                  py::arg("n") = row.observed.total, py::arg("tv") = row.tv);
            return py::dict(py::arg("max_tv") = report.max_tv, py::arg("n_min") = report.n_min,
                            py::arg("warnings") = report.warnings, py::arg("rows") = rows);
        },
        py::arg("model"), py::arg("log_text"));
}
