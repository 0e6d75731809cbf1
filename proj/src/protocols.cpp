#include "qmenv/protocols.hpp"

#include <cmath>
#include <numbers>

#include "qmenv/errors.hpp"

namespace qmenv {

namespace {

/// Orthonormal measurement basis for Eve or Bob, outcome character -> vector.
using Basis = std::vector<std::pair<char, Vector>>;

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

// X-basis projectors are written out entrywise so the error cells of the
// no-attack table are exact zeros.
Matrix plus_projector() {
    Matrix m(2, 2);
    m << 0.5, 0.5, 0.5, 0.5;
    return m;
}

Matrix minus_projector() {
    Matrix m(2, 2);
    m << 0.5, -0.5, -0.5, 0.5;
    return m;
}

const std::vector<std::pair<char, Matrix>>& z_projectors() {
    static const std::vector<std::pair<char, Matrix>> p{{'0', projector(basis_vector(2, 0))},
                                                        {'1', projector(basis_vector(2, 1))}};
    return p;
}

const std::vector<std::pair<char, Matrix>>& x_projectors() {
    static const std::vector<std::pair<char, Matrix>> p{{'0', plus_projector()}, {'1', minus_projector()}};
    return p;
}

Basis z_basis() { return {{'0', basis_vector(2, 0)}, {'1', basis_vector(2, 1)}}; }

Basis x_basis() {
    const double h = std::numbers::sqrt2 / 2;
    return {{'0', vec2(h, h)}, {'1', vec2(h, -h)}};
}

/// Bob's POVM when Eve is passive: outcome labels "-<bob>".
Povm passive_povm(const std::vector<std::pair<char, Matrix>>& bob) {
    std::map<std::string, ProductOperator> el;
    for (const auto& [c, m] : bob)
        el.emplace(std::string("-") + c, ProductOperator(m));
    return Povm(std::move(el));
}

/// Eve measures projectively in `eve` and resends the post-measurement
/// state; Bob then applies `bob`. Joint element for (j_E, j_B) is
/// <e_jE| Q_jB |e_jE> |e_jE><e_jE|.
Povm intercept_resend_povm(const Basis& eve, const std::vector<std::pair<char, Matrix>>& bob) {
    std::map<std::string, ProductOperator> el;
    for (const auto& [je, e] : eve)
        for (const auto& [jb, q] : bob) {
            double weight = e.dot(q * e).real();
            el.emplace(std::string{je, jb}, ProductOperator(Matrix(weight * projector(e))));
        }
    return Povm(std::move(el));
}

void check_theta(double theta) {
    if (!(theta > 0.0 && theta <= std::numbers::pi / 4 + 1e-15))
        throw ParameterError("B92 angle theta must satisfy 0 < theta <= pi/4, got " + std::to_string(theta));
}

int bit_of(char c) {
    if (c == '0')
        return 0;
    if (c == '1')
        return 1;
    throw UnsupportedModelError(std::string("unexpected bit character '") + c + "'");
}

/// Eve's intercept bases per protocol tag.
std::vector<std::string> intercept_labels(const std::string& protocol) {
    if (protocol == "bb84")
        return {"X", "Z"};
    if (protocol == "b92")
        return {"H"};
    throw UnsupportedModelError("model has no protocol tag; it was not built by the protocol builders");
}

} // namespace

std::string ProtocolSpec::name() const { return kind == ProtocolKind::bb84 ? "bb84" : "b92"; }

void AttackSpec::validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw ParameterError("attack fraction must lie in [0, 1], got " + std::to_string(fraction));
    if (kind == AttackKind::leakage_readout && !(r >= 0.0 && r < 1.0))
        throw ParameterError("leakage bound r must satisfy 0 <= r < 1, got " + std::to_string(r));
}

std::string AttackSpec::name() const {
    switch (kind) {
    case AttackKind::none:
        return "none";
    case AttackKind::intercept_resend:
        return "intercept";
    case AttackKind::leakage_readout:
        return "leakage";
    }
    return "unknown";
}

QMModel bb84_model(const AttackSpec& attack) {
    attack.validate();
    if (attack.kind == AttackKind::leakage_readout)
        return leakage_attack_model(bb84_model(AttackSpec::none()), attack.r).beta;

    ModelParts parts;
    parts.protocol = "bb84";
    std::vector<std::string> eve{kEvePass};
    if (attack.kind == AttackKind::intercept_resend)
        eve.insert(eve.end(), {"X", "Z"});
    parts.commands = CommandSet::make({"X0", "X1", "Z0", "Z1"}, {"X", "Z"}, eve);

    const auto z = z_basis();
    const auto x = x_basis();
    parts.states.emplace("Z0", z[0].second);
    parts.states.emplace("Z1", z[1].second);
    parts.states.emplace("X0", x[0].second);
    parts.states.emplace("X1", x[1].second);

    for (const auto& [bob, proj] : {std::pair{"Z", z_projectors()}, std::pair{"X", x_projectors()}}) {
        parts.povms.emplace(MeasurementKey{bob, kEvePass}, passive_povm(proj));
        if (attack.kind == AttackKind::intercept_resend) {
            parts.povms.emplace(MeasurementKey{bob, "Z"}, intercept_resend_povm(z, proj));
            parts.povms.emplace(MeasurementKey{bob, "X"}, intercept_resend_povm(x, proj));
        }
    }
    return QMModel(std::move(parts));
}

QMModel b92_model(double theta, const AttackSpec& attack) {
    check_theta(theta);
    attack.validate();
    if (attack.kind == AttackKind::leakage_readout)
        return leakage_attack_model(b92_model(theta, AttackSpec::none()), attack.r).beta;

    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Vector u0 = vec2(c, s);
    const Vector u1 = vec2(c, -s);
    // complements: <u0|u0perp> = <u1|u1perp> = 0
    const Vector u0_perp = vec2(s, -c);
    const Vector u1_perp = vec2(s, c);

    ModelParts parts;
    parts.protocol = "b92";
    std::vector<std::string> eve{kEvePass};
    if (attack.kind == AttackKind::intercept_resend)
        eve.emplace_back("H");
    parts.commands = CommandSet::make({"send0", "send1"}, {"m0", "m1"}, eve);
    parts.states.emplace("send0", u0);
    parts.states.emplace("send1", u1);

    const std::vector<std::pair<char, Matrix>> m0{{'c', projector(u1_perp)}, {'i', projector(u1)}};
    const std::vector<std::pair<char, Matrix>> m1{{'c', projector(u0_perp)}, {'i', projector(u0)}};
    for (const auto& [bob, proj] : {std::pair{"m0", m0}, std::pair{"m1", m1}}) {
        parts.povms.emplace(MeasurementKey{bob, kEvePass}, passive_povm(proj));
        if (attack.kind == AttackKind::intercept_resend)
            parts.povms.emplace(MeasurementKey{bob, "H"}, intercept_resend_povm(x_basis(), proj));
    }
    return QMModel(std::move(parts));
}

std::string eve_view(const std::string& outcome) { return outcome.substr(0, 1); }

QMModel protocol_model(const ProtocolSpec& protocol, const AttackSpec& attack) {
    return protocol.kind == ProtocolKind::bb84 ? bb84_model(attack) : b92_model(protocol.theta, attack);
}

Envelopment leakage_attack_model(const QMModel& protocol_model, double r) {
    if (protocol_model.protocol().empty())
        throw UnsupportedModelError("leakage_attack_model expects a model built by the protocol builders");
    // The extra readout command comes back Eve-only, so protocol schedules
    // (which draw from public commands) never hand it to Bob.
    return envelop_with_leakage(protocol_model, r);
}

std::optional<SiftedBit> sift(const ProtocolSpec& protocol, const Command& command, const std::string& outcome) {
    if (outcome.size() != 2)
        throw UnsupportedModelError("outcome '" + outcome + "' is not a protocol outcome");
    if (protocol.kind == ProtocolKind::bb84) {
        const auto& a = command.alice;
        if (a.size() != 2 || (a[0] != 'X' && a[0] != 'Z') || (command.bob != "X" && command.bob != "Z"))
            throw UnsupportedModelError("command " + to_string(command) + " is not a BB84 command");
        if (a[0] != command.bob[0])
            return std::nullopt;
        return SiftedBit{bit_of(a[1]), bit_of(outcome[1])};
    }
    const auto& a = command.alice;
    if ((a != "send0" && a != "send1") || (command.bob != "m0" && command.bob != "m1"))
        throw UnsupportedModelError("command " + to_string(command) + " is not a B92 command");
    if (outcome[1] == 'i')
        return std::nullopt;
    if (outcome[1] != 'c')
        throw UnsupportedModelError("outcome '" + outcome + "' is not a B92 outcome");
    return SiftedBit{bit_of(a.back()), bit_of(command.bob.back())};
}

std::map<std::string, double> eve_command_weights(const QMModel& model, const AttackSpec& attack) {
    attack.validate();
    std::map<std::string, double> w;
    auto require = [&](const std::string& e) {
        if (!model.commands().has_eve(e))
            throw UnsupportedModelError("model lacks Eve command '" + e + "' needed by attack " + attack.name());
    };
    require(kEvePass);
    if (attack.kind != AttackKind::intercept_resend) {
        w[kEvePass] = 1.0;
        return w;
    }
    const auto bases = intercept_labels(model.protocol());
    for (const auto& b : bases)
        require(b);
    w[kEvePass] = 1.0 - attack.fraction;
    for (const auto& b : bases)
        w[b] += attack.fraction / static_cast<double>(bases.size());
    return w;
}

double exact_qber(const QMModel& model, const ProtocolSpec& protocol, const AttackSpec& attack) {
    if (model.protocol() != protocol.name())
        throw UnsupportedModelError("model tagged '" + model.protocol() + "' cannot be read as " + protocol.name());
    const auto weights = eve_command_weights(model, attack);
    const auto& cs = model.commands();
    const double wa = 1.0 / static_cast<double>(cs.alice.size());
    const double wb = 1.0 / static_cast<double>(cs.bob.size());

    double sifted = 0.0;
    double errors = 0.0;
    for (const auto& a : cs.alice)
        for (const auto& b : cs.bob)
            for (const auto& [e, we] : weights) {
                if (we == 0.0)
                    continue;
                const Command c{a, b, e};
                for (const auto& [j, p] : probability_row(model, c)) {
                    auto bit = sift(protocol, c, j);
                    if (!bit)
                        continue;
                    const double mass = wa * wb * we * p;
                    sifted += mass;
                    if (bit->alice != bit->bob)
                        errors += mass;
                }
            }
    if (!(sifted > 0.0))
        throw InsufficientDataError("no trial survives sifting");
    return errors / sifted;
}

std::vector<Command> protocol_schedule(const QMModel& model, const AttackSpec& attack, std::size_t n,
                                       std::uint64_t seed) {
    const auto weights = eve_command_weights(model, attack);
    std::vector<std::pair<double, std::string>> cdf;
    double cum = 0.0;
    for (const auto& [e, w] : weights)
        if (w > 0.0)
            cdf.emplace_back(cum += w, e);

    const auto& cs = model.commands();
    const CounterRng rng(seed);
    std::vector<Command> out;
    out.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        Command c;
        c.alice = cs.alice[rng.index(CounterRng::schedule, 3 * k, cs.alice.size())];
        c.bob = cs.bob[rng.index(CounterRng::schedule, 3 * k + 1, cs.bob.size())];
        const double u = rng.uniform(CounterRng::schedule, 3 * k + 2) * cum;
        c.eve = cdf.back().second;
        for (const auto& [edge, e] : cdf)
            if (u < edge) {
                c.eve = e;
                break;
            }
        out.push_back(std::move(c));
    }
    return out;
}

QberEstimate sift_and_estimate_qber(const RunLog& log, const ProtocolSpec& protocol, double sample_fraction) {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw ParameterError("sample fraction must lie in (0, 1], got " + std::to_string(sample_fraction));
    if (log.records.empty())
        throw InsufficientDataError("run log has no trials");

    std::vector<SiftedBit> kept;
    for (const auto& r : log.records)
        if (auto bit = sift(protocol, r.command, r.outcome))
            kept.push_back(*bit);
    if (kept.empty())
        throw InsufficientDataError("no trial survives sifting");

    QberEstimate est;
    est.n_trials = log.records.size();
    est.n_sifted = kept.size();
    est.n_compared = std::min(kept.size(), static_cast<std::size_t>(std::ceil(sample_fraction * kept.size())));
    std::size_t errors = 0;
    for (std::size_t i = 0; i < est.n_compared; ++i)
        errors += kept[i].alice != kept[i].bob;
    est.qber = static_cast<double>(errors) / static_cast<double>(est.n_compared);
    est.confidence_halfwidth = 3.0 * std::sqrt(est.qber * (1.0 - est.qber) / static_cast<double>(est.n_compared));
    return est;
}

} // namespace qmenv
