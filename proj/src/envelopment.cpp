#include "qmenv/envelopment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Cholesky>

#include "qmenv/discrimination.hpp"
#include "qmenv/errors.hpp"

namespace qmenv {

std::string to_string(const Observation& o) { return to_string(o.command) + " -> '" + o.outcome + "'"; }

EnvelopmentMap::EnvelopmentMap(std::map<Observation, Observation> mapping, std::optional<FactoredMap> factored)
    : mapping_(std::move(mapping)), factored_(std::move(factored)) {
    if (!factored_)
        return;
    for (const auto& [from, to] : mapping_) {
        auto g = factored_->g.find(from.command);
        auto h = factored_->h.find(from.outcome);
        if (g == factored_->g.end())
            throw DomainError("factored map: g undefined on " + to_string(from.command));
        if (h == factored_->h.end())
            throw DomainError("factored map: h undefined on outcome '" + from.outcome + "'");
        if (to.command != g->second || to.outcome != h->second)
            throw DomainError("factored map: entry for " + to_string(from) + " disagrees with (g, h)");
    }
}

EnvelopmentMap EnvelopmentMap::from_factors(const QMModel& beta, FactoredMap factors) {
    std::map<Observation, Observation> mapping;
    for (const auto& [b, a] : factors.g) {
        if (!beta.commands().contains(b))
            throw DomainError("g defined on unknown command " + to_string(b));
        for (const auto& j : beta.povm(b.bob, b.eve).outcomes()) {
            auto h = factors.h.find(j);
            if (h != factors.h.end())
                mapping.emplace(Observation{b, j}, Observation{a, h->second});
        }
    }
    return EnvelopmentMap(std::move(mapping), std::move(factors));
}

EnvelopmentMap EnvelopmentMap::identity(const QMModel& model) {
    FactoredMap f;
    for (const auto& c : model.commands().all())
        f.g.emplace(c, c);
    for (const auto& j : model.outcome_set())
        f.h.emplace(j, j);
    return from_factors(model, std::move(f));
}

const Observation& EnvelopmentMap::operator()(const Observation& o) const {
    auto it = mapping_.find(o);
    if (it == mapping_.end())
        throw DomainError("envelopment map undefined on " + to_string(o));
    return it->second;
}

std::map<Observation, std::vector<Observation>> EnvelopmentMap::preimages() const {
    std::map<Observation, std::vector<Observation>> pre;
    for (const auto& [from, to] : mapping_)
        pre[to].push_back(from);
    return pre;
}

std::string guess_outcome(const std::string& alice) { return "guess=" + alice; }

// ---------------------------------------------------------------------------

std::vector<Vector> build_leakage_vectors(std::size_t n, double r) {
    if (!(r >= 0.0 && r < 1.0))
        throw ParameterError("leakage bound r must satisfy 0 <= r < 1, got " + std::to_string(r));
    if (n < 1)
        throw ParameterError("need at least one Alice command");
    const auto d = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(d, d, r);
    gram.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw ParameterError("leakage Gram matrix is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    std::vector<Vector> out;
    out.reserve(n);
    for (Eigen::Index k = 0; k < d; ++k)
        out.push_back(l.row(k).transpose().cast<Complex>());
    return out;
}

namespace {

std::string fresh_extra_label(const std::vector<std::string>& eve) {
    std::string label = std::string("leak") + kExtraMarker;
    while (std::binary_search(eve.begin(), eve.end(), label))
        label += kExtraMarker;
    return label;
}

Povm extra_povm(const std::map<std::string, ProductState>& states, const std::vector<std::string>& alice,
                const ExtraPovmPolicy& policy) {
    std::map<std::string, ProductOperator> elements;
    if (policy.kind == ExtraPovmPolicy::Kind::helstrom_pair) {
        if (alice.size() < 2) {
            // One possible preparation: nothing to distinguish.
            const auto d = states.at(alice.front()).dim();
            elements.emplace(guess_outcome(alice.front()), ProductOperator(Matrix(Matrix::Identity(d, d))));
            return Povm(std::move(elements));
        }
        auto pair = policy.pair.value_or(std::make_pair(alice[0], alice[1]));
        if (!states.count(pair.first) || !states.count(pair.second))
            throw LookupError("extra POVM pair names unknown alice command");
        if (pair.first == pair.second)
            throw ParameterError("extra POVM pair must name two distinct alice commands");
        auto res = helstrom_binary(states.at(pair.first).dense(), states.at(pair.second).dense());
        for (const auto& [label, idx] : res.decision_rule) {
            const auto& target = idx == 0 ? pair.first : pair.second;
            elements.emplace(guess_outcome(target), res.povm.element(label));
        }
        return Povm(std::move(elements));
    }

    std::vector<Vector> vs;
    for (const auto& a : alice)
        vs.push_back(states.at(a).dense());
    std::vector<double> prior(alice.size(), 1.0 / static_cast<double>(alice.size()));
    auto res = pretty_good_measurement(vs, prior);
    for (const auto& [label, idx] : res.decision_rule)
        elements.emplace(guess_outcome(alice[idx]), res.povm.element(label));
    return Povm(std::move(elements));
}

} // namespace

Envelopment envelop_with_leakage(const QMModel& alpha, double r, const ExtraPovmPolicy& policy) {
    if (!(r >= 0.0 && r < 1.0))
        throw ParameterError("leakage bound r must satisfy 0 <= r < 1, got " + std::to_string(r));
    require_valid(alpha, "envelop_with_leakage");

    const auto& src = alpha.parts();
    const auto& alice = src.commands.alice;
    const auto leak_dim = static_cast<Eigen::Index>(alice.size());

    LeakageSpec spec;
    spec.r = r;
    spec.leakage_dim = leak_dim;
    spec.policy = policy;
    auto w = build_leakage_vectors(alice.size(), r);
    for (std::size_t k = 0; k < alice.size(); ++k)
        spec.w_vectors.emplace(alice[k], w[k]);

    const std::string extra = fresh_extra_label(src.commands.eve);
    spec.extra_commands = {extra};

    ModelParts parts;
    auto eve = src.commands.eve;
    eve.push_back(extra);
    parts.commands = CommandSet::make(alice, src.commands.bob, eve);
    parts.protocol = src.protocol;
    parts.eve_only = src.eve_only;
    parts.eve_only.insert(extra);

    for (const auto& a : alice)
        parts.states.emplace(a, src.states.at(a).tensor_left(spec.w_vectors.at(a)));
    for (const auto& [c, u] : src.unitaries)
        parts.unitaries.emplace(c, u.tensor_identity_left(leak_dim));
    for (const auto& [key, povm] : src.povms) {
        std::map<std::string, ProductOperator> elements;
        for (const auto& [label, m] : povm.elements())
            elements.emplace(label, m.tensor_identity_left(leak_dim));
        parts.povms.emplace(key, Povm(std::move(elements)));
    }
    const Povm readout = extra_povm(parts.states, alice, policy);
    for (const auto& b : src.commands.bob)
        parts.povms.emplace(MeasurementKey{b, extra}, readout);

    QMModel beta(std::move(parts));

    FactoredMap factors;
    for (const auto& c : src.commands.all())
        factors.g.emplace(c, c);
    for (const auto& j : alpha.outcome_set())
        factors.h.emplace(j, j);
    auto map = EnvelopmentMap::from_factors(beta, std::move(factors));
    return Envelopment{std::move(beta), std::move(map), std::move(spec)};
}

// ---------------------------------------------------------------------------

EnvelopmentCheck check_envelopment(const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& f, double tol) {
    std::map<Observation, double> sums;
    std::set<Command> image_commands;
    for (const auto& [from, to] : f.mapping()) {
        if (!beta.commands().contains(from.command))
            throw DomainError("map domain names command " + to_string(from.command) + " unknown to beta");
        if (!beta.povm(from.command.bob, from.command.eve).has_outcome(from.outcome))
            throw DomainError("map domain names outcome '" + from.outcome + "' unknown to beta at " +
                              to_string(from.command));
        if (!alpha.commands().contains(to.command))
            throw DomainError("map image names command " + to_string(to.command) + " unknown to alpha");
        if (!alpha.povm(to.command.bob, to.command.eve).has_outcome(to.outcome))
            throw DomainError("map image names outcome '" + to.outcome + "' unknown to alpha at " +
                              to_string(to.command));
        sums[to] += born_probability(beta, from.command, from.outcome);
        image_commands.insert(to.command);
    }

    EnvelopmentCheck result;
    bool first = true;
    for (const auto& c : image_commands) {
        for (const auto& j : alpha.povm(c.bob, c.eve).outcomes()) {
            Observation o{c, j};
            auto it = sums.find(o);
            double preimage = it == sums.end() ? 0.0 : it->second;
            double dev = std::abs(born_probability(alpha, c, j) - preimage);
            if (first || dev > result.max_deviation) {
                result.max_deviation = dev;
                result.witness = o;
                first = false;
            }
        }
    }
    result.holds = result.max_deviation <= tol;
    return result;
}

std::map<std::string, std::string> alice_map(const EnvelopmentMap& f) {
    std::map<std::string, std::string> g;
    auto add = [&](const Command& from, const Command& to) {
        auto [it, inserted] = g.emplace(from.alice, to.alice);
        if (!inserted && it->second != to.alice)
            throw DomainError("map sends alice command '" + from.alice + "' to both '" + it->second + "' and '" +
                              to.alice + "'");
    };
    if (f.factored())
        for (const auto& [from, to] : f.factored()->g)
            add(from, to);
    else
        for (const auto& [from, to] : f.mapping())
            add(from.command, to.command);
    return g;
}

OverlapReduction verify_overlap_reduction(const QMModel& alpha, const QMModel& beta,
                                          const std::map<std::string, std::string>& g, double r) {
    const auto& beta_alice = beta.commands().alice;
    std::set<std::string> covered;
    for (const auto& a : beta_alice) {
        auto it = g.find(a);
        if (it == g.end())
            throw DomainError("g undefined on beta alice command '" + a + "'");
        if (!alpha.commands().has_alice(it->second))
            throw DomainError("g maps '" + a + "' to unknown alpha alice command '" + it->second + "'");
        covered.insert(it->second);
    }
    for (const auto& a : alpha.commands().alice)
        if (!covered.count(a))
            throw DomainError("g is not onto alpha's alice commands: '" + a + "' has no preimage");

    const auto s_alpha = overlap_matrix(alpha);
    const auto s_beta = overlap_matrix(beta);
    OverlapReduction out;
    out.holds = true;
    out.worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < beta_alice.size(); ++i)
        for (std::size_t k = i + 1; k < beta_alice.size(); ++k) {
            const auto& a = beta_alice[i];
            const auto& b = beta_alice[k];
            double margin = s_beta.at(a, b) - r * s_alpha.at(g.at(a), g.at(b));
            if (margin > out.worst_margin) {
                out.worst_margin = margin;
                out.worst_pair = {a, b};
            }
        }
    if (beta_alice.size() < 2)
        out.worst_margin = 0.0;
    out.holds = out.worst_margin <= kTolerances.overlap;
    return out;
}

EnvelopmentMap compose_envelopments(const EnvelopmentMap& f2, const EnvelopmentMap& f1) {
    std::map<Observation, Observation> mapping;
    for (const auto& [from, mid] : f2.mapping()) {
        auto it = f1.mapping().find(mid);
        if (it == f1.mapping().end())
            throw CompositionError("image point " + to_string(mid) + " of the outer map is outside the inner map's domain");
        mapping.emplace(from, it->second);
    }
    std::optional<FactoredMap> factored;
    if (f2.factored() && f1.factored()) {
        FactoredMap fm;
        for (const auto& [c, mid] : f2.factored()->g) {
            auto it = f1.factored()->g.find(mid);
            if (it != f1.factored()->g.end())
                fm.g.emplace(c, it->second);
        }
        for (const auto& [j, mid] : f2.factored()->h) {
            auto it = f1.factored()->h.find(mid);
            if (it != f1.factored()->h.end())
                fm.h.emplace(j, it->second);
        }
        factored = std::move(fm);
    }
    return EnvelopmentMap(std::move(mapping), std::move(factored));
}

} // namespace qmenv
