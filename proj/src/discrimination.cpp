#include "qmenv/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "qmenv/envelopment.hpp"
#include "qmenv/errors.hpp"

namespace qmenv {

namespace {

void require_unit(const Vector& v, const char* what) {
    if (std::abs(v.norm() - 1.0) > kTolerances.state_norm)
        throw ParameterError(std::string(what) + " is not a unit vector (norm " + std::to_string(v.norm()) + ")");
}

} // namespace

Prior Prior::uniform(const std::vector<std::string>& labels) {
    Prior p;
    for (const auto& l : labels)
        p.weights[l] = 1.0 / static_cast<double>(labels.size());
    return p;
}

void Prior::validate() const {
    if (weights.empty())
        throw ParameterError("prior is empty");
    double total = 0.0;
    for (const auto& [label, w] : weights) {
        if (!(w >= 0.0))
            throw ParameterError("prior weight for '" + label + "' is negative");
        total += w;
    }
    if (std::abs(total - 1.0) > kTolerances.prior_sum)
        throw ParameterError("prior weights sum to " + std::to_string(total) + ", not 1");
}

std::map<std::string, double> bayes_posterior(const QMModel& model, const Prior& prior, const std::string& bob,
                                              const std::string& eve, const std::string& outcome) {
    prior.validate();
    std::map<std::string, double> post;
    double evidence = 0.0;
    for (const auto& [alice, w] : prior.weights) {
        double joint = w * born_probability(model, {alice, bob, eve}, outcome);
        post[alice] = joint;
        evidence += joint;
    }
    if (!(evidence > 0.0))
        throw ConditioningError("outcome '" + outcome + "' has zero likelihood under the prior");
    for (auto& [alice, p] : post)
        p /= evidence;
    return post;
}

double helstrom_error(double overlap, double p0, double p1) {
    double disc = 1.0 - 4.0 * p0 * p1 * overlap * overlap;
    return 0.5 * (1.0 - std::sqrt(std::max(disc, 0.0)));
}

DiscriminationResult helstrom_binary(const Vector& state0, const Vector& state1, double p0, double p1) {
    if (state0.size() != state1.size())
        throw ShapeError("helstrom_binary: states have dimensions " + std::to_string(state0.size()) + " and " +
                         std::to_string(state1.size()));
    if (p0 < 0.0 || p1 < 0.0 || std::abs(p0 + p1 - 1.0) > kTolerances.prior_sum)
        throw ParameterError("helstrom_binary: priors must be non-negative and sum to 1");
    require_unit(state0, "state0");
    require_unit(state1, "state1");

    Matrix gamma = p0 * projector(state0) - p1 * projector(state1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gamma + gamma.adjoint()));
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    const auto d = state0.size();
    Matrix decide0 = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
        if (vals(k) > 1e-14)
            decide0 += projector(vecs.col(k));
    Matrix decide1 = Matrix::Identity(d, d) - decide0;

    DiscriminationResult out;
    out.povm = Povm({{"0", ProductOperator(decide0)}, {"1", ProductOperator(decide1)}});
    out.decision_rule = {{"0", 0}, {"1", 1}};
    out.error_probability = decision_error(out, {state0, state1}, {p0, p1});
    return out;
}

DiscriminationResult pretty_good_measurement(const std::vector<Vector>& states, const std::vector<double>& prior) {
    if (states.empty())
        throw ShapeError("pretty_good_measurement: no states");
    if (prior.size() != states.size())
        throw ShapeError("pretty_good_measurement: prior and state counts differ");
    const auto d = states.front().size();
    for (const auto& s : states) {
        if (s.size() != d)
            throw ShapeError("pretty_good_measurement: states have different dimensions");
        require_unit(s, "state");
    }
    if (std::abs(std::accumulate(prior.begin(), prior.end(), 0.0) - 1.0) > kTolerances.prior_sum)
        throw ParameterError("pretty_good_measurement: prior does not sum to 1");

    Matrix rho = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < states.size(); ++i)
        rho += prior[i] * projector(states[i]);
    const Matrix root = pinv_sqrt_psd(rho);
    const Matrix kernel = Matrix::Identity(d, d) - support_projector(rho);

    DiscriminationResult out;
    std::map<std::string, ProductOperator> elements;
    for (std::size_t i = 0; i < states.size(); ++i) {
        Vector v = root * states[i];
        Matrix m = prior[i] * projector(v);
        if (i == 0)
            m += kernel;
        const auto label = std::to_string(i);
        elements.emplace(label, ProductOperator(m));
        out.decision_rule.emplace(label, i);
    }
    out.povm = Povm(std::move(elements));
    out.error_probability = decision_error(out, states, prior);
    return out;
}

double decision_error(const DiscriminationResult& result, const std::vector<Vector>& states,
                      const std::vector<double>& prior) {
    double success = 0.0;
    for (const auto& [label, idx] : result.decision_rule) {
        if (idx >= states.size())
            throw ShapeError("decision rule refers to state " + std::to_string(idx));
        const Matrix m = result.povm.element(label).dense();
        success += prior[idx] * states[idx].dot(m * states[idx]).real();
    }
    return std::clamp(1.0 - success, 0.0, 1.0);
}

EveAdvantage eve_advantage(const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& map,
                           const std::pair<std::string, std::string>& pair, double p0, double p1) {
    if (!map.factored())
        throw PreconditionError("eve_advantage needs a factored envelopment map");
    auto check = check_envelopment(alpha, beta, map, 1e-9);
    if (!check.holds)
        throw PreconditionError("beta does not envelop alpha: deviation " + std::to_string(check.max_deviation) +
                                " at " + to_string(check.witness));
    const auto g = alice_map(map);
    auto image = [&](const std::string& a) {
        auto it = g.find(a);
        if (it == g.end())
            throw PreconditionError("map's g is undefined on alice command '" + a + "'");
        return it->second;
    };

    EveAdvantage out;
    out.err_alpha = helstrom_binary(alpha.state(image(pair.first)).dense(), alpha.state(image(pair.second)).dense(),
                                    p0, p1)
                        .error_probability;
    out.err_beta =
        helstrom_binary(beta.state(pair.first).dense(), beta.state(pair.second).dense(), p0, p1).error_probability;
    return out;
}

} // namespace qmenv
