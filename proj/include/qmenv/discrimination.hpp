#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qmenv/model.hpp"

namespace qmenv {

class EnvelopmentMap;

/// Prior over Alice's commands.
struct Prior {
    std::map<std::string, double> weights;

    static Prior uniform(const std::vector<std::string>& labels);
    /// Throws ParameterError on negative weights or a sum away from 1.
    void validate() const;
};

/// Measurement for guessing which of several states was sent. Outcomes of
/// `povm` map to indices of the input states through `decision_rule`.
struct DiscriminationResult {
    Povm povm;
    double error_probability = 0.0;
    std::map<std::string, std::size_t> decision_rule;
};

/// Posterior over b_A after observing `outcome` for measurement (bob, eve).
std::map<std::string, double> bayes_posterior(const QMModel& model, const Prior& prior, const std::string& bob,
                                              const std::string& eve, const std::string& outcome);

/// (1 - sqrt(1 - 4 p0 p1 s^2)) / 2 for pure states with |<a|b>| = s.
double helstrom_error(double overlap, double p0 = 0.5, double p1 = 0.5);

/// Optimal two-state measurement: projector onto the positive part of
/// p0|s0><s0| - p1|s1><s1| decides state 0, its complement decides state 1.
DiscriminationResult helstrom_binary(const Vector& state0, const Vector& state1, double p0 = 0.5, double p1 = 0.5);

/// Square-root measurement. Sub-optimal in general for more than two states.
/// The kernel of the average state is folded into the first outcome so the
/// elements sum to the identity.
DiscriminationResult pretty_good_measurement(const std::vector<Vector>& states, const std::vector<double>& prior);

/// 1 - sum_i prior_i <s_i| M_{decide i} |s_i>, recomputed from the POVM.
double decision_error(const DiscriminationResult& result, const std::vector<Vector>& states,
                      const std::vector<double>& prior);

struct EveAdvantage {
    double err_alpha = 0.0;
    double err_beta = 0.0;
};

/// Helstrom error on a pair of Alice's states under both models. `pair`
/// names beta's Alice commands; alpha's are found through the map's g.
EveAdvantage eve_advantage(const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& map,
                           const std::pair<std::string, std::string>& pair, double p0 = 0.5, double p1 = 0.5);

} // namespace qmenv
