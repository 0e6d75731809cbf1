#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qmenv/envelopment.hpp"
#include "qmenv/model.hpp"
#include "qmenv/trials.hpp"

namespace qmenv {

enum class ProtocolKind { bb84, b92 };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::bb84;
    /// B92 half-angle: states cos(theta)|0> +- sin(theta)|1>, 0 < theta <= pi/4.
    double theta = std::numbers::pi / 8;

    static ProtocolSpec bb84() { return {ProtocolKind::bb84, std::numbers::pi / 8}; }
    static ProtocolSpec b92(double theta) { return {ProtocolKind::b92, theta}; }
    std::string name() const;
};

enum class AttackKind { none, intercept_resend, leakage_readout };

/// Eve's individual attack. Intercept-resend picks her measurement basis
/// uniformly from the protocol's Eve bases on the attacked fraction of trials.
struct AttackSpec {
    AttackKind kind = AttackKind::none;
    double fraction = 1.0;
    /// Leakage bound for leakage_readout.
    double r = 0.0;

    static AttackSpec none() { return {}; }
    static AttackSpec intercept(double fraction = 1.0) { return {AttackKind::intercept_resend, fraction, 0.0}; }
    static AttackSpec leakage(double r) { return {AttackKind::leakage_readout, 1.0, r}; }
    void validate() const;
    std::string name() const;
};

struct QberEstimate {
    double qber = 0.0;
    std::size_t n_compared = 0;
    /// 3 sigma binomial half-width.
    double confidence_halfwidth = 0.0;
    std::size_t n_trials = 0;
    std::size_t n_sifted = 0;

    bool covers(double value) const { return std::abs(value - qber) <= confidence_halfwidth; }
};

/// Label of Eve's passive command (no interaction with the signal).
inline constexpr const char* kEvePass = "none";

/// BB84 over {Z0, Z1, X0, X1}; Bob measures Z or X. Outcomes are
/// "<eve><bob>" with '-' for Eve's part when she does not measure.
QMModel bb84_model(const AttackSpec& attack);

/// B92 with states cos(theta)|0> +- sin(theta)|1>. Bob's command m0 tests
/// for the complement of send1 (a click means "0"), m1 the complement of
/// send0; his outcome is 'c' (conclusive) or 'i' (inconclusive).
QMModel b92_model(double theta, const AttackSpec& attack);

QMModel protocol_model(const ProtocolSpec& protocol, const AttackSpec& attack);

/// Eve's own part of a protocol outcome label (the first character); she
/// does not see Bob's result.
std::string eve_view(const std::string& outcome);

/// Leakage envelopment of a protocol model; the extra Eve command is Eve-only.
Envelopment leakage_attack_model(const QMModel& protocol_model, double r);

/// Alice's and Bob's bit for a trial that survives sifting.
struct SiftedBit {
    int alice = 0;
    int bob = 0;
};

/// nullopt when the trial is discarded (basis mismatch or inconclusive).
std::optional<SiftedBit> sift(const ProtocolSpec& protocol, const Command& command, const std::string& outcome);

/// Probability of choosing each Eve command under the attack.
std::map<std::string, double> eve_command_weights(const QMModel& model, const AttackSpec& attack);

/// Error rate on the sifted key, from the probability table with uniform
/// Alice and Bob choices and Eve's attack weights.
double exact_qber(const QMModel& model, const ProtocolSpec& protocol, const AttackSpec& attack);

/// Random protocol run: uniform Alice and Bob commands, Eve per the attack.
std::vector<Command> protocol_schedule(const QMModel& model, const AttackSpec& attack, std::size_t n,
                                       std::uint64_t seed);

/// Sifts the log and compares the first ceil(sample_fraction * n_sifted)
/// sifted trials in log order.
QberEstimate sift_and_estimate_qber(const RunLog& log, const ProtocolSpec& protocol, double sample_fraction);

} // namespace qmenv
