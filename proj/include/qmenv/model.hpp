#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qmenv/linalg.hpp"

namespace qmenv {

/// Concatenated command of the three process-control computers.
struct Command {
    std::string alice;
    std::string bob;
    std::string eve;

    auto operator<=>(const Command&) const = default;
};

std::string to_string(const Command& c);

/// Finite, non-empty label sets for each party. Labels are kept sorted and
/// unique so every enumeration over commands is lexicographic.
struct CommandSet {
    std::vector<std::string> alice;
    std::vector<std::string> bob;
    std::vector<std::string> eve;

    static CommandSet make(std::vector<std::string> alice, std::vector<std::string> bob, std::vector<std::string> eve);

    bool contains(const Command& c) const;
    bool has_alice(const std::string& a) const;
    bool has_bob(const std::string& b) const;
    bool has_eve(const std::string& e) const;
    std::size_t size() const { return alice.size() * bob.size() * eve.size(); }
    /// All triples, lexicographic.
    std::vector<Command> all() const;

    friend bool operator==(const CommandSet&, const CommandSet&) = default;
};

/// Detection operators keyed by outcome label (ordered lexicographically).
class Povm {
  public:
    Povm() = default;
    explicit Povm(std::map<std::string, ProductOperator> elements);

    const std::map<std::string, ProductOperator>& elements() const noexcept { return elements_; }
    std::vector<std::string> outcomes() const;
    bool has_outcome(const std::string& label) const { return elements_.count(label) != 0; }
    const ProductOperator& element(const std::string& label) const;
    Eigen::Index dim() const;

    friend bool operator==(const Povm&, const Povm&) = default;

  private:
    std::map<std::string, ProductOperator> elements_;
};

/// Key of the measurement function: POVMs depend on (bob, eve) only.
using MeasurementKey = std::pair<std::string, std::string>;

/// Raw ingredients of a model. Missing unitaries default to the identity.
struct ModelParts {
    CommandSet commands;
    std::map<std::string, ProductState> states;
    std::map<Command, ProductOperator> unitaries;
    std::map<MeasurementKey, Povm> povms;
    /// Eve commands scheduled only in Eve's own runs.
    std::set<std::string> eve_only;
    /// Free-form provenance tag set by the protocol builders ("bb84", "b92").
    std::string protocol;
};

/// A quantum-mechanical model of a run of trials: command-indexed state
/// preparation, unitary evolution and POVM measurement. Immutable.
///
/// Construction checks structure (every label covered, dimensions agree);
/// numeric invariants are reported by validate_model().
class QMModel {
  public:
    explicit QMModel(ModelParts parts);

    Eigen::Index dim() const noexcept { return dim_; }
    const std::vector<Eigen::Index>& factor_dims() const noexcept { return factor_dims_; }
    const CommandSet& commands() const noexcept { return parts_.commands; }
    const ModelParts& parts() const noexcept { return parts_; }
    const std::set<std::string>& eve_only() const noexcept { return parts_.eve_only; }
    const std::string& protocol() const noexcept { return parts_.protocol; }

    const ProductState& state(const std::string& alice) const;
    /// Explicit unitary or the identity when none was given.
    ProductOperator unitary(const Command& c) const;
    bool has_explicit_unitary(const Command& c) const { return parts_.unitaries.count(c) != 0; }
    const Povm& povm(const std::string& bob, const std::string& eve) const;
    /// Union of all POVM outcome labels.
    std::set<std::string> outcome_set() const;

    /// Commands whose Eve component is not Eve-only.
    std::vector<Command> public_commands() const;

    friend bool operator==(const QMModel& a, const QMModel& b);

  private:
    ModelParts parts_;
    Eigen::Index dim_ = 0;
    std::vector<Eigen::Index> factor_dims_;
};

struct Violation {
    std::string invariant;
    std::string location;
    double deviation = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string summary() const;
};

/// Checks every numeric invariant of the model; never throws for bad values.
ValidationReport validate_model(const QMModel& model, const Tolerances& tol = kTolerances);

/// Throws ValidationError carrying the report summary when the model is invalid.
void require_valid(const QMModel& model, const std::string& context);

/// Born-rule probability <state| U M U^dagger |state> for one command and outcome.
double born_probability(const QMModel& model, const Command& command, const std::string& outcome);

using Distribution = std::map<std::string, double>;
using ProbabilityTable = std::map<Command, Distribution>;

Distribution probability_row(const QMModel& model, const Command& command);
/// One row per command, rows ordered lexicographically by command.
ProbabilityTable probability_table(const QMModel& model);

/// Same functions on a sub-command-set.
QMModel restrict(const QMModel& model, const CommandSet& subset);

/// |<state(a)|state(a')>| indexed by the model's sorted Alice labels.
struct OverlapMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    double at(const std::string& a, const std::string& b) const;
};

OverlapMatrix overlap_matrix(const QMModel& model);

} // namespace qmenv
