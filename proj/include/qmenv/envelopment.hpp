#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmenv/model.hpp"

namespace qmenv {

/// A (command, outcome) pair of some model.
struct Observation {
    Command command;
    std::string outcome;

    auto operator<=>(const Observation&) const = default;
};

std::string to_string(const Observation& o);

/// f = (g, h) with no outcome mixing.
struct FactoredMap {
    std::map<Command, Command> g;
    std::map<std::string, std::string> h;

    friend bool operator==(const FactoredMap&, const FactoredMap&) = default;
};

/// Partial map from beta's (command, outcome) pairs onto alpha's. Total on
/// its declared domain; when the factored form is present every entry is
/// (g(b), h(j)).
class EnvelopmentMap {
  public:
    EnvelopmentMap() = default;
    explicit EnvelopmentMap(std::map<Observation, Observation> mapping,
                            std::optional<FactoredMap> factored = std::nullopt);

    /// Domain = {(b, j) : b in dom g, j an outcome of beta at b, j in dom h}.
    static EnvelopmentMap from_factors(const QMModel& beta, FactoredMap factors);
    static EnvelopmentMap identity(const QMModel& model);

    const std::map<Observation, Observation>& mapping() const noexcept { return mapping_; }
    const std::optional<FactoredMap>& factored() const noexcept { return factored_; }
    bool contains(const Observation& o) const { return mapping_.count(o) != 0; }
    const Observation& operator()(const Observation& o) const;
    /// Preimage of every image point.
    std::map<Observation, std::vector<Observation>> preimages() const;

    friend bool operator==(const EnvelopmentMap&, const EnvelopmentMap&) = default;

  private:
    std::map<Observation, Observation> mapping_;
    std::optional<FactoredMap> factored_;
};

struct ExtraPovmPolicy {
    enum class Kind { helstrom_pair, pretty_good };
    Kind kind = Kind::helstrom_pair;
    /// Alice commands the Helstrom measurement separates; defaults to the
    /// first two in label order.
    std::optional<std::pair<std::string, std::string>> pair;
};

struct LeakageSpec {
    double r = 0.0;
    Eigen::Index leakage_dim = 0;
    std::map<std::string, Vector> w_vectors;
    std::vector<std::string> extra_commands;
    ExtraPovmPolicy policy;
};

struct Envelopment {
    QMModel beta;
    EnvelopmentMap map;
    LeakageSpec leakage;
};

/// Outcome label used by the extra Eve measurement for "guess Alice sent a".
std::string guess_outcome(const std::string& alice);
/// Marker appended to extra Eve command labels.
inline constexpr char kExtraMarker = '#';

/// n unit vectors in C^n with Gram matrix (1-r) I + r J.
std::vector<Vector> build_leakage_vectors(std::size_t n, double r);

/// Tensor every state of alpha with a leakage vector, extend Eve's
/// measurements by the identity on the leakage space, and add one extra Eve
/// command whose POVM discriminates the enlarged states.
Envelopment envelop_with_leakage(const QMModel& alpha, double r, const ExtraPovmPolicy& policy = {});

struct EnvelopmentCheck {
    bool holds = false;
    double max_deviation = 0.0;
    Observation witness;
};

/// Compares Pr_alpha(j|b) with the sum of Pr_beta over the preimage of (b, j),
/// for every alpha outcome of every command in the image of f.
EnvelopmentCheck check_envelopment(const QMModel& alpha, const QMModel& beta, const EnvelopmentMap& f, double tol);

struct OverlapReduction {
    bool holds = false;
    std::pair<std::string, std::string> worst_pair;
    /// max of S_beta - r S_alpha over distinct pairs
    double worst_margin = 0.0;
};

/// Checks S_beta(a, a') <= r S_alpha(g(a), g(a')) + 1e-10 for all a != a'.
/// `g` maps beta's Alice commands onto alpha's.
OverlapReduction verify_overlap_reduction(const QMModel& alpha, const QMModel& beta,
                                          const std::map<std::string, std::string>& g, double r);

/// Alice-command part of a factored map's g.
std::map<std::string, std::string> alice_map(const EnvelopmentMap& f);

/// f1 after f2, where f2 envelops beta by gamma and f1 envelops alpha by beta.
EnvelopmentMap compose_envelopments(const EnvelopmentMap& f2, const EnvelopmentMap& f1);

} // namespace qmenv
