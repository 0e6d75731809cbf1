#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qmenv/discrimination.hpp"
#include "qmenv/model.hpp"

namespace qmenv {

inline constexpr const char* kRngName = "splitmix64-ctr-v1";
inline constexpr int kLogFormatVersion = 1;

/// Counter-based generator: the value at (stream, counter) depends only on
/// the seed, so any draw can be reproduced from its recorded position.
class CounterRng {
  public:
    enum Stream : std::uint64_t { outcomes = 0, schedule = 1, policy = 2 };

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept;
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept;
    /// Uniform index in [0, n).
    std::size_t index(std::uint64_t stream, std::uint64_t counter, std::size_t n) const noexcept;

  private:
    std::uint64_t seed_;
};

struct TrialRecord {
    std::uint64_t index = 0;
    Command command;
    std::string outcome;
    std::uint64_t stream_position = 0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Append-only record of a run.
struct RunLog {
    std::string model_id;
    std::uint64_t seed = 0;
    std::string rng = kRngName;
    /// Free-form '#' lines carried after the header (config echo).
    std::vector<std::string> comments;
    std::vector<TrialRecord> records;

    /// Throws PolicyError if the index does not increase.
    void append(TrialRecord record);

    friend bool operator==(const RunLog&, const RunLog&) = default;
};

/// Chooses trial k+1's command from the records of trials 0..k.
struct FeedbackPolicy {
    std::string name;
    std::function<Command(std::span<const TrialRecord>, const CommandSet&)> next_command;
};

/// A fixed list is replayed cyclically.
using Schedule = std::variant<std::vector<Command>, FeedbackPolicy>;

RunLog run_trials(const QMModel& model, const Schedule& schedule, std::size_t n, std::uint64_t seed);

struct OutcomeCounts {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    Distribution frequencies;
};

std::map<Command, OutcomeCounts> empirical_frequencies(const RunLog& log);

struct FitRow {
    OutcomeCounts observed;
    Distribution predicted;
    double tv = 0.0;
};

struct FitReport {
    std::map<Command, FitRow> per_command;
    double max_tv = 0.0;
    std::size_t n_min = 0;
    std::vector<std::string> warnings;
};

/// Per-command total-variation distance between the model and the log.
FitReport fit_model(const QMModel& model, const RunLog& log);

void write_log(const RunLog& log, std::ostream& out);
std::string log_to_text(const RunLog& log);
RunLog read_log(std::istream& in);
RunLog log_from_text(const std::string& text);
void save_log(const RunLog& log, const std::filesystem::path& path);
RunLog load_log(const std::filesystem::path& path);

/// Shannon entropy in bits.
double entropy_bits(const std::map<std::string, double>& dist);

/// Maps a full outcome label to the part the inferring party observes.
/// An empty view means the whole label is observed.
using OutcomeView = std::function<std::string(const std::string&)>;

/// Posterior over Alice's commands after the measurements recorded in
/// `history`, conditioning only on `view(outcome)`.
std::map<std::string, double> posterior_from_history(const QMModel& model, const Prior& prior,
                                                     std::span<const TrialRecord> history,
                                                     const OutcomeView& view = {});

/// Holds Alice's and Bob's parts of `base` fixed and picks the Eve command
/// that minimises the expected posterior entropy of Alice's command. Ties go
/// to the lexicographically first Eve label.
FeedbackPolicy greedy_discrimination_policy(const QMModel& model, const Prior& prior, const Command& base,
                                            const OutcomeView& view = {});

/// Uniformly random Eve command each trial, from the policy stream of `seed`.
FeedbackPolicy uniform_eve_policy(const QMModel& model, const Command& base, std::uint64_t seed);

/// Round-robin over the model's public commands.
std::vector<Command> cyclic_schedule(const QMModel& model);

/// Independent uniform draws over the model's public commands.
std::vector<Command> random_schedule(const QMModel& model, std::size_t n, std::uint64_t seed);

} // namespace qmenv
