#include "qmenv/trials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "qmenv/errors.hpp"
#include "qmenv/io.hpp"

namespace qmenv {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
    const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    return splitmix64(key + counter * kGolden);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
}

std::size_t CounterRng::index(std::uint64_t stream, std::uint64_t counter, std::size_t n) const noexcept {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(bits(stream, counter)) * n) >> 64);
}

void RunLog::append(TrialRecord record) {
    if (!records.empty() && record.index <= records.back().index)
        throw PolicyError("trial index " + std::to_string(record.index) + " does not follow " +
                          std::to_string(records.back().index));
    records.push_back(std::move(record));
}

// ---------------------------------------------------------------------------

namespace {

/// Inverse-CDF sampler over each command's lexicographically ordered outcomes.
class OutcomeSampler {
  public:
    explicit OutcomeSampler(const QMModel& model) : model_(model) {}

    const std::string& sample(const Command& c, double u) {
        auto it = cdf_.find(c);
        if (it == cdf_.end())
            it = cdf_.emplace(c, build(c)).first;
        const auto& rows = it->second;
        for (const auto& [cum, label] : rows)
            if (u < cum)
                return label;
        return rows.back().second;
    }

  private:
    std::vector<std::pair<double, std::string>> build(const Command& c) const {
        auto row = probability_row(model_, c);
        double total = 0.0;
        for (const auto& [label, p] : row)
            total += p;
        if (std::abs(total - 1.0) > kTolerances.row_sum)
            throw ValidationError("outcome probabilities for " + to_string(c) + " sum to " + std::to_string(total));
        std::vector<std::pair<double, std::string>> out;
        double cum = 0.0;
        for (const auto& [label, p] : row) {
            if (p <= 0.0)
                continue;
            cum += p;
            out.emplace_back(cum, label);
        }
        return out;
    }

    const QMModel& model_;
    std::map<Command, std::vector<std::pair<double, std::string>>> cdf_;
};

} // namespace

RunLog run_trials(const QMModel& model, const Schedule& schedule, std::size_t n, std::uint64_t seed) {
    if (n < 1)
        throw ParameterError("run_trials needs at least one trial");
    const CounterRng rng(seed);
    OutcomeSampler sampler(model);
    RunLog log;
    log.model_id = model_id(model);
    log.seed = seed;
    log.records.reserve(n);

    for (std::size_t k = 0; k < n; ++k) {
        Command c;
        if (const auto* list = std::get_if<std::vector<Command>>(&schedule)) {
            if (list->empty())
                throw PolicyError("empty command schedule");
            c = (*list)[k % list->size()];
        } else {
            const auto& policy = std::get<FeedbackPolicy>(schedule);
            c = policy.next_command(std::span<const TrialRecord>(log.records), model.commands());
        }
        if (!model.commands().contains(c))
            throw PolicyError("trial " + std::to_string(k) + ": command " + to_string(c) + " is not in the model");
        const std::uint64_t pos = k;
        const auto& outcome = sampler.sample(c, rng.uniform(CounterRng::outcomes, pos));
        log.records.push_back({k, std::move(c), outcome, pos});
    }
    return log;
}

std::map<Command, OutcomeCounts> empirical_frequencies(const RunLog& log) {
    if (log.records.empty())
        throw InsufficientDataError("run log has no trials");
    std::map<Command, OutcomeCounts> out;
    for (const auto& r : log.records) {
        auto& row = out[r.command];
        ++row.counts[r.outcome];
        ++row.total;
    }
    for (auto& [c, row] : out)
        for (const auto& [label, count] : row.counts)
            row.frequencies[label] = static_cast<double>(count) / static_cast<double>(row.total);
    return out;
}

FitReport fit_model(const QMModel& model, const RunLog& log) {
    FitReport report;
    const auto observed = empirical_frequencies(log);
    if (const auto id = model_id(model); id != log.model_id)
        report.warnings.push_back("model_id mismatch: log was generated by " + log.model_id + ", fitting " + id);

    bool first = true;
    for (const auto& [c, counts] : observed) {
        if (!model.commands().contains(c))
            throw DomainError("log command " + to_string(c) + " is not in the model");
        FitRow row;
        row.observed = counts;
        row.predicted = probability_row(model, c);
        for (const auto& [label, count] : counts.counts)
            if (!row.predicted.count(label))
                throw DomainError("log outcome '" + label + "' is not an outcome of " + to_string(c));
        double tv = 0.0;
        for (const auto& [label, p] : row.predicted) {
            auto it = counts.frequencies.find(label);
            tv += std::abs(p - (it == counts.frequencies.end() ? 0.0 : it->second));
        }
        row.tv = 0.5 * tv;
        report.max_tv = std::max(report.max_tv, row.tv);
        report.n_min = first ? counts.total : std::min(report.n_min, counts.total);
        first = false;
        report.per_command.emplace(c, std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

void check_field(const std::string& s, const char* what) {
    if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos)
        throw ParameterError(std::string(what) + " label '" + s + "' is empty or contains a tab or newline");
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
    return v;
}

std::string header_value(const std::string& field, const std::string& key, std::size_t line) {
    const auto prefix = key + "=";
    if (field.rfind(prefix, 0) != 0)
        throw ParseError("header field '" + field + "' should start with '" + prefix + "'", line);
    return field.substr(prefix.size());
}

} // namespace

void write_log(const RunLog& log, std::ostream& out) {
    out << "#qmenv-runlog\tversion=" << kLogFormatVersion << "\tmodel_id=" << log.model_id << "\tseed=" << log.seed
        << "\trng=" << log.rng << '\n';
    for (const auto& c : log.comments) {
        if (c.find('\n') != std::string::npos)
            throw ParameterError("log comment contains a newline");
        out << '#' << c << '\n';
    }
    for (const auto& r : log.records) {
        check_field(r.command.alice, "alice");
        check_field(r.command.bob, "bob");
        check_field(r.command.eve, "eve");
        check_field(r.outcome, "outcome");
        out << r.index << '\t' << r.command.alice << '\t' << r.command.bob << '\t' << r.command.eve << '\t'
            << r.outcome << '\t' << r.stream_position << '\n';
    }
}

std::string log_to_text(const RunLog& log) {
    std::ostringstream os;
    write_log(log, os);
    return os.str();
}

RunLog read_log(std::istream& in) {
    std::ostringstream os;
    os << in.rdbuf();
    return log_from_text(os.str());
}

RunLog log_from_text(const std::string& text) {
    RunLog log;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    while (start < text.size()) {
        ++line_no;
        auto end = text.find('\n', start);
        if (end == std::string::npos)
            throw ParseError("truncated line (no terminating newline)", line_no);
        const std::string line = text.substr(start, end - start);
        start = end + 1;

        if (!have_header) {
            auto f = split_tabs(line);
            if (f.size() != 5 || f[0] != "#qmenv-runlog")
                throw ParseError("missing run-log header", line_no);
            auto version = header_value(f[1], "version", line_no);
            if (version != std::to_string(kLogFormatVersion))
                throw ParseError("unsupported run-log version " + version, line_no);
            log.model_id = header_value(f[2], "model_id", line_no);
            log.seed = parse_u64(header_value(f[3], "seed", line_no), line_no, "seed");
            log.rng = header_value(f[4], "rng", line_no);
            if (log.rng != kRngName)
                throw ParseError("unknown rng '" + log.rng + "'", line_no);
            have_header = true;
            continue;
        }
        if (!line.empty() && line[0] == '#') {
            log.comments.push_back(line.substr(1));
            continue;
        }
        auto f = split_tabs(line);
        if (f.size() != 6)
            throw ParseError("expected 6 tab-separated fields, got " + std::to_string(f.size()), line_no);
        TrialRecord r;
        r.index = parse_u64(f[0], line_no, "trial index");
        r.command = {f[1], f[2], f[3]};
        r.outcome = f[4];
        r.stream_position = parse_u64(f[5], line_no, "stream position");
        for (std::size_t i = 1; i <= 4; ++i)
            if (f[i].empty())
                throw ParseError("empty label field", line_no);
        if (!log.records.empty() && r.index <= log.records.back().index)
            throw ParseError("trial index does not increase", line_no);
        log.records.push_back(std::move(r));
    }
    if (!have_header)
        throw ParseError("empty run log");
    return log;
}

void save_log(const RunLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    write_log(log, out);
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

RunLog load_log(const std::filesystem::path& path) { return log_from_text(read_text_file(path)); }

// ---------------------------------------------------------------------------

double entropy_bits(const std::map<std::string, double>& dist) {
    double h = 0.0;
    for (const auto& [label, p] : dist)
        if (p > 0.0)
            h -= p * std::log2(p);
    return h;
}

namespace {

// Pr(view | a) from Pr(outcome | a).
Distribution coarse_row(const Distribution& row, const OutcomeView& view) {
    if (!view)
        return row;
    Distribution out;
    for (const auto& [j, p] : row)
        out[view(j)] += p;
    return out;
}

std::map<std::string, double> update(const std::map<std::string, double>& prior,
                                     const std::map<std::string, Distribution>& rows, const std::string& seen) {
    std::map<std::string, double> next;
    double total = 0.0;
    for (const auto& [a, pa] : prior) {
        const auto& row = rows.at(a);
        const auto it = row.find(seen);
        next[a] = pa * (it == row.end() ? 0.0 : it->second);
        total += next[a];
    }
    if (!(total > 0.0))
        throw DomainError("observation '" + seen + "' has zero probability under the prior");
    for (auto& [a, p] : next)
        p /= total;
    return next;
}

} // namespace

std::map<std::string, double> posterior_from_history(const QMModel& model, const Prior& prior,
                                                     std::span<const TrialRecord> history,
                                                     const OutcomeView& view) {
    if (!view) {
        Prior current = prior;
        for (const auto& r : history)
            current.weights = bayes_posterior(model, current, r.command.bob, r.command.eve, r.outcome);
        return current.weights;
    }
    prior.validate();
    auto current = prior.weights;
    for (const auto& r : history) {
        std::map<std::string, Distribution> rows;
        for (const auto& [a, w] : current)
            rows[a] = coarse_row(probability_row(model, {a, r.command.bob, r.command.eve}), view);
        current = update(current, rows, view(r.outcome));
    }
    return current;
}

FeedbackPolicy greedy_discrimination_policy(const QMModel& model, const Prior& prior, const Command& base,
                                            const OutcomeView& view) {
    prior.validate();
    if (!model.commands().has_alice(base.alice) || !model.commands().has_bob(base.bob))
        throw LookupError("greedy policy base command " + to_string(base) + " is not in the model");
    // Likelihood table Pr(observation | a, bob, e) for every Eve command.
    auto likelihood = std::make_shared<std::map<std::string, std::map<std::string, Distribution>>>();
    for (const auto& e : model.commands().eve)
        for (const auto& [a, w] : prior.weights)
            (*likelihood)[e][a] = coarse_row(probability_row(model, {a, base.bob, e}), view);

    auto held = std::make_shared<const QMModel>(model);
    auto choose = [held, prior, base, likelihood, view](std::span<const TrialRecord> history,
                                                         const CommandSet& commands) {
        const auto post = posterior_from_history(*held, prior, history, view);
        std::string best;
        double best_h = std::numeric_limits<double>::infinity();
        for (const auto& e : commands.eve) {
            const auto& rows = likelihood->at(e);
            std::map<std::string, double> evidence;
            for (const auto& [a, pa] : post)
                for (const auto& [j, pj] : rows.at(a))
                    evidence[j] += pa * pj;
            double expected = 0.0;
            for (const auto& [j, pj] : evidence) {
                if (!(pj > 0.0))
                    continue;
                std::map<std::string, double> next;
                for (const auto& [a, pa] : post) {
                    const auto it = rows.at(a).find(j);
                    next[a] = pa * (it == rows.at(a).end() ? 0.0 : it->second) / pj;
                }
                expected += pj * entropy_bits(next);
            }
            if (expected < best_h - 1e-12) {
                best_h = expected;
                best = e;
            }
        }
        return Command{base.alice, base.bob, best};
    };
    return FeedbackPolicy{"greedy-entropy", std::move(choose)};
}

FeedbackPolicy uniform_eve_policy(const QMModel& model, const Command& base, std::uint64_t seed) {
    if (!model.commands().has_alice(base.alice) || !model.commands().has_bob(base.bob))
        throw LookupError("policy base command " + to_string(base) + " is not in the model");
    const CounterRng rng(seed);
    auto choose = [rng, base](std::span<const TrialRecord> history, const CommandSet& commands) {
        const auto k = rng.index(CounterRng::policy, history.size(), commands.eve.size());
        return Command{base.alice, base.bob, commands.eve[k]};
    };
    return FeedbackPolicy{"uniform-eve", std::move(choose)};
}

std::vector<Command> cyclic_schedule(const QMModel& model) { return model.public_commands(); }

std::vector<Command> random_schedule(const QMModel& model, std::size_t n, std::uint64_t seed) {
    const auto pool = model.public_commands();
    const CounterRng rng(seed);
    std::vector<Command> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        out.push_back(pool[rng.index(CounterRng::schedule, k, pool.size())]);
    return out;
}

} // namespace qmenv
