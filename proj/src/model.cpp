#include "qmenv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmenv/errors.hpp"

namespace qmenv {

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

bool contains_label(const std::vector<std::string>& v, const std::string& x) {
    return std::binary_search(v.begin(), v.end(), x);
}

std::string fmt_dims(const std::vector<Eigen::Index>& d) {
    std::ostringstream os;
    for (std::size_t i = 0; i < d.size(); ++i)
        os << (i ? "x" : "") << d[i];
    return os.str();
}

} // namespace

std::string to_string(const Command& c) { return "(" + c.alice + ", " + c.bob + ", " + c.eve + ")"; }

CommandSet CommandSet::make(std::vector<std::string> alice, std::vector<std::string> bob, std::vector<std::string> eve) {
    return CommandSet{sorted_unique(std::move(alice)), sorted_unique(std::move(bob)), sorted_unique(std::move(eve))};
}

bool CommandSet::has_alice(const std::string& a) const { return contains_label(alice, a); }
bool CommandSet::has_bob(const std::string& b) const { return contains_label(bob, b); }
bool CommandSet::has_eve(const std::string& e) const { return contains_label(eve, e); }

bool CommandSet::contains(const Command& c) const { return has_alice(c.alice) && has_bob(c.bob) && has_eve(c.eve); }

std::vector<Command> CommandSet::all() const {
    std::vector<Command> out;
    out.reserve(size());
    for (const auto& a : alice)
        for (const auto& b : bob)
            for (const auto& e : eve)
                out.push_back({a, b, e});
    return out;
}

// ---------------------------------------------------------------------------

Povm::Povm(std::map<std::string, ProductOperator> elements) : elements_(std::move(elements)) {
    if (elements_.empty())
        throw ShapeError("POVM must have at least one outcome");
    const auto d = elements_.begin()->second.dim();
    for (const auto& [label, m] : elements_)
        if (m.dim() != d)
            throw ShapeError("POVM element '" + label + "' has dimension " + std::to_string(m.dim()) + ", expected " +
                             std::to_string(d));
}

std::vector<std::string> Povm::outcomes() const {
    std::vector<std::string> out;
    for (const auto& [label, m] : elements_)
        out.push_back(label);
    return out;
}

const ProductOperator& Povm::element(const std::string& label) const {
    auto it = elements_.find(label);
    if (it == elements_.end())
        throw LookupError("unknown outcome '" + label + "'");
    return it->second;
}

Eigen::Index Povm::dim() const { return elements_.empty() ? 0 : elements_.begin()->second.dim(); }

// ---------------------------------------------------------------------------

QMModel::QMModel(ModelParts parts) : parts_(std::move(parts)) {
    auto& cs = parts_.commands;
    cs = CommandSet::make(cs.alice, cs.bob, cs.eve);
    if (cs.alice.empty() || cs.bob.empty() || cs.eve.empty())
        throw DomainError("command sets for alice, bob and eve must all be non-empty");

    for (const auto& a : cs.alice) {
        auto it = parts_.states.find(a);
        if (it == parts_.states.end())
            throw LookupError("no state for alice command '" + a + "'");
        if (factor_dims_.empty()) {
            factor_dims_ = it->second.factor_dims();
            dim_ = it->second.dim();
        } else if (it->second.factor_dims() != factor_dims_) {
            throw ShapeError("state for '" + a + "' has factor dims " + fmt_dims(it->second.factor_dims()) +
                             ", expected " + fmt_dims(factor_dims_));
        }
    }
    if (dim_ < 1)
        throw ShapeError("model dimension must be >= 1");
    for (const auto& [label, s] : parts_.states)
        if (!cs.has_alice(label))
            throw LookupError("state given for unknown alice command '" + label + "'");

    for (const auto& [c, u] : parts_.unitaries) {
        if (!cs.contains(c))
            throw LookupError("unitary given for unknown command " + to_string(c));
        if (u.dim() != dim_)
            throw ShapeError("unitary for " + to_string(c) + " has dimension " + std::to_string(u.dim()));
    }

    for (const auto& b : cs.bob)
        for (const auto& e : cs.eve) {
            auto it = parts_.povms.find({b, e});
            if (it == parts_.povms.end())
                throw LookupError("no POVM for measurement (" + b + ", " + e + ")");
            if (it->second.dim() != dim_)
                throw ShapeError("POVM for (" + b + ", " + e + ") has dimension " + std::to_string(it->second.dim()));
        }
    for (const auto& [key, p] : parts_.povms)
        if (!cs.has_bob(key.first) || !cs.has_eve(key.second))
            throw LookupError("POVM given for unknown measurement (" + key.first + ", " + key.second + ")");

    for (const auto& e : parts_.eve_only)
        if (!cs.has_eve(e))
            throw LookupError("eve-only tag on unknown eve command '" + e + "'");
}

const ProductState& QMModel::state(const std::string& alice) const {
    auto it = parts_.states.find(alice);
    if (it == parts_.states.end())
        throw LookupError("unknown alice command '" + alice + "'");
    return it->second;
}

ProductOperator QMModel::unitary(const Command& c) const {
    if (!parts_.commands.contains(c))
        throw LookupError("unknown command " + to_string(c));
    auto it = parts_.unitaries.find(c);
    return it == parts_.unitaries.end() ? ProductOperator::identity(factor_dims_) : it->second;
}

const Povm& QMModel::povm(const std::string& bob, const std::string& eve) const {
    auto it = parts_.povms.find({bob, eve});
    if (it == parts_.povms.end()) {
        if (!parts_.commands.has_bob(bob))
            throw LookupError("unknown bob command '" + bob + "'");
        throw LookupError("unknown eve command '" + eve + "'");
    }
    return it->second;
}

std::set<std::string> QMModel::outcome_set() const {
    std::set<std::string> out;
    for (const auto& [key, p] : parts_.povms)
        for (const auto& [label, m] : p.elements())
            out.insert(label);
    return out;
}

std::vector<Command> QMModel::public_commands() const {
    std::vector<Command> out;
    for (auto& c : parts_.commands.all())
        if (!parts_.eve_only.count(c.eve))
            out.push_back(std::move(c));
    return out;
}

bool operator==(const QMModel& a, const QMModel& b) {
    const auto& x = a.parts_;
    const auto& y = b.parts_;
    return x.commands == y.commands && x.states == y.states && x.unitaries == y.unitaries && x.povms == y.povms &&
           x.eve_only == y.eve_only && x.protocol == y.protocol;
}

// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
    if (ok())
        return "valid";
    std::ostringstream os;
    os << violations.size() << " violation(s)";
    for (const auto& v : violations)
        os << "; " << v.invariant << " at " << v.location << " (deviation " << v.deviation << ")";
    return os.str();
}

namespace {

struct WorstEntry {
    double value = 0.0;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
};

WorstEntry worst_entry(const Matrix& m) {
    WorstEntry w;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double a = std::abs(m(i, j));
            if (a > w.value || (a == w.value && (i < w.row || (i == w.row && j < w.col)))) {
                w = {a, i, j};
            }
        }
    return w;
}

std::string entry_location(const std::string& where, const WorstEntry& w) {
    return where + " entry (" + std::to_string(w.row + 1) + "," + std::to_string(w.col + 1) + ")";
}

} // namespace

ValidationReport validate_model(const QMModel& model, const Tolerances& tol) {
    ValidationReport report;
    auto add = [&](std::string inv, std::string loc, double dev) {
        report.violations.push_back({std::move(inv), std::move(loc), dev});
    };
    const auto& parts = model.parts();

    for (const auto& [label, s] : parts.states) {
        double dev = std::abs(s.dense().norm() - 1.0);
        if (dev > tol.state_norm)
            add("state_norm", "state '" + label + "'", dev);
    }

    for (const auto& [c, u] : parts.unitaries) {
        double dev = unitary_deviation(u.dense());
        if (dev > tol.unitary)
            add("unitary", "unitary " + to_string(c), dev);
    }

    for (const auto& [key, povm] : parts.povms) {
        const std::string where = "povm (" + key.first + ", " + key.second + ")";
        Matrix sum = Matrix::Zero(model.dim(), model.dim());
        for (const auto& [label, el] : povm.elements()) {
            Matrix m = el.dense();
            sum += m;
            double herm = hermitian_deviation(m);
            if (herm > tol.hermitian)
                add("hermitian", where + " outcome '" + label + "'", herm);
            double lo = min_eigenvalue(m);
            if (lo < -tol.psd)
                add("positive_semidefinite", where + " outcome '" + label + "'", -lo);
        }
        auto w = worst_entry(sum - Matrix::Identity(model.dim(), model.dim()));
        if (w.value > tol.completeness)
            add("completeness", entry_location(where, w), w.value);
    }

    for (const auto& c : parts.commands.all()) {
        const auto& povm = model.povm(c.bob, c.eve);
        const auto u = model.unitary(c);
        const auto& s = model.state(c.alice);
        double total = 0.0;
        for (const auto& [label, el] : povm.elements()) {
            Complex p = sandwich(s, u, el);
            if (std::abs(p.imag()) > tol.imag_residue)
                add("imaginary_residue", to_string(c) + " outcome '" + label + "'", std::abs(p.imag()));
            total += p.real();
        }
        double dev = std::abs(total - 1.0);
        if (dev > tol.row_sum)
            add("row_sum", to_string(c), dev);
    }
    return report;
}

void require_valid(const QMModel& model, const std::string& context) {
    auto report = validate_model(model);
    if (!report.ok())
        throw ValidationError(context + ": invalid model: " + report.summary());
}

double born_probability(const QMModel& model, const Command& command, const std::string& outcome) {
    if (!model.commands().contains(command))
        throw LookupError("unknown command " + to_string(command));
    const auto& el = model.povm(command.bob, command.eve).element(outcome);
    Complex p = sandwich(model.state(command.alice), model.unitary(command), el);
    if (std::abs(p.imag()) > kTolerances.imag_residue)
        throw ValidationError("imaginary residue " + std::to_string(std::abs(p.imag())) + " for " +
                              to_string(command) + " outcome '" + outcome + "'");
    return std::clamp(p.real(), 0.0, 1.0);
}

Distribution probability_row(const QMModel& model, const Command& command) {
    if (!model.commands().contains(command))
        throw LookupError("unknown command " + to_string(command));
    Distribution row;
    for (const auto& label : model.povm(command.bob, command.eve).outcomes())
        row[label] = born_probability(model, command, label);
    return row;
}

ProbabilityTable probability_table(const QMModel& model) {
    ProbabilityTable table;
    for (const auto& c : model.commands().all())
        table.emplace(c, probability_row(model, c));
    return table;
}

QMModel restrict(const QMModel& model, const CommandSet& subset) {
    const auto& full = model.commands();
    auto check = [](const std::vector<std::string>& sub, const std::vector<std::string>& all, const char* party) {
        if (sub.empty())
            throw DomainError(std::string("restriction leaves the ") + party + " command set empty");
        for (const auto& label : sub)
            if (!std::binary_search(all.begin(), all.end(), label))
                throw DomainError(std::string("restriction names unknown ") + party + " command '" + label + "'");
    };
    auto sub = CommandSet::make(subset.alice, subset.bob, subset.eve);
    check(sub.alice, full.alice, "alice");
    check(sub.bob, full.bob, "bob");
    check(sub.eve, full.eve, "eve");

    const auto& src = model.parts();
    ModelParts parts;
    parts.commands = sub;
    parts.protocol = src.protocol;
    for (const auto& a : sub.alice)
        parts.states.emplace(a, src.states.at(a));
    for (const auto& [c, u] : src.unitaries)
        if (sub.contains(c))
            parts.unitaries.emplace(c, u);
    for (const auto& b : sub.bob)
        for (const auto& e : sub.eve)
            parts.povms.emplace(MeasurementKey{b, e}, src.povms.at({b, e}));
    for (const auto& e : src.eve_only)
        if (sub.has_eve(e))
            parts.eve_only.insert(e);
    return QMModel(std::move(parts));
}

double OverlapMatrix::at(const std::string& a, const std::string& b) const {
    auto index = [&](const std::string& x) {
        auto it = std::lower_bound(labels.begin(), labels.end(), x);
        if (it == labels.end() || *it != x)
            throw LookupError("unknown alice command '" + x + "'");
        return static_cast<Eigen::Index>(it - labels.begin());
    };
    return values(index(a), index(b));
}

OverlapMatrix overlap_matrix(const QMModel& model) {
    OverlapMatrix s;
    s.labels = model.commands().alice;
    const auto n = static_cast<Eigen::Index>(s.labels.size());
    s.values = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double v = std::abs(inner_product(model.state(s.labels[i]), model.state(s.labels[j])));
            v = std::min(v, 1.0);
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    return s;
}

} // namespace qmenv
