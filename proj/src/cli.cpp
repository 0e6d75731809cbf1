#include "qmenv/cli.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "qmenv/discrimination.hpp"
#include "qmenv/envelopment.hpp"
#include "qmenv/errors.hpp"
#include "qmenv/io.hpp"
#include "qmenv/protocols.hpp"
#include "qmenv/trials.hpp"

namespace qmenv {

namespace {

/// Shortest decimal that round-trips.
std::string num(double x) { return json(x).dump(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

struct Options {
    std::string model;
    std::string beta;
    std::string map;
    std::string log;
    std::string out;
    std::string schedule;
    std::string policy = "cycle";
    std::string extra_policy = "helstrom";
    std::string pair;
    std::string priors = "0.5,0.5";
    std::string protocol = "bb84";
    std::string attack = "none";
    std::string alice;
    std::string bob;
    double r = 0.0;
    double theta = std::numbers::pi / 8;
    double fraction = 1.0;
    double sample_fraction = 1.0;
    double tol = 1e-10;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
};

/// Config echo plus content hashes of every input file.
json provenance(const std::string& subcommand, const Options& o, const std::vector<std::string>& inputs) {
    json cfg = {{"subcommand", subcommand},
                {"model", o.model},
                {"beta", o.beta},
                {"map", o.map},
                {"log", o.log},
                {"out", o.out},
                {"schedule", o.schedule},
                {"policy", o.policy},
                {"extra_policy", o.extra_policy},
                {"pair", o.pair},
                {"priors", o.priors},
                {"protocol", o.protocol},
                {"attack", o.attack},
                {"alice", o.alice},
                {"bob", o.bob},
                {"r", o.r},
                {"theta", o.theta},
                {"fraction", o.fraction},
                {"sample_fraction", o.sample_fraction},
                {"tol", o.tol},
                {"trials", o.trials},
                {"seed", o.seed}};
    json hashes = json::object();
    for (const auto& path : inputs)
        if (!path.empty())
            hashes[path] = sha256_hex(read_text_file(path));
    return {{"tool", "qmenv"}, {"version", "0.1.0"}, {"config", cfg}, {"inputs", hashes}};
}

/// Prints the report and, with --out, writes it behind a provenance line.
void emit_report(const std::string& report, const Options& o, const json& prov, std::ostream& out) {
    out << report;
    if (!o.out.empty())
        write_text_file(o.out, "# provenance: " + prov.dump() + "\n" + report);
}

AttackSpec parse_attack(const Options& o) {
    AttackSpec a;
    if (o.attack == "none")
        a = AttackSpec::none();
    else if (o.attack == "intercept")
        a = AttackSpec::intercept(o.fraction);
    else if (o.attack == "leakage")
        a = AttackSpec::leakage(o.r);
    else
        throw ParseError("unknown attack '" + o.attack + "'");
    a.validate();
    return a;
}

ProtocolSpec parse_protocol(const Options& o) {
    if (o.protocol == "bb84")
        return ProtocolSpec::bb84();
    if (o.protocol == "b92")
        return ProtocolSpec::b92(o.theta);
    throw ParseError("unknown protocol '" + o.protocol + "'");
}

std::pair<std::string, std::string> parse_pair(const std::string& s) {
    auto parts = split(s, ',');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
        throw ParseError("--pair expects two comma-separated alice labels, got '" + s + "'");
    return {parts[0], parts[1]};
}

std::pair<double, double> parse_priors(const std::string& s) {
    auto parts = split(s, ',');
    if (parts.size() != 2)
        throw ParseError("--priors expects two comma-separated weights, got '" + s + "'");
    try {
        return {std::stod(parts[0]), std::stod(parts[1])};
    } catch (const std::exception&) {
        throw ParseError("--priors: cannot parse '" + s + "'");
    }
}

std::vector<Command> load_schedule(const std::string& path) {
    std::vector<Command> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '\t');
        if (f.size() != 3)
            throw ParseError("schedule line must be alice<TAB>bob<TAB>eve", n);
        out.push_back({f[0], f[1], f[2]});
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    const auto report = validate_model(model);
    std::ostringstream os;
    os << "valid=" << (report.ok() ? "true" : "false") << "\n";
    os << "violations=" << report.violations.size() << "\n";
    for (const auto& v : report.violations)
        os << "violation\t" << v.invariant << "\t" << v.location << "\t" << num(v.deviation) << "\n";
    emit_report(os.str(), o, provenance("validate", o, {o.model}), out);
    return report.ok() ? 0 : 1;
}

int cmd_table(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    std::ostringstream os;
    os << "alice,bob,eve,outcome,probability\n";
    for (const auto& [c, row] : probability_table(model))
        for (const auto& [j, p] : row)
            os << csv_field(c.alice) << ',' << csv_field(c.bob) << ',' << csv_field(c.eve) << ',' << csv_field(j)
               << ',' << num(p) << "\n";
    emit_report(os.str(), o, provenance("table", o, {o.model}), out);
    return 0;
}

int cmd_envelop(const Options& o, std::ostream& out) {
    if (o.beta.empty() || o.map.empty())
        throw ParseError("envelop needs --beta and --map output paths");
    const auto alpha = load_model(o.model);
    ExtraPovmPolicy policy;
    if (o.extra_policy == "pgm")
        policy.kind = ExtraPovmPolicy::Kind::pretty_good;
    else if (o.extra_policy != "helstrom")
        throw ParseError("unknown --extra-policy '" + o.extra_policy + "'");
    if (!o.pair.empty())
        policy.pair = parse_pair(o.pair);

    const auto env = envelop_with_leakage(alpha, o.r, policy);
    const auto prov = provenance("envelop", o, {o.model});
    save_model(env.beta, o.beta, prov);
    save_map(env.map, o.map, prov);

    std::ostringstream os;
    os << "r=" << num(o.r) << "\n";
    os << "alpha_dim=" << alpha.dim() << "\n";
    os << "beta_dim=" << env.beta.dim() << "\n";
    os << "leakage_dim=" << env.leakage.leakage_dim << "\n";
    for (const auto& e : env.leakage.extra_commands)
        os << "extra_command=" << e << "\n";
    os << "beta=" << o.beta << "\n";
    os << "map=" << o.map << "\n";
    out << os.str();
    return 0;
}

int cmd_check(const Options& o, std::ostream& out) {
    const auto alpha = load_model(o.model);
    const auto beta = load_model(o.beta);
    const auto map = load_map(o.map);
    const auto res = check_envelopment(alpha, beta, map, o.tol);
    std::ostringstream os;
    os << "holds=" << (res.holds ? "true" : "false") << "\n";
    os << "max_deviation=" << num(res.max_deviation) << "\n";
    os << "tol=" << num(o.tol) << "\n";
    os << "witness\t" << res.witness.command.alice << "\t" << res.witness.command.bob << "\t"
       << res.witness.command.eve << "\t" << res.witness.outcome << "\n";
    if (map.factored()) {
        const auto g = alice_map(map);
        const bool onto = g.size() == beta.commands().alice.size();
        if (onto) {
            const auto s_alpha = overlap_matrix(alpha);
            const auto s_beta = overlap_matrix(beta);
            for (std::size_t i = 0; i < s_beta.labels.size(); ++i)
                for (std::size_t k = i + 1; k < s_beta.labels.size(); ++k) {
                    const auto& a = s_beta.labels[i];
                    const auto& b = s_beta.labels[k];
                    os << "overlap\t" << a << "\t" << b << "\t" << num(s_beta.at(a, b)) << "\t"
                       << num(s_alpha.at(g.at(a), g.at(b))) << "\n";
                }
        }
    }
    emit_report(os.str(), o, provenance("check", o, {o.model, o.beta, o.map}), out);
    return res.holds ? 0 : 1;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    if (o.out.empty())
        throw ParseError("simulate needs --out for the run log");
    const auto model = load_model(o.model);
    Schedule schedule;
    if (!o.schedule.empty()) {
        schedule = load_schedule(o.schedule);
    } else if (o.policy == "cycle") {
        schedule = cyclic_schedule(model);
    } else if (o.policy == "random") {
        schedule = random_schedule(model, o.trials, o.seed);
    } else if (o.policy == "greedy" || o.policy == "greedy-eve" || o.policy == "uniform-eve") {
        Command base{o.alice.empty() ? model.commands().alice.front() : o.alice,
                     o.bob.empty() ? model.commands().bob.front() : o.bob, ""};
        const auto prior = Prior::uniform(model.commands().alice);
        if (o.policy == "greedy")
            schedule = greedy_discrimination_policy(model, prior, base);
        else if (o.policy == "greedy-eve")
            schedule = greedy_discrimination_policy(model, prior, base, eve_view);
        else
            schedule = uniform_eve_policy(model, base, o.seed);
    } else {
        throw ParseError("unknown --policy '" + o.policy + "'");
    }
    auto log = run_trials(model, schedule, o.trials, o.seed);
    // The output path stays out of the log so identical runs are byte-identical.
    auto recorded = o;
    recorded.out.clear();
    log.comments.push_back("provenance " + provenance("simulate", recorded, {o.model, o.schedule}).dump());
    save_log(log, o.out);
    out << "trials=" << log.records.size() << "\n";
    out << "model_id=" << log.model_id << "\n";
    out << "seed=" << log.seed << "\n";
    out << "rng=" << log.rng << "\n";
    out << "log=" << o.out << "\n";
    return 0;
}

int cmd_model(const Options& o, std::ostream& out) {
    const auto protocol = parse_protocol(o);
    const auto attack = parse_attack(o);
    const auto model = protocol_model(protocol, attack);
    save_model(model, o.out, provenance("model", o, {}));
    out << "protocol=" << protocol.name() << "\n";
    out << "attack=" << attack.name() << "\n";
    out << "dim=" << model.dim() << "\n";
    out << "model_id=" << model_id(model) << "\n";
    out << "model=" << o.out << "\n";
    return 0;
}

int cmd_qber(const Options& o, std::ostream& out) {
    const auto protocol = parse_protocol(o);
    const auto attack = parse_attack(o);
    const auto model = protocol_model(protocol, attack);
    const double exact = exact_qber(model, protocol, attack);
    const auto log = run_trials(model, protocol_schedule(model, attack, o.trials, o.seed), o.trials, o.seed);
    const auto est = sift_and_estimate_qber(log, protocol, o.sample_fraction);

    std::ostringstream os;
    os << "protocol=" << protocol.name() << "\n";
    if (protocol.kind == ProtocolKind::b92)
        os << "theta=" << num(protocol.theta) << "\n";
    os << "attack=" << attack.name() << "\n";
    if (attack.kind == AttackKind::intercept_resend)
        os << "fraction=" << num(attack.fraction) << "\n";
    if (attack.kind == AttackKind::leakage_readout)
        os << "r=" << num(attack.r) << "\n";
    os << "trials=" << o.trials << "\n";
    os << "seed=" << o.seed << "\n";
    os << "exact_qber=" << num(exact) << "\n";
    os << "estimated_qber=" << num(est.qber) << "\n";
    os << "halfwidth_3sigma=" << num(est.confidence_halfwidth) << "\n";
    os << "n_sifted=" << est.n_sifted << "\n";
    os << "n_compared=" << est.n_compared << "\n";
    os << "within_3sigma=" << (est.covers(exact) ? "true" : "false") << "\n";
    if (attack.kind == AttackKind::leakage_readout) {
        const auto alpha = protocol_model(protocol, AttackSpec::none());
        const auto& alice = alpha.commands().alice;
        const double err_alpha =
            helstrom_binary(alpha.state(alice[0]).dense(), alpha.state(alice[1]).dense()).error_probability;
        const double err_beta =
            helstrom_binary(model.state(alice[0]).dense(), model.state(alice[1]).dense()).error_probability;
        os << "eve_pair=" << alice[0] << "," << alice[1] << "\n";
        os << "eve_error_alpha=" << num(err_alpha) << "\n";
        os << "eve_error_beta=" << num(err_beta) << "\n";
    }
    out << os.str();
    if (!o.out.empty()) {
        std::ostringstream csv;
        csv << "# provenance: " << provenance("qber", o, {}).dump() << "\n";
        csv << "alice,bob,eve,outcome,count\n";
        for (const auto& [c, row] : empirical_frequencies(log))
            for (const auto& [j, n] : row.counts)
                csv << csv_field(c.alice) << ',' << csv_field(c.bob) << ',' << csv_field(c.eve) << ','
                    << csv_field(j) << ',' << n << "\n";
        write_text_file(o.out, csv.str());
    }
    return 0;
}

int cmd_discriminate(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    const auto& alice = model.commands().alice;
    auto pair = o.pair.empty() ? std::make_pair(alice.at(0), alice.at(1 % alice.size())) : parse_pair(o.pair);
    const auto [p0, p1] = parse_priors(o.priors);
    const auto s0 = model.state(pair.first).dense();
    const auto s1 = model.state(pair.second).dense();
    const auto res = helstrom_binary(s0, s1, p0, p1);
    const double overlap = std::abs(s0.dot(s1));

    std::ostringstream os;
    os << "pair=" << pair.first << "," << pair.second << "\n";
    os << "priors=" << num(p0) << "," << num(p1) << "\n";
    os << "overlap=" << num(overlap) << "\n";
    os << "error_probability=" << num(res.error_probability) << "\n";
    os << "closed_form_error=" << num(helstrom_error(overlap, p0, p1)) << "\n";
    for (const auto& [label, idx] : res.decision_rule) {
        os << "povm\t" << label << "\t" << (idx == 0 ? pair.first : pair.second) << "\t";
        json m = json::array();
        const Matrix el = res.povm.element(label).dense();
        for (Eigen::Index i = 0; i < el.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < el.cols(); ++k)
                row.push_back({el(i, k).real(), el(i, k).imag()});
            m.push_back(row);
        }
        os << m.dump() << "\n";
    }
    emit_report(os.str(), o, provenance("discriminate", o, {o.model}), out);
    return 0;
}

int cmd_fit(const Options& o, std::ostream& out) {
    const auto model = load_model(o.model);
    const auto log = load_log(o.log);
    const auto report = fit_model(model, log);
    std::ostringstream os;
    os << "max_tv=" << num(report.max_tv) << "\n";
    os << "n_min=" << report.n_min << "\n";
    os << "commands=" << report.per_command.size() << "\n";
    for (const auto& w : report.warnings)
        os << "warning=" << w << "\n";
    os << "\nalice,bob,eve,n,tv\n";
    for (const auto& [c, row] : report.per_command)
        os << csv_field(c.alice) << ',' << csv_field(c.bob) << ',' << csv_field(c.eve) << ',' << row.observed.total
           << ',' << num(row.tv) << "\n";
    emit_report(os.str(), o, provenance("fit", o, {o.model, o.log}), out);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qmenv: quantum-model envelopment workbench and QKD attack simulator", "qmenv"};
    app.require_subcommand(1);
    Options o;

    auto* validate = app.add_subcommand("validate", "Check a model file's invariants");
    validate->add_option("--model", o.model, "Model file")->required();
    validate->add_option("--out", o.out, "Also write the report here");

    auto* table = app.add_subcommand("table", "Probability table as CSV");
    table->add_option("--model", o.model, "Model file")->required();
    table->add_option("--out", o.out, "Also write the CSV here");

    auto* envelop = app.add_subcommand("envelop", "Build the leakage envelopment of a model");
    envelop->add_option("--model", o.model, "Model to envelop")->required();
    envelop->add_option("--r", o.r, "Leakage bound, 0 <= r < 1")->required();
    envelop->add_option("--beta", o.beta, "Output path for the enveloping model")->required();
    envelop->add_option("--map", o.map, "Output path for the envelopment map")->required();
    envelop->add_option("--extra-policy", o.extra_policy, "helstrom or pgm");
    envelop->add_option("--pair", o.pair, "Alice pair for the Helstrom readout, a,b");

    auto* check = app.add_subcommand("check", "Verify an envelopment");
    check->add_option("--model", o.model, "Enveloped model (alpha)")->required();
    check->add_option("--beta", o.beta, "Enveloping model")->required();
    check->add_option("--map", o.map, "Map file")->required();
    check->add_option("--tol", o.tol, "Tolerance");
    check->add_option("--out", o.out, "Also write the report here");

    auto* simulate = app.add_subcommand("simulate", "Sample a run of trials");
    simulate->add_option("--model", o.model, "Model file")->required();
    simulate->add_option("--trials", o.trials, "Number of trials")->required();
    simulate->add_option("--seed", o.seed, "Seed")->required();
    simulate->add_option("--out", o.out, "Run-log path")->required();
    simulate->add_option("--schedule", o.schedule, "File of alice<TAB>bob<TAB>eve lines, replayed cyclically");
    simulate->add_option("--policy", o.policy, "cycle, random, greedy, greedy-eve (Eve sees only her own result) or uniform-eve");
    simulate->add_option("--alice", o.alice, "Alice command held fixed by feedback policies");
    simulate->add_option("--bob", o.bob, "Bob command held fixed by feedback policies");

    auto* model = app.add_subcommand("model", "Write a protocol model file");
    model->add_option("--protocol", o.protocol, "bb84 or b92");
    model->add_option("--theta", o.theta, "B92 angle");
    model->add_option("--attack", o.attack, "none, intercept or leakage");
    model->add_option("--fraction", o.fraction, "Fraction of trials intercepted");
    model->add_option("--r", o.r, "Leakage bound");
    model->add_option("--out", o.out, "Output model file")->required();

    auto* qber = app.add_subcommand("qber", "Exact and sampled QBER for a protocol and attack");
    qber->add_option("--protocol", o.protocol, "bb84 or b92");
    qber->add_option("--theta", o.theta, "B92 angle");
    qber->add_option("--attack", o.attack, "none, intercept or leakage");
    qber->add_option("--fraction", o.fraction, "Fraction of trials intercepted");
    qber->add_option("--r", o.r, "Leakage bound");
    qber->add_option("--trials", o.trials, "Number of trials");
    qber->add_option("--seed", o.seed, "Seed");
    qber->add_option("--sample-fraction", o.sample_fraction, "Fraction of sifted bits revealed");
    qber->add_option("--out", o.out, "CSV of per-setup outcome counts");

    auto* discriminate = app.add_subcommand("discriminate", "Helstrom measurement for a pair of Alice's states");
    discriminate->add_option("--model", o.model, "Model file")->required();
    discriminate->add_option("--pair", o.pair, "Alice commands a,b");
    discriminate->add_option("--priors", o.priors, "p0,p1");
    discriminate->add_option("--out", o.out, "Also write the report here");

    auto* fit = app.add_subcommand("fit", "Compare a model with a run log");
    fit->add_option("--model", o.model, "Model file")->required();
    fit->add_option("--log", o.log, "Run log")->required();
    fit->add_option("--out", o.out, "Also write the report here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const auto& name = sub->get_name();
        if (name == "validate")
            return cmd_validate(o, out);
        if (name == "table")
            return cmd_table(o, out);
        if (name == "envelop")
            return cmd_envelop(o, out);
        if (name == "check")
            return cmd_check(o, out);
        if (name == "simulate")
            return cmd_simulate(o, out);
        if (name == "model")
            return cmd_model(o, out);
        if (name == "qber")
            return cmd_qber(o, out);
        if (name == "discriminate")
            return cmd_discriminate(o, out);
        if (name == "fit")
            return cmd_fit(o, out);
        err << app.help();
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

} // namespace qmenv
