#include "qmenv/io.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "qmenv/errors.hpp"

namespace qmenv {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i)
        os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

namespace {

json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("complex scalar must be a [re, im] pair, got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>()};
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(complex_to_json(v(i)));
    return out;
}

Vector vector_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ParseError("vector must be a non-empty array of [re, im] pairs");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ParseError("matrix must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw ParseError("matrix must be square; row " + std::to_string(i) + " has wrong length");
        for (Eigen::Index k = 0; k < n; ++k)
            m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
    }
    return m;
}

json state_to_json(const ProductState& s) {
    json out = json::array();
    for (const auto& f : s.factors())
        out.push_back(vector_to_json(f));
    return out;
}

ProductState state_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ParseError("state must be a non-empty list of factors");
    std::vector<Vector> factors;
    for (const auto& f : j)
        factors.push_back(vector_from_json(f));
    return ProductState(std::move(factors));
}

json operator_to_json(const ProductOperator& op) {
    json out = json::array();
    for (const auto& f : op.factors()) {
        if (f.is_identity())
            out.push_back(json{{"identity", f.dim}});
        else
            out.push_back(matrix_to_json(*f.matrix));
    }
    return out;
}

ProductOperator operator_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ParseError("operator must be a non-empty list of factors");
    std::vector<OperatorFactor> factors;
    for (const auto& f : j) {
        if (f.is_object()) {
            if (!f.contains("identity") || !f["identity"].is_number_integer() || f["identity"].get<long>() < 1)
                throw ParseError("identity factor must be {\"identity\": dim} with dim >= 1");
            factors.push_back(OperatorFactor::identity(f["identity"].get<Eigen::Index>()));
        } else {
            factors.push_back(OperatorFactor::explicit_matrix(matrix_from_json(f)));
        }
    }
    return ProductOperator(std::move(factors));
}

json command_to_json(const Command& c) { return json::array({c.alice, c.bob, c.eve}); }

Command command_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_string() || !j[1].is_string() || !j[2].is_string())
        throw ParseError("command must be [alice, bob, eve] strings, got " + j.dump());
    return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
}

std::vector<std::string> labels_from_json(const json& j, const char* what) {
    if (!j.is_array())
        throw ParseError(std::string(what) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& x : j) {
        if (!x.is_string())
            throw ParseError(std::string(what) + " must be an array of strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

const json& field(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key))
        throw ParseError(std::string("missing field '") + key + "'");
    return doc[key];
}

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const ParseError&) {
        throw;
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
}

} // namespace

json model_to_json(const QMModel& model) {
    const auto& p = model.parts();
    json doc;
    doc["format"] = kModelFormat;
    doc["dim"] = model.dim();
    doc["protocol"] = p.protocol;
    doc["commands"] = {{"alice", p.commands.alice},
                       {"bob", p.commands.bob},
                       {"eve", p.commands.eve},
                       {"eve_only", std::vector<std::string>(p.eve_only.begin(), p.eve_only.end())}};
    json states = json::object();
    for (const auto& [label, s] : p.states)
        states[label] = state_to_json(s);
    doc["states"] = std::move(states);

    json unitaries = json::array();
    for (const auto& [c, u] : p.unitaries)
        unitaries.push_back({{"command", command_to_json(c)}, {"operator", operator_to_json(u)}});
    doc["unitaries"] = std::move(unitaries);

    json povms = json::array();
    for (const auto& [key, povm] : p.povms) {
        json elements = json::object();
        for (const auto& [label, m] : povm.elements())
            elements[label] = operator_to_json(m);
        povms.push_back({{"bob", key.first}, {"eve", key.second}, {"elements", std::move(elements)}});
    }
    doc["povms"] = std::move(povms);
    return doc;
}

QMModel model_from_json(const json& doc) {
    return guarded([&] {
        if (field(doc, "format") != kModelFormat)
            throw ParseError("unsupported model format " + field(doc, "format").dump());
        ModelParts parts;
        const auto& cmds = field(doc, "commands");
        parts.commands.alice = labels_from_json(field(cmds, "alice"), "commands.alice");
        parts.commands.bob = labels_from_json(field(cmds, "bob"), "commands.bob");
        parts.commands.eve = labels_from_json(field(cmds, "eve"), "commands.eve");
        if (cmds.contains("eve_only"))
            for (auto& e : labels_from_json(cmds["eve_only"], "commands.eve_only"))
                parts.eve_only.insert(std::move(e));
        if (doc.contains("protocol"))
            parts.protocol = doc["protocol"].get<std::string>();

        const auto& states = field(doc, "states");
        if (!states.is_object())
            throw ParseError("states must be an object keyed by alice command");
        for (const auto& [label, s] : states.items())
            parts.states.emplace(label, state_from_json(s));

        if (doc.contains("unitaries"))
            for (const auto& u : doc["unitaries"]) {
                auto c = command_from_json(field(u, "command"));
                if (!parts.unitaries.emplace(c, operator_from_json(field(u, "operator"))).second)
                    throw ParseError("duplicate unitary for " + to_string(c));
            }

        for (const auto& p : field(doc, "povms")) {
            MeasurementKey key{field(p, "bob").get<std::string>(), field(p, "eve").get<std::string>()};
            std::map<std::string, ProductOperator> elements;
            for (const auto& [label, m] : field(p, "elements").items())
                elements.emplace(label, operator_from_json(m));
            if (!parts.povms.emplace(key, Povm(std::move(elements))).second)
                throw ParseError("duplicate POVM for (" + key.first + ", " + key.second + ")");
        }

        QMModel model(std::move(parts));
        if (doc.contains("dim") && doc["dim"].get<Eigen::Index>() != model.dim())
            throw ParseError("header dim " + doc["dim"].dump() + " disagrees with state dimension " +
                             std::to_string(model.dim()));
        return model;
    });
}

std::string canonical_model_text(const QMModel& model) { return model_to_json(model).dump(); }

std::string model_id(const QMModel& model) { return sha256_hex(canonical_model_text(model)); }

json map_to_json(const EnvelopmentMap& map) {
    json doc;
    doc["format"] = kMapFormat;
    json pairs = json::array();
    for (const auto& [from, to] : map.mapping())
        pairs.push_back({{"beta", {{"command", command_to_json(from.command)}, {"outcome", from.outcome}}},
                         {"alpha", {{"command", command_to_json(to.command)}, {"outcome", to.outcome}}}});
    doc["pairs"] = std::move(pairs);
    if (map.factored()) {
        json g = json::array();
        for (const auto& [b, a] : map.factored()->g)
            g.push_back(json::array({command_to_json(b), command_to_json(a)}));
        json h = json::array();
        for (const auto& [jb, ja] : map.factored()->h)
            h.push_back(json::array({jb, ja}));
        doc["factored"] = {{"g", std::move(g)}, {"h", std::move(h)}};
    } else {
        doc["factored"] = nullptr;
    }
    return doc;
}

EnvelopmentMap map_from_json(const json& doc) {
    return guarded([&] {
        if (field(doc, "format") != kMapFormat)
            throw ParseError("unsupported map format " + field(doc, "format").dump());
        std::map<Observation, Observation> mapping;
        for (const auto& p : field(doc, "pairs")) {
            const auto& b = field(p, "beta");
            const auto& a = field(p, "alpha");
            Observation from{command_from_json(field(b, "command")), field(b, "outcome").get<std::string>()};
            Observation to{command_from_json(field(a, "command")), field(a, "outcome").get<std::string>()};
            if (!mapping.emplace(from, to).second)
                throw ParseError("duplicate map entry for " + to_string(from));
        }
        std::optional<FactoredMap> factored;
        if (doc.contains("factored") && !doc["factored"].is_null()) {
            FactoredMap fm;
            for (const auto& e : field(doc["factored"], "g"))
                fm.g.emplace(command_from_json(e.at(0)), command_from_json(e.at(1)));
            for (const auto& e : field(doc["factored"], "h"))
                fm.h.emplace(e.at(0).get<std::string>(), e.at(1).get<std::string>());
            factored = std::move(fm);
        }
        return EnvelopmentMap(std::move(mapping), std::move(factored));
    });
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

void save_model(const QMModel& model, const std::filesystem::path& path, const json& provenance) {
    json doc = model_to_json(model);
    if (!provenance.is_null())
        doc["provenance"] = provenance;
    write_text_file(path, doc.dump(1) + "\n");
}

QMModel load_model(const std::filesystem::path& path) {
    return model_from_json(parse_json(read_text_file(path), path.string()));
}

void save_map(const EnvelopmentMap& map, const std::filesystem::path& path, const json& provenance) {
    json doc = map_to_json(map);
    if (!provenance.is_null())
        doc["provenance"] = provenance;
    write_text_file(path, doc.dump(1) + "\n");
}

EnvelopmentMap load_map(const std::filesystem::path& path) {
    return map_from_json(parse_json(read_text_file(path), path.string()));
}

} // namespace qmenv
