#include "scl/json_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scl/errors.hpp"

namespace scl {

using nlohmann::json;

namespace {

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty()) {
        throw ParseError(where + ": expected a non-empty array of row arrays");
    }
    const size_t nrows = rows.size();
    size_t ncols = 0;
    if (!rows[0].is_array()) {
        throw ParseError(where + ": rows must be arrays");
    }
    ncols = rows[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
    for (size_t i = 0; i < nrows; ++i) {
        if (!rows[i].is_array() || rows[i].size() != ncols) {
            throw DimensionMismatch(where + ": row " + std::to_string(i) +
                                    " has ragged length");
        }
        for (size_t j = 0; j < ncols; ++j) {
            if (!rows[i][j].is_number()) {
                throw ParseError(where + ": entry (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") is not a number");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j].get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json parse_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

} // namespace

json profile_to_json(const CouplingProfile& p) {
    json doc;
    doc["sectors"] = p.registry().labels();
    if (!p.registry().roles().empty()) {
        doc["roles"] = p.registry().roles();
    }
    doc["max_level"] = p.max_level();
    json levels = json::object();
    for (int k : p.levels()) {
        levels[std::to_string(k)] = matrix_to_json(p.matrix(k).entries);
    }
    doc["levels"] = std::move(levels);
    if (p.g_max() != kDefaultGmax) {
        doc["g_max"] = p.g_max();
    }
    return doc;
}

std::string serialize_profile(const CouplingProfile& p) { return profile_to_json(p).dump(2); }

CouplingProfile profile_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw ParseError("profile document must be a JSON object");
    }
    if (!doc.contains("sectors")) {
        throw ParseError("profile document is missing \"sectors\"");
    }
    if (!doc["sectors"].is_array()) {
        throw ParseError("\"sectors\" must be an array of labels");
    }
    std::vector<std::string> labels;
    for (const auto& s : doc["sectors"]) {
        if (!s.is_string()) {
            throw ParseError("\"sectors\" entries must be strings");
        }
        labels.push_back(s.get<std::string>());
    }
    std::map<std::string, std::string> roles;
    if (doc.contains("roles")) {
        if (!doc["roles"].is_object()) {
            throw ParseError("\"roles\" must be an object");
        }
        for (const auto& [k, v] : doc["roles"].items()) {
            if (!v.is_string()) {
                throw ParseError("role for \"" + k + "\" must be a string");
            }
            roles[k] = v.get<std::string>();
        }
    }
    if (!doc.contains("max_level") || !doc["max_level"].is_number_integer()) {
        throw ParseError("profile document needs an integer \"max_level\"");
    }
    const int max_level = doc["max_level"].get<int>();
    double g_max = kDefaultGmax;
    if (doc.contains("g_max")) {
        if (!doc["g_max"].is_number()) {
            throw ParseError("\"g_max\" must be a number");
        }
        g_max = doc["g_max"].get<double>();
    }
    std::map<int, Eigen::MatrixXd> matrices;
    if (doc.contains("levels")) {
        if (!doc["levels"].is_object()) {
            throw ParseError("\"levels\" must be an object keyed by level");
        }
        for (const auto& [key, rows] : doc["levels"].items()) {
            int level = 0;
            try {
                size_t used = 0;
                level = std::stoi(key, &used);
                if (used != key.size()) {
                    throw std::invalid_argument(key);
                }
            } catch (const std::exception&) {
                throw ParseError("level key \"" + key + "\" is not an integer");
            }
            matrices[level] = matrix_from_json(rows, "levels[\"" + key + "\"]");
        }
    }
    SectorRegistry registry(std::move(labels), std::move(roles));
    return build_profile(registry, matrices, max_level, g_max);
}

CouplingProfile parse_profile(const std::string& text) {
    return profile_from_json(parse_text(text, "profile"));
}

json operator_to_json(const PropagationOperator& op) {
    json doc;
    if (op.kind() == PropagationOperator::Kind::Entrywise) {
        doc["kind"] = "entrywise";
        doc["factors"] = matrix_to_json(op.factors());
    } else {
        doc["kind"] = "dense";
        doc["matrix"] = matrix_to_json(op.matrix());
    }
    return doc;
}

std::string serialize_operator(const PropagationOperator& op) {
    return operator_to_json(op).dump(2);
}

PropagationOperator operator_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw ParseError("operator document needs a \"kind\" string");
    }
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "entrywise") {
        if (!doc.contains("factors")) {
            throw ParseError("entrywise operator is missing \"factors\"");
        }
        return PropagationOperator::entrywise(matrix_from_json(doc["factors"], "factors"));
    }
    if (kind == "dense") {
        if (!doc.contains("matrix")) {
            throw ParseError("dense operator is missing \"matrix\"");
        }
        return PropagationOperator::dense(matrix_from_json(doc["matrix"], "matrix"));
    }
    throw ParseError("unknown operator kind \"" + kind + "\"");
}

PropagationOperator parse_operator(const std::string& text) {
    return operator_from_json(parse_text(text, "operator"));
}

BetaField beta_from_json(const json& doc, const SectorRegistry& registry) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
        throw ParseError("beta document needs a \"kind\" string");
    }
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "linear") {
        if (!doc.contains("operator")) {
            throw ParseError("linear beta is missing \"operator\"");
        }
        return BetaField::linear(operator_from_json(doc["operator"]));
    }
    if (kind == "tabulated") {
        if (!doc.contains("polys") || !doc["polys"].is_object()) {
            throw ParseError("tabulated beta needs a \"polys\" object");
        }
        const int n = registry.size();
        std::vector<std::vector<std::vector<double>>> polys(
            static_cast<size_t>(n), std::vector<std::vector<double>>(static_cast<size_t>(n)));
        for (const auto& [key, coeffs] : doc["polys"].items()) {
            const auto arrow = key.find("->");
            if (arrow == std::string::npos) {
                throw ParseError("poly key \"" + key + "\" must look like \"src->tgt\"");
            }
            const int i = registry.index_of(key.substr(0, arrow));
            const int j = registry.index_of(key.substr(arrow + 2));
            if (!coeffs.is_array()) {
                throw ParseError("coefficients for \"" + key + "\" must be an array");
            }
            std::vector<double> c;
            for (const auto& v : coeffs) {
                if (!v.is_number()) {
                    throw ParseError("coefficients for \"" + key + "\" must be numbers");
                }
                c.push_back(v.get<double>());
            }
            polys[static_cast<size_t>(i)][static_cast<size_t>(j)] = std::move(c);
        }
        return BetaField::tabulated(std::move(polys));
    }
    throw ParseError("unknown beta kind \"" + kind + "\"");
}

BetaField parse_beta(const std::string& text, const SectorRegistry& registry) {
    return beta_from_json(parse_text(text, "beta"), registry);
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw IoError("write to " + path + " failed");
    }
}

} // namespace scl
