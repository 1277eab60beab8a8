#include "scl/event_log.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "scl/errors.hpp"

namespace scl {

using nlohmann::json;

EventLog parse_event_log(std::istream& in) {
    EventLog log;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (doc.contains("kind") && doc["kind"] == "snapshot") {
            continue;
        }
        InteractionEvent e;
        if (!doc.contains("t") || !doc["t"].is_number()) {
            throw ParseError("line " + std::to_string(lineno) + ": missing numeric \"t\"");
        }
        if (!doc.contains("sector") || !doc["sector"].is_string()) {
            throw ParseError("line " + std::to_string(lineno) + ": missing \"sector\"");
        }
        if (!doc.contains("level") || !doc["level"].is_number_integer()) {
            throw ParseError("line " + std::to_string(lineno) + ": missing integer \"level\"");
        }
        e.t = doc["t"].get<double>();
        e.sector = doc["sector"].get<std::string>();
        e.level = doc["level"].get<int>();
        e.kind = doc.value("kind", std::string("event"));
        if (doc.contains("magnitude")) {
            if (!doc["magnitude"].is_number()) {
                throw ParseError("line " + std::to_string(lineno) +
                                 ": \"magnitude\" is not a number");
            }
            e.magnitude = doc["magnitude"].get<double>();
        }
        if (doc.contains("attrs")) {
            if (!doc["attrs"].is_object()) {
                throw ParseError("line " + std::to_string(lineno) +
                                 ": \"attrs\" must be an object");
            }
            for (const auto& [k, v] : doc["attrs"].items()) {
                if (v.is_number()) {
                    e.attrs[k] = v.get<double>();
                }
            }
        }
        log.push_back(std::move(e));
    }
    std::stable_sort(log.begin(), log.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    return log;
}

EventLog load_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return parse_event_log(in);
}

void write_event_line(std::ostream& out, const InteractionEvent& e) {
    json doc;
    doc["t"] = e.t;
    doc["sector"] = e.sector;
    doc["level"] = e.level;
    doc["kind"] = e.kind;
    doc["magnitude"] = e.magnitude;
    doc["attrs"] = e.attrs.empty() ? json::object() : json(e.attrs);
    out << doc.dump() << '\n';
}

} // namespace scl
