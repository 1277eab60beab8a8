#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace scl {

/// One timestamped record from an agent run. Threshold crossings carry
/// kind "event"; extra numeric features ride in attrs.
struct InteractionEvent {
    double t = 0.0;
    std::string sector;
    int level = 0;
    std::string kind = "event";
    double magnitude = 0.0;
    std::map<std::string, double> attrs;

    bool operator==(const InteractionEvent&) const = default;
};

using EventLog = std::vector<InteractionEvent>;

/// Read a JSONL stream, keeping event records and skipping snapshot
/// lines. The result is sorted by time. Throws ParseError on bad lines.
EventLog parse_event_log(std::istream& in);
EventLog load_event_log(const std::string& path);

void write_event_line(std::ostream& out, const InteractionEvent& e);

} // namespace scl
