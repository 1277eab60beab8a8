#include "scl/registry.hpp"

#include <algorithm>
#include <set>

namespace scl {

const std::vector<std::string>& known_roles() {
    static const std::vector<std::string> roles = {
        "perceptual", "planning",  "reflective", "execution", "memory",
        "affective",  "language-out", "social",  "ethical",   "creative",
        "knowledge",  "goal",      "simulation",
    };
    return roles;
}

SectorRegistry::SectorRegistry(std::vector<std::string> labels,
                               std::map<std::string, std::string> roles)
    : labels_(std::move(labels)), roles_(std::move(roles)) {
    if (labels_.empty()) {
        throw ValidationError("registry needs at least one sector");
    }
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (l.empty()) {
            throw ValidationError("sector labels must be non-empty");
        }
        if (!seen.insert(l).second) {
            throw ValidationError("duplicate sector label: " + l);
        }
    }
    const auto& known = known_roles();
    for (const auto& [label, role] : roles_) {
        if (!seen.count(label)) {
            throw ValidationError("role assigned to unknown sector: " + label);
        }
        if (std::find(known.begin(), known.end(), role) == known.end()) {
            throw ValidationError("unknown role tag: " + role);
        }
    }
}

int SectorRegistry::index_of(const std::string& label) const {
    for (size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) {
            return static_cast<int>(i);
        }
    }
    throw ValidationError("unknown sector: " + label);
}

bool SectorRegistry::contains(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::optional<std::string> SectorRegistry::role_of(const std::string& label) const {
    auto it = roles_.find(label);
    if (it == roles_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<int> SectorRegistry::sectors_with_role(const std::string& role) const {
    std::vector<int> out;
    for (size_t i = 0; i < labels_.size(); ++i) {
        auto it = roles_.find(labels_[i]);
        if (it != roles_.end() && it->second == role) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

} // namespace scl
