#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scl/errors.hpp"

namespace scl {

/// Role tags a sector may carry. Rules in the analysis module resolve
/// sectors through these tags rather than through label strings.
const std::vector<std::string>& known_roles();

/// Ordered set of sector labels plus optional role annotations.
///
/// The label order fixes the row/column order of every coupling matrix
/// built against this registry.
class SectorRegistry {
  public:
    SectorRegistry() = default;
    explicit SectorRegistry(std::vector<std::string> labels,
                            std::map<std::string, std::string> roles = {});

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int i) const { return labels_.at(static_cast<size_t>(i)); }

    /// Index of a label; throws ValidationError when unknown.
    int index_of(const std::string& label) const;
    bool contains(const std::string& label) const;

    std::optional<std::string> role_of(const std::string& label) const;
    const std::map<std::string, std::string>& roles() const { return roles_; }

    /// All sector indices carrying the given role tag, in label order.
    std::vector<int> sectors_with_role(const std::string& role) const;

    bool operator==(const SectorRegistry& other) const = default;

  private:
    std::vector<std::string> labels_;
    std::map<std::string, std::string> roles_;
};

} // namespace scl
