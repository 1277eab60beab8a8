#include "scl/coupling.hpp"

#include <cmath>
#include <set>

#include "scl/errors.hpp"

namespace scl {

Nature nature_of(double g) {
    if (g > 0.0) {
        return Nature::Excitatory;
    }
    if (g < 0.0) {
        return Nature::Inhibitory;
    }
    return Nature::Null;
}

std::vector<int> CouplingProfile::levels() const {
    std::vector<int> out;
    out.reserve(matrices_.size());
    for (const auto& [level, m] : matrices_) {
        out.push_back(level);
    }
    return out;
}

CouplingMatrix CouplingProfile::matrix(int level) const {
    if (level < 0 || level > max_level_) {
        throw LevelOutOfRange("level " + std::to_string(level) + " outside [0, " +
                              std::to_string(max_level_) + "]");
    }
    auto it = matrices_.find(level);
    if (it == matrices_.end()) {
        return CouplingMatrix{level, Eigen::MatrixXd::Zero(registry_.size(), registry_.size())};
    }
    return CouplingMatrix{level, it->second};
}

double CouplingProfile::entry(const std::string& source, const std::string& target,
                              int level) const {
    const int i = registry_.index_of(source);
    const int j = registry_.index_of(target);
    return matrix(level).entries(i, j);
}

CouplingProfile build_profile(const SectorRegistry& registry,
                              const std::map<int, Eigen::MatrixXd>& matrices,
                              int max_level, double g_max) {
    if (max_level < 0) {
        throw LevelOutOfRange("max_level must be non-negative");
    }
    if (!(g_max > 0.0) || !std::isfinite(g_max)) {
        throw ValidationError("g_max must be positive and finite");
    }
    const int n = registry.size();
    for (const auto& [level, m] : matrices) {
        if (level < 0 || level > max_level) {
            throw LevelOutOfRange("matrix level " + std::to_string(level) +
                                  " outside [0, " + std::to_string(max_level) + "]");
        }
        if (m.rows() != n || m.cols() != n) {
            throw DimensionMismatch("matrix at level " + std::to_string(level) + " is " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    ", registry has " + std::to_string(n) + " sectors");
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double g = m(i, j);
                if (!std::isfinite(g)) {
                    throw NonFiniteEntry("non-finite coupling at level " +
                                         std::to_string(level) + ", " + registry.label(i) +
                                         "->" + registry.label(j));
                }
                if (std::abs(g) > g_max) {
                    throw ValidationError("coupling " + registry.label(i) + "->" +
                                          registry.label(j) + " at level " +
                                          std::to_string(level) + " exceeds bound " +
                                          std::to_string(g_max));
                }
            }
        }
    }
    CouplingProfile p;
    p.registry_ = registry;
    p.matrices_ = matrices;
    p.max_level_ = max_level;
    p.g_max_ = g_max;
    return p;
}

double frobenius_distance(const CouplingMatrix& a, const CouplingMatrix& b) {
    if (a.entries.rows() != b.entries.rows() || a.entries.cols() != b.entries.cols()) {
        throw ShapeMismatch("matrices differ in shape");
    }
    return (a.entries - b.entries).norm();
}

double frobenius_distance(const CouplingProfile& a, const CouplingProfile& b) {
    if (a.registry() != b.registry()) {
        throw ShapeMismatch("profiles use different registries");
    }
    std::set<int> levels;
    for (int k : a.levels()) {
        levels.insert(k);
    }
    for (int k : b.levels()) {
        levels.insert(k);
    }
    const int n = a.sector_count();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, n);
    double sq = 0.0;
    for (int k : levels) {
        const Eigen::MatrixXd ma = a.has_level(k) ? a.matrix(k).entries : zero;
        const Eigen::MatrixXd mb = b.has_level(k) ? b.matrix(k).entries : zero;
        sq += (ma - mb).squaredNorm();
    }
    return std::sqrt(sq);
}

Eigen::VectorXd vectorize(const CouplingMatrix& m) {
    const int n = m.sector_count();
    Eigen::VectorXd v(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            v(i * n + j) = m.entries(i, j);
        }
    }
    return v;
}

CouplingMatrix devectorize(const Eigen::VectorXd& v, int sector_count, int level) {
    if (v.size() != static_cast<Eigen::Index>(sector_count) * sector_count) {
        throw LengthMismatch("vector of length " + std::to_string(v.size()) +
                             " does not fit a " + std::to_string(sector_count) + "x" +
                             std::to_string(sector_count) + " matrix");
    }
    Eigen::MatrixXd m(sector_count, sector_count);
    for (int i = 0; i < sector_count; ++i) {
        for (int j = 0; j < sector_count; ++j) {
            m(i, j) = v(i * sector_count + j);
        }
    }
    return CouplingMatrix{level, std::move(m)};
}

CouplingMatrix devectorize(const Eigen::VectorXd& v, const SectorRegistry& registry, int level) {
    return devectorize(v, registry.size(), level);
}

} // namespace scl
