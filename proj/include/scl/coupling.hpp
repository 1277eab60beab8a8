#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "scl/registry.hpp"

namespace scl {

inline constexpr double kDefaultGmax = 10.0;

/// Sign class of a single coupling entry.
enum class Nature { Excitatory, Inhibitory, Null };

Nature nature_of(double g);

/// Sign class plus the (inert) modulatory annotation.
struct NatureTag {
    Nature kind = Nature::Null;
    bool modulatory = false;
};

/// Dense n-by-n couplings at one abstraction level.
/// entries(i, j) is the influence of source sector i on target sector j.
struct CouplingMatrix {
    int level = 0;
    Eigen::MatrixXd entries;

    int sector_count() const { return static_cast<int>(entries.rows()); }
};

/// The full set of per-level coupling matrices over a shared registry.
///
/// Levels without a stored matrix are read as all-zero; the hierarchy is
/// bounded at max_level, so no matrix may live above it. Immutable after
/// construction.
class CouplingProfile {
  public:
    CouplingProfile() = default;

    const SectorRegistry& registry() const { return registry_; }
    int max_level() const { return max_level_; }
    double g_max() const { return g_max_; }
    int sector_count() const { return registry_.size(); }

    bool has_level(int level) const { return matrices_.count(level) > 0; }
    /// Stored levels in ascending order.
    std::vector<int> levels() const;

    /// Matrix at `level`; absent levels come back as zero matrices.
    /// Throws LevelOutOfRange above max_level or below zero.
    CouplingMatrix matrix(int level) const;

    double entry(const std::string& source, const std::string& target, int level) const;

    bool operator==(const CouplingProfile& other) const = default;

    friend CouplingProfile build_profile(const SectorRegistry& registry,
                                         const std::map<int, Eigen::MatrixXd>& matrices,
                                         int max_level, double g_max);

  private:
    SectorRegistry registry_;
    std::map<int, Eigen::MatrixXd> matrices_;
    int max_level_ = 0;
    double g_max_ = kDefaultGmax;
};

/// Validate and assemble a profile.
/// Throws DimensionMismatch, NonFiniteEntry or LevelOutOfRange.
CouplingProfile build_profile(const SectorRegistry& registry,
                              const std::map<int, Eigen::MatrixXd>& matrices,
                              int max_level, double g_max = kDefaultGmax);

/// Entrywise L2 distance between two equally shaped matrices.
double frobenius_distance(const CouplingMatrix& a, const CouplingMatrix& b);

/// Profile distance: entrywise L2 across the union of stored levels,
/// absent levels counting as zero. Registries must match.
double frobenius_distance(const CouplingProfile& a, const CouplingProfile& b);

/// Row-major (source-major) flattening of a coupling matrix.
Eigen::VectorXd vectorize(const CouplingMatrix& m);

/// Inverse of vectorize; the vector length must be n^2.
CouplingMatrix devectorize(const Eigen::VectorXd& v, int sector_count, int level);
CouplingMatrix devectorize(const Eigen::VectorXd& v, const SectorRegistry& registry, int level);

} // namespace scl
