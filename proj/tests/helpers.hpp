#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "scl/coupling.hpp"

namespace scl::testing {

/// Independent cycle oracle: enumerate every permutation of every node
/// subset whose first element is the subset minimum and keep closed
/// chains. Exponential, fine for the tiny graphs it is used on.
inline std::set<std::vector<int>> brute_force_cycles(const std::vector<std::vector<bool>>& adj) {
    const int v = static_cast<int>(adj.size());
    std::set<std::vector<int>> cycles;
    for (int mask = 1; mask < (1 << v); ++mask) {
        std::vector<int> nodes;
        for (int i = 0; i < v; ++i) {
            if (mask & (1 << i)) {
                nodes.push_back(i);
            }
        }
        std::sort(nodes.begin(), nodes.end());
        do {
            bool ok = true;
            for (size_t s = 0; s < nodes.size() && ok; ++s) {
                ok = adj[static_cast<size_t>(nodes[s])]
                        [static_cast<size_t>(nodes[(s + 1) % nodes.size()])];
            }
            if (ok) {
                cycles.insert(nodes);
            }
        } while (std::next_permutation(nodes.begin() + 1, nodes.end()));
    }
    return cycles;
}

inline SectorRegistry small_registry(int n) {
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) {
        labels.push_back("s" + std::to_string(i));
    }
    return SectorRegistry(labels);
}

inline Eigen::MatrixXd random_matrix(int n, std::mt19937_64& rng, double lo = -1.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

inline CouplingProfile random_profile(const SectorRegistry& reg, int levels,
                                      std::mt19937_64& rng) {
    std::map<int, Eigen::MatrixXd> ms;
    for (int k = 0; k < levels; ++k) {
        ms[k] = random_matrix(reg.size(), rng);
    }
    return build_profile(reg, ms, levels - 1);
}

} // namespace scl::testing
