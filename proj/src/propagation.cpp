#include "scl/propagation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "scl/errors.hpp"

namespace scl {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw NonFiniteEntry(std::string(what) + " contains non-finite values");
    }
}

} // namespace

PropagationOperator PropagationOperator::entrywise(Eigen::MatrixXd factors) {
    if (factors.rows() != factors.cols()) {
        throw ShapeMismatch("entrywise factor table must be square");
    }
    require_finite(factors, "factor table");
    return PropagationOperator(Kind::Entrywise, std::move(factors));
}

PropagationOperator PropagationOperator::dense(Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols()) {
        throw ShapeMismatch("dense propagation matrix must be square");
    }
    require_finite(matrix, "propagation matrix");
    return PropagationOperator(Kind::Dense, std::move(matrix));
}

PropagationOperator PropagationOperator::dense_from_entrywise(const PropagationOperator& op) {
    if (op.kind() != Kind::Entrywise) {
        throw ValidationError("operator is not entrywise");
    }
    const int n = static_cast<int>(op.factors().rows());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            d(i * n + j, i * n + j) = op.factors()(i, j);
        }
    }
    return dense(std::move(d));
}

PropagationOperator PropagationOperator::identity(int sector_count) {
    return entrywise(Eigen::MatrixXd::Ones(sector_count, sector_count));
}

int PropagationOperator::vec_dim() const {
    const int r = static_cast<int>(payload_.rows());
    return kind_ == Kind::Entrywise ? r * r : r;
}

CouplingMatrix apply_propagation(const PropagationOperator& op, const CouplingMatrix& g) {
    const int n = g.sector_count();
    if (g.entries.rows() != g.entries.cols()) {
        throw ShapeMismatch("coupling matrix must be square");
    }
    if (op.vec_dim() != n * n) {
        throw ShapeMismatch("operator acts on dimension " + std::to_string(op.vec_dim()) +
                            ", profile vectorizes to " + std::to_string(n * n));
    }
    if (op.kind() == PropagationOperator::Kind::Entrywise) {
        return CouplingMatrix{g.level + 1, op.factors().cwiseProduct(g.entries)};
    }
    Eigen::VectorXd v = op.matrix() * vectorize(g);
    CouplingMatrix out = devectorize(v, n, g.level + 1);
    return out;
}

CouplingMatrix compose_and_apply(std::span<const PropagationOperator> ops,
                                 const CouplingMatrix& g) {
    CouplingMatrix cur = g;
    for (const auto& op : ops) {
        cur = apply_propagation(op, cur);
    }
    return cur;
}

namespace {

ModeClass classify_modulus(double modulus, double tol) {
    if (modulus > 1.0 + tol) {
        return ModeClass::Amplified;
    }
    if (modulus < 1.0 - tol) {
        return ModeClass::Damped;
    }
    return ModeClass::Fixed;
}

} // namespace

std::vector<ModeClassification> eigenmodes(const PropagationOperator& op, double tol) {
    if (!(tol > 0.0)) {
        throw ValidationError("mode tolerance must be positive");
    }
    std::vector<ModeClassification> modes;
    if (op.kind() == PropagationOperator::Kind::Entrywise) {
        const int n = static_cast<int>(op.factors().rows());
        modes.reserve(static_cast<size_t>(n) * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                ModeClassification m;
                m.eigenvalue = {op.factors()(i, j), 0.0};
                m.eigenvector = Eigen::VectorXcd::Zero(n * n);
                m.eigenvector(i * n + j) = 1.0;
                m.cls = classify_modulus(std::abs(op.factors()(i, j)), tol);
                modes.push_back(std::move(m));
            }
        }
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(op.matrix());
        if (solver.info() != Eigen::Success) {
            throw NumericalFailure("eigen decomposition did not converge");
        }
        const auto& values = solver.eigenvalues();
        const auto& vectors = solver.eigenvectors();
        for (Eigen::Index c = 0; c < values.size(); ++c) {
            ModeClassification m;
            m.eigenvalue = values(c);
            m.eigenvector = vectors.col(c).normalized();
            const double modulus = std::abs(values(c));
            m.cls = classify_modulus(modulus, tol);
            m.oscillatory = std::abs(values(c).imag()) > 1e-14 * std::max(1.0, modulus);
            modes.push_back(std::move(m));
        }
    }
    std::stable_sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
        const double ma = std::abs(a.eigenvalue);
        const double mb = std::abs(b.eigenvalue);
        if (ma != mb) {
            return ma > mb;
        }
        if (a.eigenvalue.real() != b.eigenvalue.real()) {
            return a.eigenvalue.real() > b.eigenvalue.real();
        }
        return a.eigenvalue.imag() > b.eigenvalue.imag();
    });
    return modes;
}

ConvergenceReport check_convergence(const PropagationOperator& op, const CouplingMatrix& g0,
                                    int max_levels, double eps, double g_max) {
    if (max_levels < 1) {
        throw ValidationError("max_levels must be at least 1");
    }
    if (!(eps > 0.0)) {
        throw ValidationError("eps must be positive");
    }
    ConvergenceReport report;
    CouplingMatrix cur = g0;
    for (int level = 0; level <= max_levels; ++level) {
        const double m = cur.entries.cwiseAbs().maxCoeff();
        report.max_abs_trace.push_back(m);
        report.level = level;
        if (m <= eps) {
            report.verdict = ConvergenceVerdict::ConvergesToZero;
            report.note = "max|entry| fell below eps at level " + std::to_string(level);
            return report;
        }
        if (m > g_max) {
            report.verdict = ConvergenceVerdict::Diverges;
            report.note = "max|entry| exceeded the coupling bound at level " +
                          std::to_string(level);
            return report;
        }
        if (level < max_levels) {
            cur = apply_propagation(op, cur);
        }
    }

    report.verdict = ConvergenceVerdict::Stalls;
    report.limit = cur;

    // Evidence: unit-modulus modes with nonzero weight in the start profile.
    const auto modes = eigenmodes(op, 1e-9);
    const Eigen::VectorXd v0 = vectorize(g0);
    if (op.kind() == PropagationOperator::Kind::Entrywise) {
        for (const auto& m : modes) {
            if (m.cls != ModeClass::Fixed) {
                continue;
            }
            for (Eigen::Index i = 0; i < m.eigenvector.size(); ++i) {
                if (std::abs(m.eigenvector(i)) > 0.5 && std::abs(v0(i)) > eps) {
                    report.unit_modes_excited++;
                    break;
                }
            }
        }
    } else {
        Eigen::MatrixXcd basis(v0.size(), v0.size());
        for (size_t c = 0; c < modes.size(); ++c) {
            basis.col(static_cast<Eigen::Index>(c)) = modes[c].eigenvector;
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(basis);
        if (lu.isInvertible()) {
            const Eigen::VectorXcd coeffs = lu.solve(v0.cast<std::complex<double>>());
            for (size_t c = 0; c < modes.size(); ++c) {
                if (modes[c].cls == ModeClass::Fixed &&
                    std::abs(coeffs(static_cast<Eigen::Index>(c))) > eps) {
                    report.unit_modes_excited++;
                }
            }
        } else {
            // Defective eigenbasis; report unit modes without overlap evidence.
            for (const auto& m : modes) {
                if (m.cls == ModeClass::Fixed) {
                    report.unit_modes_excited++;
                }
            }
        }
    }
    if (report.unit_modes_excited > 0) {
        report.note = "bounded above eps with " + std::to_string(report.unit_modes_excited) +
                      " unit-modulus mode(s) excited; violates Coupling Convergence "
                      "Hypothesis unless hierarchy bounded at N";
    } else {
        report.note = "bounded above eps after " + std::to_string(max_levels) + " levels";
    }
    return report;
}

std::string to_string(ModeClass c) {
    switch (c) {
    case ModeClass::Amplified:
        return "amplified";
    case ModeClass::Damped:
        return "damped";
    case ModeClass::Fixed:
        return "fixed";
    }
    return "?";
}

std::string to_string(ConvergenceVerdict v) {
    switch (v) {
    case ConvergenceVerdict::ConvergesToZero:
        return "converges_to_zero";
    case ConvergenceVerdict::Stalls:
        return "stalls";
    case ConvergenceVerdict::Diverges:
        return "diverges";
    }
    return "?";
}

} // namespace scl
