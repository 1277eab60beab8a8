#include "scl/beta.hpp"

#include <cmath>
#include <limits>

#include "scl/errors.hpp"

namespace scl {

BetaField::BetaField(PropagationOperator op)
    : kind_(Kind::Linear), op_(std::move(op)) {}

BetaField::BetaField(std::vector<std::vector<std::vector<double>>> polys)
    : kind_(Kind::Tabulated), op_(PropagationOperator::identity(1)), polys_(std::move(polys)) {
    const size_t n = polys_.size();
    for (const auto& row : polys_) {
        if (row.size() != n) {
            throw ShapeMismatch("polynomial table must be square");
        }
        for (const auto& coeffs : row) {
            for (double c : coeffs) {
                if (!std::isfinite(c)) {
                    throw NonFiniteEntry("polynomial coefficient is not finite");
                }
            }
        }
    }
}

BetaField BetaField::linear(PropagationOperator op) { return BetaField(std::move(op)); }

BetaField BetaField::tabulated(std::vector<std::vector<std::vector<double>>> polys) {
    return BetaField(std::move(polys));
}

namespace {

double eval_poly(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

} // namespace

Eigen::MatrixXd BetaField::evaluate(const Eigen::MatrixXd& g) const {
    const int n = static_cast<int>(g.rows());
    if (g.rows() != g.cols()) {
        throw ShapeMismatch("profile matrix must be square");
    }
    if (kind_ == Kind::Linear) {
        if (op_.kind() == PropagationOperator::Kind::Entrywise) {
            if (op_.factors().rows() != n) {
                throw ShapeMismatch("operator and profile dimensions differ");
            }
            return (op_.factors().array() - 1.0).matrix().cwiseProduct(g);
        }
        if (op_.vec_dim() != n * n) {
            throw ShapeMismatch("operator and profile dimensions differ");
        }
        const CouplingMatrix wrapped{0, g};
        Eigen::VectorXd v = vectorize(wrapped);
        Eigen::VectorXd out = op_.matrix() * v - v;
        return devectorize(out, n, 0).entries;
    }
    if (static_cast<int>(polys_.size()) != n) {
        throw ShapeMismatch("polynomial table and profile dimensions differ");
    }
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = eval_poly(polys_[static_cast<size_t>(i)][static_cast<size_t>(j)], g(i, j));
        }
    }
    return out;
}

FlowTrajectory integrate_beta(const BetaField& beta, const CouplingMatrix& g0, double k0,
                              double k1, double step) {
    if (!(step > 0.0)) {
        throw ValidationError("integration step must be positive");
    }
    if (!(k1 > k0)) {
        throw ValidationError("k range must satisfy k1 > k0");
    }
    FlowTrajectory traj;
    Eigen::MatrixXd g = g0.entries;
    double k = k0;
    traj.k.push_back(k);
    traj.states.push_back(g);
    while (k < k1 - 1e-12) {
        const double h = std::min(step, k1 - k);
        const Eigen::MatrixXd k1s = beta.evaluate(g);
        const Eigen::MatrixXd k2s = beta.evaluate(g + 0.5 * h * k1s);
        const Eigen::MatrixXd k3s = beta.evaluate(g + 0.5 * h * k2s);
        const Eigen::MatrixXd k4s = beta.evaluate(g + h * k3s);
        g += (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        k += h;
        if (!g.allFinite()) {
            throw NonFiniteState("flow left the finite range near k = " + std::to_string(k));
        }
        traj.k.push_back(k);
        traj.states.push_back(g);
    }
    return traj;
}

FixedPointResult find_fixed_point(const BetaField& beta, const CouplingMatrix& guess,
                                  double tol, int max_iter) {
    if (!(tol > 0.0)) {
        throw ValidationError("tolerance must be positive");
    }
    const int n = guess.sector_count();
    const int dim = n * n;
    auto eval_vec = [&](const Eigen::VectorXd& x) {
        const Eigen::MatrixXd m = devectorize(x, n, guess.level).entries;
        const CouplingMatrix wrapped{guess.level, beta.evaluate(m)};
        return vectorize(wrapped);
    };

    FixedPointResult result;
    Eigen::VectorXd x = vectorize(guess);
    Eigen::VectorXd r = eval_vec(x);
    double res = r.lpNorm<Eigen::Infinity>();

    for (int iter = 0; iter < max_iter && res > tol; ++iter) {
        result.iterations = iter + 1;

        Eigen::MatrixXd jac(dim, dim);
        for (int j = 0; j < dim; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
            Eigen::VectorXd xh = x;
            xh(j) += h;
            jac.col(j) = (eval_vec(xh) - r) / h;
        }

        Eigen::VectorXd delta;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (lu.isInvertible()) {
            delta = lu.solve(-r);
            // damp until the residual drops; below 1/64 take the step anyway
            double t = 1.0;
            Eigen::VectorXd x_next = x + delta;
            Eigen::VectorXd r_next = eval_vec(x_next);
            while (t > 1.0 / 64.0 &&
                   (!r_next.allFinite() || r_next.lpNorm<Eigen::Infinity>() >= res)) {
                t *= 0.5;
                x_next = x + t * delta;
                r_next = eval_vec(x_next);
            }
            x = x_next;
            r = r_next;
        } else {
            result.singular_fallbacks++;
            x += 0.5 * r;
            r = eval_vec(x);
        }

        if (!r.allFinite() || !x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e6) {
            result.converged = false;
            result.residual = std::numeric_limits<double>::infinity();
            result.profile = devectorize(x.allFinite() ? x : vectorize(guess), n, guess.level);
            return result;
        }
        res = r.lpNorm<Eigen::Infinity>();
    }

    result.profile = devectorize(x, n, guess.level);
    result.residual = res;
    result.converged = res <= tol;
    return result;
}

Relevance classify_relevance(const BetaField& beta, const CouplingMatrix& at, int source,
                             int target, double tol) {
    const int n = at.sector_count();
    if (source < 0 || source >= n || target < 0 || target >= n) {
        throw ValidationError("sector index out of range");
    }
    const double g = at.entries(source, target);
    const double b = beta.evaluate(at.entries)(source, target);
    const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
    const double v = b * sign;
    if (v > tol) {
        return Relevance::Relevant;
    }
    if (v < -tol) {
        return Relevance::Irrelevant;
    }
    return Relevance::Marginal;
}

std::string to_string(Relevance r) {
    switch (r) {
    case Relevance::Relevant:
        return "relevant";
    case Relevance::Irrelevant:
        return "irrelevant";
    case Relevance::Marginal:
        return "marginal";
    }
    return "?";
}

} // namespace scl
