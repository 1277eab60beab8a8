#include "scl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "scl/errors.hpp"
#include "scl/logging.hpp"

namespace scl {

namespace {

constexpr double kSlopeCap = 1e3;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double feature_value(const InteractionEvent& e, const std::string& feature) {
    if (feature == "magnitude") {
        return e.magnitude;
    }
    auto it = e.attrs.find(feature);
    if (it == e.attrs.end()) {
        throw ValidationError("event lacks feature \"" + feature + "\"");
    }
    return it->second;
}

struct LogisticFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double loglik = 0.0;
    bool separated = false;
};

double logistic_loglik(const std::vector<double>& x, const std::vector<char>& y,
                       double intercept, double slope) {
    double ll = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double eta = std::clamp(intercept + slope * x[i], -35.0, 35.0);
        const double p = sigmoid(eta);
        ll += y[i] ? std::log(std::max(p, 1e-300)) : std::log(std::max(1.0 - p, 1e-300));
    }
    return ll;
}

/// Two-parameter logistic regression by Newton iteration. Perfect 1-D
/// separation is detected combinatorially up front.
LogisticFit fit_logistic(const std::vector<double>& x, const std::vector<char>& y) {
    const size_t m = x.size();
    LogisticFit fit;

    double min_pos = std::numeric_limits<double>::infinity();
    double max_pos = -std::numeric_limits<double>::infinity();
    double min_neg = std::numeric_limits<double>::infinity();
    double max_neg = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < m; ++i) {
        if (y[i]) {
            min_pos = std::min(min_pos, x[i]);
            max_pos = std::max(max_pos, x[i]);
        } else {
            min_neg = std::min(min_neg, x[i]);
            max_neg = std::max(max_neg, x[i]);
        }
    }
    if (max_neg < min_pos || max_pos < min_neg) {
        fit.separated = true;
    }

    Eigen::Vector2d beta = Eigen::Vector2d::Zero();
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::Vector2d score = Eigen::Vector2d::Zero();
        Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
        for (size_t i = 0; i < m; ++i) {
            const double eta = std::clamp(beta(0) + beta(1) * x[i], -35.0, 35.0);
            const double p = sigmoid(eta);
            const double w = std::max(p * (1.0 - p), 1e-12);
            const double r = (y[i] ? 1.0 : 0.0) - p;
            score(0) += r;
            score(1) += r * x[i];
            hess(0, 0) += w;
            hess(0, 1) += w * x[i];
            hess(1, 1) += w * x[i] * x[i];
        }
        hess(1, 0) = hess(0, 1);
        const Eigen::Vector2d delta = hess.ldlt().solve(score);
        if (!delta.allFinite()) {
            break;
        }
        beta += delta;
        if (std::abs(beta(1)) > kSlopeCap) {
            beta(1) = std::copysign(kSlopeCap, beta(1));
            fit.separated = true;
            break;
        }
        if (delta.lpNorm<Eigen::Infinity>() < 1e-10) {
            break;
        }
    }

    // Observed-information standard error at the final iterate.
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    for (size_t i = 0; i < m; ++i) {
        const double eta = std::clamp(beta(0) + beta(1) * x[i], -35.0, 35.0);
        const double p = sigmoid(eta);
        const double w = std::max(p * (1.0 - p), 1e-12);
        hess(0, 0) += w;
        hess(0, 1) += w * x[i];
        hess(1, 1) += w * x[i] * x[i];
    }
    hess(1, 0) = hess(0, 1);
    const Eigen::Matrix2d cov = hess.inverse();
    fit.intercept = beta(0);
    fit.slope = beta(1);
    fit.slope_se = cov.allFinite() && cov(1, 1) > 0.0 ? std::sqrt(cov(1, 1))
                                                      : std::numeric_limits<double>::infinity();
    fit.loglik = logistic_loglik(x, y, beta(0), beta(1));
    return fit;
}

struct OlsFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
};

/// Straight-line least squares through Eigen's QR; the closed-form slope
/// lives in the tests as the independent check.
OlsFit fit_ols(const std::vector<double>& x, const std::vector<double>& y) {
    const Eigen::Index m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = x[static_cast<size_t>(i)];
        rhs(i) = y[static_cast<size_t>(i)];
    }
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd fitted = design * beta;
    const double ss_res = (rhs - fitted).squaredNorm();
    const double mean_y = rhs.mean();
    const double ss_tot = (rhs.array() - mean_y).square().sum();

    OlsFit fit;
    fit.intercept = beta(0);
    fit.slope = beta(1);
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    const double mean_x = design.col(1).mean();
    const double sxx = (design.col(1).array() - mean_x).square().sum();
    const double sigma2 = m > 2 ? ss_res / static_cast<double>(m - 2) : 0.0;
    fit.slope_se = sxx > 0.0 ? std::sqrt(sigma2 / sxx) : 0.0;
    return fit;
}

double response_value(const PairedInteraction& p, const EstimationSpec& spec) {
    return feature_value(*p.response, spec.response_feature);
}

} // namespace

FitMode fit_mode_from_string(const std::string& s) {
    if (s == "gated") {
        return FitMode::Gated;
    }
    if (s == "outcome") {
        return FitMode::Outcome;
    }
    if (s == "parameter") {
        return FitMode::Parameter;
    }
    throw ValidationError("unknown fit mode \"" + s + "\"");
}

std::string to_string(FitMode m) {
    switch (m) {
    case FitMode::Gated:
        return "gated";
    case FitMode::Outcome:
        return "outcome";
    case FitMode::Parameter:
        return "parameter";
    }
    return "?";
}

std::vector<PairedInteraction> pair_events(const EventLog& log, const EstimationSpec& spec) {
    if (log.empty()) {
        throw EmptyLog("event log is empty");
    }
    if (!(spec.window > 0.0)) {
        throw ValidationError("pairing window must be positive");
    }

    std::vector<size_t> stimuli;
    std::vector<size_t> responses;
    for (size_t i = 0; i < log.size(); ++i) {
        if (log[i].level != spec.level) {
            continue;
        }
        if (log[i].sector == spec.source_sector) {
            stimuli.push_back(i);
        }
        if (log[i].sector == spec.target_sector) {
            responses.push_back(i);
        }
    }

    // Responses claim their nearest unclaimed predecessor stimulus.
    std::vector<std::optional<size_t>> claimed_response(stimuli.size());
    std::vector<bool> stimulus_taken(stimuli.size(), false);
    for (size_t r : responses) {
        const double tr = log[r].t;
        std::optional<size_t> best;
        for (size_t si = 0; si < stimuli.size(); ++si) {
            if (stimulus_taken[si]) {
                continue;
            }
            const double ts = log[stimuli[si]].t;
            if (ts < tr && tr <= ts + spec.window) {
                if (!best || log[stimuli[*best]].t <= ts) {
                    best = si;
                }
            }
        }
        if (best) {
            stimulus_taken[*best] = true;
            claimed_response[*best] = r;
        }
    }

    std::vector<PairedInteraction> pairs;
    pairs.reserve(stimuli.size());
    for (size_t si = 0; si < stimuli.size(); ++si) {
        PairedInteraction p;
        p.stimulus = log[stimuli[si]];
        if (claimed_response[si]) {
            p.response = log[*claimed_response[si]];
            p.latency = p.response->t - p.stimulus.t;
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

EstimateResult fit_coupling(const std::vector<PairedInteraction>& pairs,
                            const EstimationSpec& spec) {
    if (static_cast<int>(pairs.size()) < kMinPairs) {
        throw InsufficientData("need at least " + std::to_string(kMinPairs) + " pairs, have " +
                               std::to_string(pairs.size()));
    }

    EstimateResult result;
    result.n_pairs = static_cast<int>(pairs.size());

    if (spec.mode == FitMode::Gated) {
        std::vector<double> x;
        std::vector<char> y;
        x.reserve(pairs.size());
        for (const auto& p : pairs) {
            x.push_back(feature_value(p.stimulus, spec.feature));
            y.push_back(p.response.has_value() ? 1 : 0);
        }
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double var = 0.0;
        for (double v : x) {
            var += (v - mean) * (v - mean);
        }
        if (var == 0.0) {
            throw NonIdentifiable("regressor has zero variance");
        }
        const bool any_pos = std::any_of(y.begin(), y.end(), [](char c) { return c != 0; });
        const bool any_neg = std::any_of(y.begin(), y.end(), [](char c) { return c == 0; });
        if (!any_pos || !any_neg) {
            throw NonIdentifiable("response indicator has no variation");
        }
        const LogisticFit fit = fit_logistic(x, y);
        result.g_hat = fit.slope;
        result.intercept = fit.intercept;
        result.stderr_value = fit.slope_se;
        result.separated = fit.separated;
        result.fit = {"loglik", fit.loglik};
    } else {
        std::vector<double> x;
        std::vector<double> y;
        for (const auto& p : pairs) {
            if (!p.response) {
                continue;
            }
            x.push_back(feature_value(p.stimulus, spec.feature));
            y.push_back(response_value(p, spec));
        }
        if (static_cast<int>(x.size()) < kMinPairs) {
            throw InsufficientData("only " + std::to_string(x.size()) +
                                   " positive pairs for a regression fit");
        }
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double var = 0.0;
        for (double v : x) {
            var += (v - mean) * (v - mean);
        }
        if (var == 0.0) {
            throw NonIdentifiable("regressor has zero variance");
        }
        const OlsFit fit = fit_ols(x, y);
        result.g_hat = fit.slope;
        result.intercept = fit.intercept;
        result.stderr_value = fit.slope_se;
        result.fit = {"r2", fit.r2};
        result.n_pairs = static_cast<int>(x.size());
    }

    const double se = std::isfinite(result.stderr_value) ? result.stderr_value : 0.0;
    result.ci_lo = result.g_hat - 1.959963984540054 * se;
    result.ci_hi = result.g_hat + 1.959963984540054 * se;
    return result;
}

BootstrapCi bootstrap_ci(const std::vector<PairedInteraction>& pairs,
                         const EstimationSpec& spec, int b, std::uint64_t seed, int threads) {
    if (b < 100) {
        throw ValidationError("bootstrap needs at least 100 replicates");
    }
    if (static_cast<int>(pairs.size()) < kMinPairs) {
        throw InsufficientData("too few pairs to bootstrap");
    }
    const size_t m = pairs.size();
    std::vector<double> estimates(static_cast<size_t>(b),
                                  std::numeric_limits<double>::quiet_NaN());

    auto run_range = [&](int from, int to) {
        std::vector<PairedInteraction> sample(m);
        for (int rep = from; rep < to; ++rep) {
            std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(rep))));
            std::uniform_int_distribution<size_t> pick(0, m - 1);
            for (size_t i = 0; i < m; ++i) {
                sample[i] = pairs[pick(rng)];
            }
            try {
                const EstimateResult r = fit_coupling(sample, spec);
                if (!r.separated && std::isfinite(r.g_hat)) {
                    estimates[static_cast<size_t>(rep)] = r.g_hat;
                }
            } catch (const Error&) {
                // degenerate resample; skipped
            }
        }
    };

    threads = std::max(1, threads);
    if (threads == 1) {
        run_range(0, b);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (b + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int from = t * chunk;
            const int to = std::min(b, from + chunk);
            if (from < to) {
                pool.emplace_back(run_range, from, to);
            }
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    std::vector<double> valid;
    valid.reserve(estimates.size());
    for (double e : estimates) {
        if (std::isfinite(e)) {
            valid.push_back(e);
        }
    }
    if (static_cast<int>(valid.size()) < kMinPairs) {
        throw InsufficientData("bootstrap produced too few valid replicates");
    }
    std::sort(valid.begin(), valid.end());

    auto quantile = [&](double q) {
        const double pos = q * (valid.size() - 1);
        const size_t lo = static_cast<size_t>(std::floor(pos));
        const size_t hi = std::min(lo + 1, valid.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return valid[lo] * (1.0 - frac) + valid[hi] * frac;
    };

    BootstrapCi ci;
    ci.lo = quantile(0.025);
    ci.hi = quantile(0.975);
    ci.valid = static_cast<int>(valid.size());
    const double mean = std::accumulate(valid.begin(), valid.end(), 0.0) / valid.size();
    double ss = 0.0;
    for (double v : valid) {
        ss += (v - mean) * (v - mean);
    }
    ci.stderr_value = valid.size() > 1 ? std::sqrt(ss / (valid.size() - 1)) : 0.0;
    return ci;
}

HoldoutResult validate_holdout(const std::vector<PairedInteraction>& pairs,
                               const EstimationSpec& spec, double split, std::uint64_t seed) {
    if (!(split > 0.0 && split < 1.0)) {
        throw ValidationError("split must lie in (0, 1)");
    }
    const size_t m = pairs.size();
    std::vector<size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(splitmix64(seed));
    std::shuffle(idx.begin(), idx.end(), rng);

    const size_t test_count = static_cast<size_t>(std::lround(split * static_cast<double>(m)));
    if (test_count < static_cast<size_t>(kMinPairs) ||
        m - test_count < static_cast<size_t>(kMinPairs)) {
        throw InsufficientData("both holdout sides need at least " + std::to_string(kMinPairs) +
                               " pairs");
    }
    std::vector<PairedInteraction> test, train;
    test.reserve(test_count);
    train.reserve(m - test_count);
    for (size_t i = 0; i < m; ++i) {
        (i < test_count ? test : train).push_back(pairs[idx[i]]);
    }

    const EstimateResult model = fit_coupling(train, spec);
    constexpr int kShuffles = 200;
    HoldoutResult out;

    if (spec.mode == FitMode::Gated) {
        std::vector<double> x;
        std::vector<char> y;
        for (const auto& p : test) {
            x.push_back(feature_value(p.stimulus, spec.feature));
            y.push_back(p.response.has_value() ? 1 : 0);
        }
        double train_rate = 0.0;
        for (const auto& p : train) {
            train_rate += p.response.has_value() ? 1.0 : 0.0;
        }
        train_rate = std::clamp(train_rate / static_cast<double>(train.size()), 1e-9, 1.0 - 1e-9);
        const double null_intercept = std::log(train_rate / (1.0 - train_rate));

        auto improvement = [&](const std::vector<char>& labels) {
            return logistic_loglik(x, labels, model.intercept, model.g_hat) -
                   logistic_loglik(x, labels, null_intercept, 0.0);
        };
        out.metric = "test_loglik_improvement";
        out.value = improvement(y);

        int correct = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            const bool predicted = sigmoid(model.intercept + model.g_hat * x[i]) >= 0.5;
            correct += predicted == (y[i] != 0) ? 1 : 0;
        }
        out.accuracy = static_cast<double>(correct) / static_cast<double>(x.size());

        int at_least = 0;
        std::vector<char> shuffled = y;
        for (int s = 0; s < kShuffles; ++s) {
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            if (improvement(shuffled) >= out.value) {
                ++at_least;
            }
        }
        out.p_value = (1.0 + at_least) / (1.0 + kShuffles);
    } else {
        std::vector<double> x, y;
        for (const auto& p : test) {
            if (!p.response) {
                continue;
            }
            x.push_back(feature_value(p.stimulus, spec.feature));
            y.push_back(response_value(p, spec));
        }
        if (static_cast<int>(x.size()) < kMinPairs) {
            throw InsufficientData("too few positive test pairs");
        }
        auto r2_of = [&](const std::vector<double>& labels) {
            double ss_res = 0.0;
            double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / labels.size();
            double ss_tot = 0.0;
            for (size_t i = 0; i < x.size(); ++i) {
                const double fitted = model.intercept + model.g_hat * x[i];
                ss_res += (labels[i] - fitted) * (labels[i] - fitted);
                ss_tot += (labels[i] - mean) * (labels[i] - mean);
            }
            return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
        };
        out.metric = "test_r2";
        out.value = r2_of(y);

        int at_least = 0;
        std::vector<double> shuffled = y;
        for (int s = 0; s < kShuffles; ++s) {
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            if (r2_of(shuffled) >= out.value) {
                ++at_least;
            }
        }
        out.p_value = (1.0 + at_least) / (1.0 + kShuffles);
    }
    return out;
}

std::map<double, EstimateResult> fit_stratified(const std::vector<PairedInteraction>& pairs,
                                                const EstimationSpec& spec,
                                                const std::string& strat_attr) {
    std::map<double, std::vector<PairedInteraction>> strata;
    for (const auto& p : pairs) {
        auto it = p.stimulus.attrs.find(strat_attr);
        if (it == p.stimulus.attrs.end()) {
            throw ValidationError("stimulus lacks stratification attr \"" + strat_attr + "\"");
        }
        strata[it->second].push_back(p);
    }
    std::map<double, EstimateResult> out;
    for (const auto& [value, group] : strata) {
        try {
            out[value] = fit_coupling(group, spec);
        } catch (const ValidationError&) {
            // stratum too small or degenerate; omitted
        }
    }
    return out;
}

bool ProfileEstimate::available(int i, int j) const {
    const std::string& f = flags[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return f.empty() || f == "separated";
}

ProfileEstimate estimate_profile(const EventLog& log, const SectorRegistry& registry, int level,
                                 FitMode mode, double window,
                                 const std::map<std::pair<int, int>, double>& anchors) {
    if (log.empty()) {
        throw EmptyLog("event log is empty");
    }
    const int n = registry.size();
    ProfileEstimate est;
    est.raw = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    est.flags.assign(static_cast<size_t>(n), std::vector<std::string>(static_cast<size_t>(n)));

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            EstimationSpec spec;
            spec.source_sector = registry.label(i);
            spec.target_sector = registry.label(j);
            spec.level = level;
            spec.mode = mode;
            spec.window = window;
            try {
                const auto pairs = pair_events(log, spec);
                const EstimateResult r = fit_coupling(pairs, spec);
                est.raw(i, j) = r.g_hat;
                if (r.separated) {
                    est.flags[static_cast<size_t>(i)][static_cast<size_t>(j)] = "separated";
                }
                est.results[{i, j}] = r;
            } catch (const InsufficientData&) {
                est.flags[static_cast<size_t>(i)][static_cast<size_t>(j)] = "insufficient-data";
            } catch (const NonIdentifiable&) {
                est.flags[static_cast<size_t>(i)][static_cast<size_t>(j)] = "non-identifiable";
            }
            const auto& flag = est.flags[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (!flag.empty()) {
                scl::log(LogLevel::Info, registry.label(i) + "->" + registry.label(j) +
                                        " flagged: " + flag);
            }
        }
    }

    est.calibrated = est.raw;
    if (!anchors.empty()) {
        std::vector<double> xs, ys;
        for (const auto& [coord, truth] : anchors) {
            const auto [i, j] = coord;
            if (i < 0 || i >= n || j < 0 || j >= n) {
                throw ValidationError("anchor coordinate out of range");
            }
            if (est.available(i, j) && std::isfinite(est.raw(i, j))) {
                xs.push_back(est.raw(i, j));
                ys.push_back(truth);
            }
        }
        const double mean = xs.empty()
                                ? 0.0
                                : std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        double var = 0.0;
        for (double v : xs) {
            var += (v - mean) * (v - mean);
        }
        if (xs.size() >= 2 && var > 0.0) {
            const OlsFit fit = fit_ols(xs, ys);
            est.calibration.scale = fit.slope;
            est.calibration.offset = fit.intercept;
            est.calibration.applied = true;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (std::isfinite(est.raw(i, j))) {
                        est.calibrated(i, j) =
                            est.calibration.offset + est.calibration.scale * est.raw(i, j);
                    }
                }
            }
        }
    }
    return est;
}

InferredOperator infer_propagation(
    const CouplingMatrix& gk, const CouplingMatrix& gk1, InferenceModel model,
    const std::vector<std::pair<CouplingMatrix, CouplingMatrix>>& extra_pairs) {
    const int n = gk.sector_count();
    if (gk1.sector_count() != n || gk.entries.cols() != n || gk1.entries.cols() != n) {
        throw ShapeMismatch("level-k and level-(k+1) matrices differ in shape");
    }

    if (model == InferenceModel::Entrywise) {
        constexpr double kDivEps = 1e-9;
        Eigen::MatrixXd factors = Eigen::MatrixXd::Ones(n, n);
        InferredOperator out{PropagationOperator::identity(n), 0.0, {}};
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (std::abs(gk.entries(i, j)) > kDivEps) {
                    factors(i, j) = gk1.entries(i, j) / gk.entries(i, j);
                } else {
                    out.undefined_ratios.emplace_back(i, j);
                }
            }
        }
        out.op = PropagationOperator::entrywise(std::move(factors));
        out.residual = frobenius_distance(apply_propagation(out.op, gk), gk1);
        return out;
    }

    std::vector<std::pair<const CouplingMatrix*, const CouplingMatrix*>> all;
    all.emplace_back(&gk, &gk1);
    for (const auto& [a, b] : extra_pairs) {
        if (a.sector_count() != n || b.sector_count() != n) {
            throw ShapeMismatch("extra pair has a different shape");
        }
        all.emplace_back(&a, &b);
    }
    const int dim = n * n;
    const int p = static_cast<int>(all.size());
    if (p < dim) {
        throw RankDeficient("dense inference needs at least " + std::to_string(dim) +
                            " pairs, got " + std::to_string(p));
    }
    Eigen::MatrixXd x(p, dim), y(p, dim);
    for (int r = 0; r < p; ++r) {
        x.row(r) = vectorize(*all[static_cast<size_t>(r)].first).transpose();
        y.row(r) = vectorize(*all[static_cast<size_t>(r)].second).transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < dim) {
        throw RankDeficient("stacked profile pairs are rank deficient (" +
                            std::to_string(qr.rank()) + " < " + std::to_string(dim) + ")");
    }
    const Eigen::MatrixXd mt = qr.solve(y); // x * M^T ~= y
    InferredOperator out{PropagationOperator::dense(mt.transpose()), 0.0, {}};
    out.residual = frobenius_distance(apply_propagation(out.op, gk), gk1);
    return out;
}

DiagnosticReport diagnose_profiles(const CouplingMatrix& predicted, const CouplingMatrix& actual,
                                   double tau) {
    if (!(tau > 0.0)) {
        throw ValidationError("tau must be positive");
    }
    if (predicted.entries.rows() != actual.entries.rows() ||
        predicted.entries.cols() != actual.entries.cols()) {
        throw ShapeMismatch("predicted and actual matrices differ in shape");
    }
    DiagnosticReport report;
    report.predicted = predicted;
    report.actual = actual;
    report.tau = tau;
    report.deviation = frobenius_distance(predicted, actual);
    report.alert = report.deviation > tau;

    std::vector<DeviationEntry> diffs;
    const int n = predicted.sector_count();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < static_cast<int>(predicted.entries.cols()); ++j) {
            diffs.push_back({i, j, std::abs(predicted.entries(i, j) - actual.entries(i, j))});
        }
    }
    std::stable_sort(diffs.begin(), diffs.end(),
                     [](const auto& a, const auto& b) { return a.abs_diff > b.abs_diff; });
    diffs.resize(std::min<size_t>(3, diffs.size()));
    report.worst_entries = std::move(diffs);
    return report;
}

DiagnosticReport predict_and_diagnose(const PropagationOperator& op, const CouplingMatrix& gk,
                                      const CouplingMatrix& actual, double tau) {
    return diagnose_profiles(apply_propagation(op, gk), actual, tau);
}

} // namespace scl
