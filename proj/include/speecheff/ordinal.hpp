#ifndef SPEECHEFF_ORDINAL_HPP
#define SPEECHEFF_ORDINAL_HPP

/**
 * @file ordinal.hpp
 *
 * Univariate ordinal analysis of factor values against contest level.
 *
 * - fit_binary_logistic: Newton-Raphson logistic regression for one of the
 *   four "level > k" sub-problems.
 * - fit_proportional_odds: cumulative-logit model P(level <= k) =
 *   sigmoid(alpha_k - beta x) with one shared slope; Wald test on beta.
 * - parallel_lines_test: likelihood-ratio test of the shared slope against
 *   the cumulative-logit model with a separate slope per cutpoint.
 *
 * All fits standardize x internally and report parameters on the raw scale,
 * so inference is invariant to positive affine rescaling of the factor.
 */

#include "common.hpp"
#include "factors.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <limits>

namespace speecheff {

inline constexpr double kSignificance = 0.05;

namespace detail {

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct Standardized {
    std::vector<double> z;
    double mean = 0.0;
    double sd = 0.0;
};

inline Standardized standardize_vector(std::span<const double> x) {
    Standardized out;
    const double n = static_cast<double>(x.size());
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / n);
    out.z.reserve(x.size());
    if (out.sd > 0.0) {
        for (double v : x) out.z.push_back((v - out.mean) / out.sd);
    }
    return out;
}

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

/// Solves (-H) d = g, falling back to a ridge when -H is not positive definite.
inline Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& grad) {
    Eigen::MatrixXd info = -hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    double ridge = 1e-10 * std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
    while (llt.info() != Eigen::Success) {
        llt.compute(info + ridge * Eigen::MatrixXd::Identity(info.rows(), info.cols()));
        ridge *= 10.0;
        if (ridge > 1e12) return grad;
    }
    return llt.solve(grad);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Binary logistic regression
// ---------------------------------------------------------------------------

struct BinaryFit {
    int k = 0;  ///< sub-problem index (level > k), 0 when fitted standalone
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    double log_likelihood = 0.0;
    bool converged = false;
    bool diverging = false;  ///< complete or quasi-complete separation
    int iterations = 0;
};

inline constexpr double kScoreTolerance = 1e-8;
inline constexpr int kMaxNewtonIterations = 100;
inline constexpr double kSeparationSlope = 1e3;

/// Maximum-likelihood fit of logit P(y = 1) = b0 + b1 x.
inline BinaryFit fit_binary_logistic(std::span<const double> x, std::span<const int> y) {
    if (x.size() != y.size()) throw Error("fit_binary_logistic: length mismatch");
    if (x.size() < 2) throw Error("fit_binary_logistic: need at least 2 observations");
    std::size_t ones = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw Error("fit_binary_logistic: outcome must be 0/1");
        ones += static_cast<std::size_t>(v);
    }
    if (ones == 0 || ones == y.size()) throw Error("fit_binary_logistic: single-class outcome");
    if (detail::is_constant(x)) throw Error("fit_binary_logistic: degenerate predictor (constant x)");

    // With one predictor the MLE is finite iff the two classes overlap strictly.
    double max0 = -std::numeric_limits<double>::infinity(), min0 = std::numeric_limits<double>::infinity();
    double max1 = max0, min1 = min0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == 1) {
            max1 = std::max(max1, x[i]);
            min1 = std::min(min1, x[i]);
        } else {
            max0 = std::max(max0, x[i]);
            min0 = std::min(min0, x[i]);
        }
    }
    const bool separated = max0 <= min1 || max1 <= min0;

    const auto st = detail::standardize_vector(x);
    const std::vector<double>& z = st.z;
    auto evaluate = [&](double a, double b, Eigen::Vector2d* grad, Eigen::Matrix2d* hess) {
        double ll = 0.0;
        if (grad) grad->setZero();
        if (hess) hess->setZero();
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double eta = a + b * z[i];
            ll += y[i] * eta - detail::softplus(eta);
            if (grad) {
                const double p = detail::sigmoid(eta);
                const double r = y[i] - p;
                const double w = p * (1.0 - p);
                (*grad)(0) += r;
                (*grad)(1) += r * z[i];
                (*hess)(0, 0) -= w;
                (*hess)(0, 1) -= w * z[i];
                (*hess)(1, 1) -= w * z[i] * z[i];
            }
        }
        if (hess) (*hess)(1, 0) = (*hess)(0, 1);
        return ll;
    };

    const double prevalence = static_cast<double>(ones) / static_cast<double>(y.size());
    double a = detail::logit(prevalence);
    double b = 0.0;
    Eigen::Vector2d grad;
    Eigen::Matrix2d hess;
    double ll = evaluate(a, b, &grad, &hess);
    BinaryFit fit;
    for (fit.iterations = 0; fit.iterations < kMaxNewtonIterations; ++fit.iterations) {
        if (grad.cwiseAbs().maxCoeff() < kScoreTolerance) break;
        if (std::abs(b) > kSeparationSlope) break;
        const Eigen::VectorXd step = detail::newton_direction(hess, grad);
        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const double trial = evaluate(a + t * step(0), b + t * step(1), nullptr, nullptr);
            if (trial >= ll) {
                a += t * step(0);
                b += t * step(1);
                improved = true;
                break;
            }
        }
        if (!improved) break;
        ll = evaluate(a, b, &grad, &hess);
    }

    fit.diverging = separated || std::abs(b) > kSeparationSlope;
    fit.converged = !fit.diverging && grad.cwiseAbs().maxCoeff() < 1e-6;
    fit.log_likelihood = ll;
    fit.slope = b / st.sd;
    fit.intercept = a - b * st.mean / st.sd;

    Eigen::Matrix2d cov = (-hess).inverse();
    Eigen::Matrix2d to_raw;
    to_raw << 1.0, -st.mean / st.sd, 0.0, 1.0 / st.sd;
    const Eigen::Matrix2d cov_raw = to_raw * cov * to_raw.transpose();
    fit.se_intercept = std::sqrt(std::max(0.0, cov_raw(0, 0)));
    fit.se_slope = std::sqrt(std::max(0.0, cov_raw(1, 1)));
    return fit;
}

// ---------------------------------------------------------------------------
// Cumulative-logit likelihood
// ---------------------------------------------------------------------------

namespace detail {

/// Cumulative-logit model with J cutpoints on standardized covariate z and
/// categories 0..J. Parameter layout: alpha_1..alpha_J, then either one
/// shared slope or J slopes (one per cutpoint).
struct CumulativeLogit {
    const std::vector<double>& z;
    const std::vector<int>& category;
    int cutpoints;
    bool shared_slope;

    int parameter_count() const { return cutpoints + (shared_slope ? 1 : cutpoints); }
    int slope_index(int j) const { return cutpoints + (shared_slope ? 0 : j); }

    /// Log-likelihood; gradient and Hessian when requested. Returns -inf
    /// when some observation has non-positive probability.
    double evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
        const int p = parameter_count();
        if (grad) grad->setZero(p);
        if (hess) hess->setZero(p, p);
        double ll = 0.0;
        Eigen::VectorXd a_up(p), a_lo(p);
        for (std::size_t i = 0; i < z.size(); ++i) {
            const int c = category[i];
            const bool has_up = c < cutpoints;
            const bool has_lo = c > 0;
            double u = 0.0, l = 0.0;
            if (has_up) u = params(c) - params(slope_index(c)) * z[i];
            if (has_lo) l = params(c - 1) - params(slope_index(c - 1)) * z[i];
            double prob;
            if (has_up && has_lo) {
                // Difference of the two CDF values, taken on the side with less cancellation.
                prob = l > 0.0 ? sigmoid(-l) - sigmoid(-u) : sigmoid(u) - sigmoid(l);
            } else if (has_up) {
                prob = sigmoid(u);
            } else {
                prob = sigmoid(-l);
            }
            if (!(prob > 0.0)) return -std::numeric_limits<double>::infinity();
            ll += std::log(prob);
            if (!grad) continue;

            double du = 0.0, dl = 0.0, ddu = 0.0, ddl = 0.0;
            a_up.setZero();
            a_lo.setZero();
            if (has_up) {
                const double s = sigmoid(u);
                du = s * (1.0 - s);
                ddu = du * (1.0 - 2.0 * s);
                a_up(c) = 1.0;
                a_up(slope_index(c)) -= z[i];
            }
            if (has_lo) {
                const double s = sigmoid(l);
                dl = s * (1.0 - s);
                ddl = dl * (1.0 - 2.0 * s);
                a_lo(c - 1) = 1.0;
                a_lo(slope_index(c - 1)) -= z[i];
            }
            const Eigen::VectorXd g = (du * a_up - dl * a_lo) / prob;
            *grad += g;
            if (hess) {
                *hess += (ddu * a_up * a_up.transpose() - ddl * a_lo * a_lo.transpose()) / prob - g * g.transpose();
            }
        }
        return ll;
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Proportional-odds model
// ---------------------------------------------------------------------------

struct OrdinalFit {
    std::string factor_name;
    double beta = 0.0;
    /// alpha_k for P(level <= k), k = 1..4. Levels absent from the data give
    /// tied cutpoints (interior) or -inf / +inf (below / above the range).
    std::array<double, 4> cutpoints{};
    double se_beta = 0.0;
    std::array<double, 4> se_cutpoints{};
    double wald_z = 0.0;
    double p_value = 1.0;
    double log_likelihood = 0.0;
    bool converged = false;
    int n_used = 0;
    int iterations = 0;
    std::vector<int> present_levels;
    std::vector<double> log_likelihood_trace;  ///< one entry per accepted iterate
};

namespace detail {

struct PreparedOrdinal {
    Standardized x;
    std::vector<int> category;
    std::vector<int> present_levels;
};

inline PreparedOrdinal prepare_ordinal(std::span<const double> x, std::span<const int> levels) {
    if (x.size() != levels.size()) throw Error("ordinal fit: length mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw Error("ordinal fit: non-finite factor value");
    }
    std::array<int, kLevelCount> counts{};
    for (int l : levels) {
        if (l < 1 || l > kLevelCount) throw Error("ordinal fit: level out of 1..5");
        ++counts[l - 1];
    }
    PreparedOrdinal out;
    std::array<int, kLevelCount> to_category{};
    for (int l = 1; l <= kLevelCount; ++l) {
        if (counts[l - 1] > 0) {
            to_category[l - 1] = static_cast<int>(out.present_levels.size());
            out.present_levels.push_back(l);
        }
    }
    if (out.present_levels.size() < 2) throw Error("ordinal fit: fewer than 2 distinct levels");
    if (is_constant(x)) throw Error("ordinal fit: constant factor values");
    out.x = standardize_vector(x);
    out.category.reserve(levels.size());
    for (int l : levels) out.category.push_back(to_category[l - 1]);
    return out;
}

/// Expands per-category-boundary cutpoints to the four level cutpoints.
inline std::array<double, 4> expand_cutpoints(const std::vector<double>& compact, const std::vector<int>& present) {
    std::array<double, 4> out{};
    for (int k = 1; k <= 4; ++k) {
        // number of present levels <= k
        int below = 0;
        for (int l : present) below += l <= k ? 1 : 0;
        if (below == 0) out[k - 1] = -std::numeric_limits<double>::infinity();
        else if (below == static_cast<int>(present.size())) out[k - 1] = std::numeric_limits<double>::infinity();
        else out[k - 1] = compact[static_cast<std::size_t>(below - 1)];
    }
    return out;
}

struct PoState {
    Eigen::VectorXd alpha_beta;  // standardized scale
    Eigen::MatrixXd hessian;
    double ll = 0.0;
    double max_score = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

/// Newton ascent for the shared-slope model. Cutpoint gaps are carried as
/// logs so every iterate keeps alpha_1 < ... < alpha_J.
inline PoState fit_po_standardized(const PreparedOrdinal& prep) {
    const int J = static_cast<int>(prep.present_levels.size()) - 1;
    const detail::CumulativeLogit model{prep.x.z, prep.category, J, true};

    std::vector<double> cumulative(static_cast<std::size_t>(J), 0.0);
    for (int c : prep.category) {
        for (int j = c; j < J; ++j) cumulative[static_cast<std::size_t>(j)] += 1.0;
    }
    const double n = static_cast<double>(prep.category.size());
    Eigen::VectorXd theta(J + 1);
    double prev = 0.0;
    for (int j = 0; j < J; ++j) {
        const double alpha = logit(cumulative[static_cast<std::size_t>(j)] / n);
        theta(j) = j == 0 ? alpha : std::log(alpha - prev);
        prev = alpha;
    }
    theta(J) = 0.0;

    auto to_alpha_beta = [J](const Eigen::VectorXd& th) {
        Eigen::VectorXd ab(J + 1);
        ab(0) = th(0);
        for (int j = 1; j < J; ++j) ab(j) = ab(j - 1) + std::exp(th(j));
        ab(J) = th(J);
        return ab;
    };

    PoState state;
    Eigen::VectorXd grad;
    state.alpha_beta = to_alpha_beta(theta);
    state.ll = model.evaluate(state.alpha_beta, &grad, &state.hessian);
    state.trace.push_back(state.ll);
    for (state.iterations = 0; state.iterations < kMaxNewtonIterations; ++state.iterations) {
        if (grad.cwiseAbs().maxCoeff() < kScoreTolerance) break;
        // Newton direction in (alpha, beta), mapped through the inverse of
        // the gap-exponential Jacobian.
        const Eigen::VectorXd d_ab = newton_direction(state.hessian, grad);
        Eigen::VectorXd d_theta(J + 1);
        d_theta(0) = d_ab(0);
        for (int j = 1; j < J; ++j) d_theta(j) = (d_ab(j) - d_ab(j - 1)) / std::exp(theta(j));
        d_theta(J) = d_ab(J);

        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const Eigen::VectorXd trial_theta = theta + t * d_theta;
            const double trial = model.evaluate(to_alpha_beta(trial_theta), nullptr, nullptr);
            if (trial >= state.ll) {
                theta = trial_theta;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        state.alpha_beta = to_alpha_beta(theta);
        state.ll = model.evaluate(state.alpha_beta, &grad, &state.hessian);
        state.trace.push_back(state.ll);
    }
    state.max_score = grad.cwiseAbs().maxCoeff();
    return state;
}

inline OrdinalFit finish_po_fit(const PreparedOrdinal& prep, const PoState& state) {
    const int J = static_cast<int>(prep.present_levels.size()) - 1;
    const double m = prep.x.mean;
    const double s = prep.x.sd;

    OrdinalFit fit;
    fit.present_levels = prep.present_levels;
    fit.n_used = static_cast<int>(prep.category.size());
    fit.iterations = state.iterations;
    fit.log_likelihood = state.ll;
    fit.log_likelihood_trace = state.trace;
    fit.converged = state.max_score < 1e-6 && state.alpha_beta.allFinite();

    // Raw scale: alpha_raw = alpha_z + b_z m / s, beta = b_z / s.
    Eigen::MatrixXd to_raw = Eigen::MatrixXd::Identity(J + 1, J + 1);
    for (int j = 0; j < J; ++j) to_raw(j, J) = m / s;
    to_raw(J, J) = 1.0 / s;
    const Eigen::VectorXd raw = to_raw * state.alpha_beta;
    Eigen::MatrixXd cov = (-state.hessian).inverse();
    const Eigen::MatrixXd cov_raw = to_raw * cov * to_raw.transpose();

    std::vector<double> alpha(static_cast<std::size_t>(J)), se_alpha(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        alpha[static_cast<std::size_t>(j)] = raw(j);
        se_alpha[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, cov_raw(j, j)));
    }
    fit.cutpoints = expand_cutpoints(alpha, prep.present_levels);
    fit.se_cutpoints = expand_cutpoints(se_alpha, prep.present_levels);
    for (double& v : fit.se_cutpoints) {
        if (std::isinf(v)) v = std::numeric_limits<double>::quiet_NaN();
    }
    fit.beta = raw(J);
    fit.se_beta = std::sqrt(std::max(0.0, cov_raw(J, J)));
    const double se_z = std::sqrt(std::max(0.0, cov(J, J)));
    fit.wald_z = se_z > 0.0 ? state.alpha_beta(J) / se_z : 0.0;
    fit.p_value = std::clamp(std::erfc(std::abs(fit.wald_z) / std::sqrt(2.0)), 0.0, 1.0);
    if (!fit.converged) fit.p_value = std::isfinite(fit.p_value) ? fit.p_value : 1.0;
    return fit;
}

} // namespace detail

/// Shared-slope cumulative-logit fit with a two-sided Wald test on the slope.
/// Non-convergence is reported through `converged`, not thrown.
inline OrdinalFit fit_proportional_odds(std::span<const double> x, std::span<const int> levels,
                                        std::string factor_name = {}) {
    const auto prep = detail::prepare_ordinal(x, levels);
    OrdinalFit fit = detail::finish_po_fit(prep, detail::fit_po_standardized(prep));
    fit.factor_name = std::move(factor_name);
    return fit;
}

/// Pairwise deletion of missing cells before fitting.
inline OrdinalFit fit_proportional_odds(std::span<const std::optional<double>> x, std::span<const int> levels,
                                        std::string factor_name = {}) {
    if (x.size() != levels.size()) throw Error("ordinal fit: length mismatch");
    std::vector<double> xs;
    std::vector<int> ls;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i]) {
            xs.push_back(*x[i]);
            ls.push_back(levels[i]);
        }
    }
    if (xs.empty()) throw Error("ordinal fit: every value is missing");
    return fit_proportional_odds(std::span<const double>(xs), std::span<const int>(ls), std::move(factor_name));
}

inline std::array<double, kLevelCount> level_probabilities(const OrdinalFit& fit, double x) {
    if (!fit.converged) throw Error("level_probabilities: fit did not converge");
    std::array<double, kLevelCount> out{};
    double below = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double a = fit.cutpoints[static_cast<std::size_t>(k)];
        double cum;
        if (a == -std::numeric_limits<double>::infinity()) cum = 0.0;
        else if (a == std::numeric_limits<double>::infinity()) cum = 1.0;
        else cum = detail::sigmoid(a - fit.beta * x);
        cum = std::max(cum, below);
        out[static_cast<std::size_t>(k)] = cum - below;
        below = cum;
    }
    out[4] = 1.0 - below;
    return out;
}

/// Most probable level; ties go to the lower level.
inline int predict_level(const OrdinalFit& fit, double x) {
    const auto probs = level_probabilities(fit, x);
    int best = 0;
    for (int j = 1; j < kLevelCount; ++j) {
        if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(best)]) best = j;
    }
    return best + 1;
}

// ---------------------------------------------------------------------------
// Test of parallel lines
// ---------------------------------------------------------------------------

struct ParallelLinesResult {
    double lr_statistic = 0.0;
    int df = 3;
    double p_value = 1.0;
    double log_likelihood_parallel = 0.0;
    double log_likelihood_general = 0.0;
    bool general_converged = false;
    /// Per-cutpoint parameters of the general model on the raw scale, one
    /// entry per boundary between consecutive present levels.
    std::vector<double> general_cutpoints;
    std::vector<double> general_slopes;
    std::vector<int> present_levels;
    /// Separate binary fits of the four "level > k" sub-problems.
    std::array<BinaryFit, 4> sub_problems{};
};

inline double chi_square_survival(double statistic, int df) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

/// LR = 2 (llf_general - llf_parallel), chi-square with (present levels - 2)
/// degrees of freedom (3 when all five levels occur). The general model is
/// maximized starting from the shared-slope optimum, so LR >= 0.
inline ParallelLinesResult parallel_lines_test(std::span<const double> x, std::span<const int> levels) {
    const auto prep = detail::prepare_ordinal(x, levels);

    ParallelLinesResult result;
    for (int k = 1; k <= 4; ++k) {
        std::vector<int> y;
        y.reserve(levels.size());
        for (int l : levels) y.push_back(l > k ? 1 : 0);
        const std::string where = "parallel_lines_test: sub-problem k=" + std::to_string(k) + ": ";
        try {
            result.sub_problems[static_cast<std::size_t>(k - 1)] = fit_binary_logistic(x, y);
        } catch (const Error& e) {
            throw Error(where + e.what());
        }
        result.sub_problems[static_cast<std::size_t>(k - 1)].k = k;
        if (result.sub_problems[static_cast<std::size_t>(k - 1)].diverging) {
            throw Error(where + "complete separation");
        }
    }

    const auto po = detail::fit_po_standardized(prep);
    const int J = static_cast<int>(prep.present_levels.size()) - 1;
    const detail::CumulativeLogit general{prep.x.z, prep.category, J, false};

    Eigen::VectorXd params(2 * J);
    for (int j = 0; j < J; ++j) {
        params(j) = po.alpha_beta(j);
        params(J + j) = po.alpha_beta(J);
    }
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    double ll = general.evaluate(params, &grad, &hess);
    int it = 0;
    for (; it < kMaxNewtonIterations; ++it) {
        if (grad.cwiseAbs().maxCoeff() < kScoreTolerance) break;
        const Eigen::VectorXd step = detail::newton_direction(hess, grad);
        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const Eigen::VectorXd trial_params = params + t * step;
            const double trial = general.evaluate(trial_params, nullptr, nullptr);
            if (std::isfinite(trial) && trial >= ll) {
                params = trial_params;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        ll = general.evaluate(params, &grad, &hess);
    }

    result.present_levels = prep.present_levels;
    result.df = J - 1;
    result.log_likelihood_parallel = po.ll;
    result.log_likelihood_general = ll;
    result.general_converged = grad.cwiseAbs().maxCoeff() < 1e-6;
    const double m = prep.x.mean, s = prep.x.sd;
    for (int j = 0; j < J; ++j) {
        const double slope_z = params(J + j);
        result.general_cutpoints.push_back(params(j) + slope_z * m / s);
        result.general_slopes.push_back(slope_z / s);
    }
    double lr = 2.0 * (ll - po.ll);
    if (lr < 0.0 && lr > -1e-8) lr = 0.0;
    result.lr_statistic = lr;
    result.p_value = result.df > 0 ? chi_square_survival(lr, result.df) : 1.0;
    return result;
}

// ---------------------------------------------------------------------------
// Whole-table analysis
// ---------------------------------------------------------------------------

struct FactorAnalysis {
    OrdinalFit fit;
    std::optional<ParallelLinesResult> parallel;
    std::string parallel_error;
    bool significant = false;
};

struct SkippedFactor {
    std::string factor;
    std::string reason;
};

struct AnalysisReport {
    std::vector<FactorAnalysis> factors;  ///< ascending p-value, ties by name
    std::vector<SkippedFactor> skipped;
    double significance = kSignificance;

    const FactorAnalysis* find(std::string_view name) const {
        for (const auto& f : factors) {
            if (f.fit.factor_name == name) return &f;
        }
        return nullptr;
    }
};

inline void sort_report(AnalysisReport& report) {
    std::sort(report.factors.begin(), report.factors.end(), [](const FactorAnalysis& a, const FactorAnalysis& b) {
        if (a.fit.p_value != b.fit.p_value) return a.fit.p_value < b.fit.p_value;
        return a.fit.factor_name < b.fit.factor_name;
    });
}

/// One proportional-odds fit and parallel-lines test per factor column.
/// `levels[r]` is the contest level of table row r.
inline AnalysisReport analyze_all(const FactorTable& table, std::span<const int> levels,
                                  double significance = kSignificance) {
    if (table.rows() == 0 || table.cols() == 0) throw Error("analyze_all: empty factor table");
    if (levels.size() != table.rows()) throw Error("analyze_all: one level per table row required");
    AnalysisReport report;
    report.significance = significance;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const std::string& name = table.factor_names()[c];
        std::vector<double> xs;
        std::vector<int> ls;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (const auto& v = table.at(r, c)) {
                xs.push_back(*v);
                ls.push_back(levels[r]);
            }
        }
        if (xs.empty()) {
            report.skipped.push_back({name, "all cells missing"});
            continue;
        }
        FactorAnalysis entry;
        try {
            entry.fit = fit_proportional_odds(std::span<const double>(xs), std::span<const int>(ls), name);
        } catch (const Error& e) {
            report.skipped.push_back({name, e.what()});
            continue;
        }
        entry.significant = entry.fit.converged && entry.fit.p_value < significance;
        try {
            entry.parallel = parallel_lines_test(xs, ls);
        } catch (const Error& e) {
            entry.parallel_error = e.what();
        }
        report.factors.push_back(std::move(entry));
    }
    sort_report(report);
    return report;
}

inline AnalysisReport analyze_all(const FactorTable& table, const Corpus& corpus, double significance = kSignificance) {
    std::vector<int> levels;
    for (const auto& id : table.speech_ids()) {
        const SpeechRecord* s = corpus.find(id);
        if (!s) throw Error("analyze_all: speech '" + id + "' not in corpus");
        levels.push_back(s->level);
    }
    return analyze_all(table, levels, significance);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

} // namespace detail

inline nlohmann::ordered_json to_json(const AnalysisReport& report) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : report.factors) {
        nlohmann::ordered_json cut = nlohmann::ordered_json::array();
        for (double a : f.fit.cutpoints) cut.push_back(detail::finite_or_null(a));
        arr.push_back({{"factor", f.fit.factor_name},
                       {"beta", f.fit.beta},
                       {"cutpoints", cut},
                       {"p_value", f.fit.p_value},
                       {"significant", f.significant},
                       {"parallel_lines_p", f.parallel ? nlohmann::ordered_json(f.parallel->p_value)
                                                       : nlohmann::ordered_json(nullptr)},
                       {"n_used", f.fit.n_used},
                       {"converged", f.fit.converged}});
    }
    return arr;
}

/// Rebuilds a report from its JSON export. Null cutpoints before the first
/// finite one are -inf, after the last finite one +inf.
template <typename Json>
AnalysisReport analysis_from_json(const Json& arr) {
    if (!arr.is_array()) throw Error("analysis JSON: expected an array");
    AnalysisReport report;
    for (const auto& item : arr) {
        FactorAnalysis f;
        f.fit.factor_name = item.at("factor").template get<std::string>();
        f.fit.beta = item.at("beta").template get<double>();
        const auto& cut = item.at("cutpoints");
        if (!cut.is_array() || cut.size() != 4) throw Error("analysis JSON: cutpoints must have 4 entries");
        bool seen_finite = false;
        for (std::size_t k = 0; k < 4; ++k) {
            if (cut[k].is_null()) {
                f.fit.cutpoints[k] = seen_finite ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
            } else {
                f.fit.cutpoints[k] = cut[k].template get<double>();
                seen_finite = true;
            }
        }
        f.fit.p_value = item.at("p_value").template get<double>();
        f.significant = item.at("significant").template get<bool>();
        if (!item.at("parallel_lines_p").is_null()) {
            ParallelLinesResult pl;
            pl.p_value = item.at("parallel_lines_p").template get<double>();
            f.parallel = pl;
        }
        f.fit.n_used = item.at("n_used").template get<int>();
        f.fit.converged = item.at("converged").template get<bool>();
        report.factors.push_back(std::move(f));
    }
    sort_report(report);
    return report;
}

} // namespace speecheff

#endif // SPEECHEFF_ORDINAL_HPP
