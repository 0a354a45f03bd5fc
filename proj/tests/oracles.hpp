#ifndef SPEECHEFF_TESTS_ORACLES_HPP
#define SPEECHEFF_TESTS_ORACLES_HPP

// Reference computations that share no code with the library: direct
// likelihood sums, a Nelder-Mead optimizer, grid searches and brute-force
// scans. Slow and simple on purpose.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// log P under the shared-slope cumulative logit; `cut` holds one finite
/// cutpoint per boundary between the present levels (ascending order).
inline double po_loglik(const std::vector<double>& x, const std::vector<int>& category, const std::vector<double>& cut,
                        double beta) {
    const std::size_t J = cut.size();
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto c = static_cast<std::size_t>(category[i]);
        const double upper = c < J ? logistic(cut[c] - beta * x[i]) : 1.0;
        const double lower = c > 0 ? logistic(cut[c - 1] - beta * x[i]) : 0.0;
        ll += std::log(upper - lower);
    }
    return ll;
}

/// Same with a separate slope per boundary. Returns -inf when the implied
/// cumulative probabilities cross at some observation.
inline double general_loglik(const std::vector<double>& x, const std::vector<int>& category,
                             const std::vector<double>& cut, const std::vector<double>& slope) {
    const std::size_t J = cut.size();
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto c = static_cast<std::size_t>(category[i]);
        const double upper = c < J ? logistic(cut[c] - slope[c] * x[i]) : 1.0;
        const double lower = c > 0 ? logistic(cut[c - 1] - slope[c - 1] * x[i]) : 0.0;
        if (!(upper > lower)) return -std::numeric_limits<double>::infinity();
        ll += std::log(upper - lower);
    }
    return ll;
}

inline double binary_loglik(const std::vector<double>& x, const std::vector<int>& y, double b0, double b1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = logistic(b0 + b1 * x[i]);
        ll += y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return ll;
}

/// Maps levels 1..5 to consecutive category indices over the present levels.
inline std::vector<int> categories(const std::vector<int>& levels) {
    std::array<bool, 6> present{};
    for (int l : levels) present[static_cast<std::size_t>(l)] = true;
    std::array<int, 6> index{};
    int next = 0;
    for (int l = 1; l <= 5; ++l) {
        if (present[static_cast<std::size_t>(l)]) index[static_cast<std::size_t>(l)] = next++;
    }
    std::vector<int> out;
    for (int l : levels) out.push_back(index[static_cast<std::size_t>(l)]);
    return out;
}

inline int category_count(const std::vector<int>& levels) {
    std::array<bool, 6> present{};
    for (int l : levels) present[static_cast<std::size_t>(l)] = true;
    return static_cast<int>(std::count(present.begin(), present.end(), true));
}

/// Nelder-Mead minimization with restarts until the best value stalls.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> start, double scale = 0.5, int max_iter = 20000) {
    const std::size_t n = start.size();
    for (int restart = 0; restart < 12; ++restart) {
        std::vector<std::vector<double>> simplex(n + 1, start);
        for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += scale;
        std::vector<double> fv(n + 1);
        for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);
        const double before = f(start);
        for (int it = 0; it < max_iter; ++it) {
            std::vector<std::size_t> order(n + 1);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            std::vector<std::vector<double>> s2;
            std::vector<double> f2;
            for (auto o : order) {
                s2.push_back(simplex[o]);
                f2.push_back(fv[o]);
            }
            simplex = s2;
            fv = f2;
            if (std::abs(fv[n] - fv[0]) < 1e-15 * (1.0 + std::abs(fv[0]))) break;
            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);
            }
            auto along = [&](double t) {
                std::vector<double> p(n);
                for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + t * (simplex[n][d] - centroid[d]);
                return p;
            };
            const auto xr = along(-1.0);
            const double fr = f(xr);
            if (fr < fv[0]) {
                const auto xe = along(-2.0);
                const double fe = f(xe);
                if (fe < fr) {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
            } else if (fr < fv[n - 1]) {
                simplex[n] = xr;
                fv[n] = fr;
            } else {
                const auto xc = fr < fv[n] ? along(-0.5) : along(0.5);
                const double fc = f(xc);
                if (fc < std::min(fr, fv[n])) {
                    simplex[n] = xc;
                    fv[n] = fc;
                } else {
                    for (std::size_t i = 1; i <= n; ++i) {
                        for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                        fv[i] = f(simplex[i]);
                    }
                }
            }
        }
        const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
        start = simplex[static_cast<std::size_t>(best)];
        scale *= 0.2;
        if (std::abs(before - fv[static_cast<std::size_t>(best)]) < 1e-14 && restart > 2) break;
    }
    return start;
}

struct PoReference {
    std::vector<double> cutpoints;  ///< per present boundary
    double beta = 0.0;
    double log_likelihood = 0.0;
    double se_beta = 0.0;
    double p_value = 1.0;
};

/// Maximizes po_loglik by Nelder-Mead on (alpha_1, log gaps, beta), then a
/// central-difference Hessian of the negative log-likelihood in
/// (alpha, beta) for the Wald standard error.
inline PoReference fit_po_reference(const std::vector<double>& x, const std::vector<int>& levels) {
    const auto cat = categories(levels);
    const int J = category_count(levels) - 1;
    auto unpack = [J](const std::vector<double>& th, std::vector<double>& cut) {
        cut.assign(static_cast<std::size_t>(J), 0.0);
        cut[0] = th[0];
        for (int j = 1; j < J; ++j) cut[static_cast<std::size_t>(j)] = cut[static_cast<std::size_t>(j - 1)] + std::exp(th[static_cast<std::size_t>(j)]);
    };
    auto objective = [&](const std::vector<double>& th) {
        std::vector<double> cut;
        unpack(th, cut);
        const double ll = po_loglik(x, cat, cut, th[static_cast<std::size_t>(J)]);
        return std::isfinite(ll) ? -ll : 1e300;
    };
    std::vector<double> start(static_cast<std::size_t>(J) + 1, 0.0);
    start[0] = -1.0;
    const auto th = nelder_mead(objective, start);
    PoReference ref;
    unpack(th, ref.cutpoints);
    ref.beta = th[static_cast<std::size_t>(J)];
    ref.log_likelihood = -objective(th);

    // Hessian in (alpha_1..alpha_J, beta) by central differences.
    std::vector<double> p = ref.cutpoints;
    p.push_back(ref.beta);
    const std::size_t m = p.size();
    auto nll = [&](const std::vector<double>& q) {
        std::vector<double> cut(q.begin(), q.end() - 1);
        return -po_loglik(x, cat, cut, q.back());
    };
    const double h = 1e-4;
    std::vector<std::vector<double>> H(m, std::vector<double>(m));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            auto q = p;
            q[a] += h;
            q[b] += h;
            const double fpp = nll(q);
            q[b] -= 2 * h;
            const double fpm = nll(q);
            q[a] -= 2 * h;
            const double fmm = nll(q);
            q[b] += 2 * h;
            const double fmp = nll(q);
            H[a][b] = (fpp - fpm - fmp + fmm) / (4 * h * h);
        }
    }
    // Invert by Gauss-Jordan; only the beta diagonal is needed.
    std::vector<std::vector<double>> A = H, I(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) I[i][i] = 1.0;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        }
        std::swap(A[col], A[piv]);
        std::swap(I[col], I[piv]);
        const double d = A[col][col];
        for (std::size_t c = 0; c < m; ++c) {
            A[col][c] /= d;
            I[col][c] /= d;
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double factor = A[r][col];
            for (std::size_t c = 0; c < m; ++c) {
                A[r][c] -= factor * A[col][c];
                I[r][c] -= factor * I[col][c];
            }
        }
    }
    ref.se_beta = std::sqrt(I[m - 1][m - 1]);
    ref.p_value = std::erfc(std::abs(ref.beta / ref.se_beta) / std::sqrt(2.0));
    return ref;
}

/// Coarse-to-fine grid search for the binary logistic MLE.
inline std::pair<double, double> binary_grid_mle(const std::vector<double>& x, const std::vector<int>& y) {
    double b0 = 0.0, b1 = 0.0, span = 8.0;
    for (int round = 0; round < 40; ++round) {
        double best = -std::numeric_limits<double>::infinity();
        double nb0 = b0, nb1 = b1;
        for (int i = -20; i <= 20; ++i) {
            for (int j = -20; j <= 20; ++j) {
                const double c0 = b0 + span * i / 20.0, c1 = b1 + span * j / 20.0;
                const double ll = binary_loglik(x, y, c0, c1);
                if (ll > best) {
                    best = ll;
                    nb0 = c0;
                    nb1 = c1;
                }
            }
        }
        b0 = nb0;
        b1 = nb1;
        span *= 0.25;
    }
    return {b0, b1};
}

/// Direction sequence by a literal scan of the flip condition.
inline std::vector<int> spiral_directions_scan(const std::vector<double>& e, double threshold) {
    std::vector<int> p(e.size());
    if (e.empty()) return p;
    p[0] = e[0] >= 0.0 ? 1 : -1;
    for (std::size_t i = 1; i < e.size(); ++i) {
        const bool product_negative = e[i] * e[i - 1] < 0.0;
        const bool large_jump = std::fabs(e[i] - e[i - 1]) > threshold;
        p[i] = (product_negative && large_jump) ? -p[i - 1] : p[i - 1];
    }
    return p;
}

} // namespace oracle

#endif // SPEECHEFF_TESTS_ORACLES_HPP
