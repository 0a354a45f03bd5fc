#ifndef SPEECHEFF_EMBED_HPP
#define SPEECHEFF_EMBED_HPP

/**
 * @file embed.hpp
 *
 * Similarity map of speeches: the most significant factors are standardized
 * and embedded in 2-D with exact t-SNE; radar specs give each speech's
 * predicted level per selected factor.
 */

#include "common.hpp"
#include "factors.hpp"
#include "ordinal.hpp"

#include <Eigen/Dense>

#include <numeric>

namespace speecheff {

/// The k converged factors with the smallest p-values, ties by name.
inline std::vector<std::string> select_significant(const AnalysisReport& report, std::size_t k = 5) {
    std::vector<const FactorAnalysis*> usable;
    for (const auto& f : report.factors) {
        if (f.fit.converged && std::isfinite(f.fit.p_value)) usable.push_back(&f);
    }
    if (usable.size() < k) {
        throw Error("select_significant: only " + std::to_string(usable.size()) + " usable factors, need " +
                    std::to_string(k));
    }
    std::sort(usable.begin(), usable.end(), [](const FactorAnalysis* a, const FactorAnalysis* b) {
        if (a->fit.p_value != b->fit.p_value) return a->fit.p_value < b->fit.p_value;
        return a->fit.factor_name < b->fit.factor_name;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(usable[i]->fit.factor_name);
    return out;
}

struct StandardizeResult {
    Eigen::MatrixXd data;
    std::vector<std::size_t> kept_columns;
    std::vector<std::string> warnings;
};

/// Zero mean, unit population variance per column; constant columns are
/// dropped with a warning.
inline StandardizeResult standardize(const Eigen::MatrixXd& matrix) {
    StandardizeResult out;
    const auto n = static_cast<double>(matrix.rows());
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        const auto col = matrix.col(c);
        if ((col.array() == col(0)).all()) {
            out.warnings.push_back("column " + std::to_string(c) + " is constant and was dropped");
            continue;
        }
        out.kept_columns.push_back(static_cast<std::size_t>(c));
    }
    if (out.kept_columns.empty()) throw Error("standardize: every column is constant");
    out.data.resize(matrix.rows(), static_cast<Eigen::Index>(out.kept_columns.size()));
    for (std::size_t i = 0; i < out.kept_columns.size(); ++i) {
        const auto col = matrix.col(static_cast<Eigen::Index>(out.kept_columns[i]));
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / n);
        out.data.col(static_cast<Eigen::Index>(i)) = (col.array() - mean) / sd;
    }
    return out;
}

// ---------------------------------------------------------------------------
// t-SNE
// ---------------------------------------------------------------------------

struct TsneParams {
    double perplexity = 10.0;
    int iterations = 1000;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double learning_rate = 200.0;
    double momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double initial_sd = 1e-4;
    std::uint64_t seed = 42;
};

inline constexpr double kEntropyTolerance = 1e-5;
inline constexpr int kEntropySearchIterations = 50;

struct Affinities {
    Eigen::MatrixXd joint;           ///< symmetric P, zero diagonal, sums to 1
    std::vector<double> entropy_bits;  ///< entropy of each conditional P(.|i)
    double perplexity = 0.0;         ///< effective (possibly clamped) value
};

/// Calibrates per-point Gaussian precisions by bisection so that each
/// conditional distribution has entropy log2(perplexity) bits.
inline Affinities compute_affinities(const Eigen::MatrixXd& data, double perplexity) {
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) dist(i, j) = (data.row(i) - data.row(j)).squaredNorm();
    }

    Affinities out;
    out.perplexity = perplexity;
    out.entropy_bits.resize(static_cast<std::size_t>(n));
    const double target = std::log2(perplexity);
    Eigen::MatrixXd conditional = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double d_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) d_min = std::min(d_min, dist(i, j));
        }
        double beta = 1.0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        double entropy = 0.0;
        auto evaluate = [&](double b) {
            double sum = 0.0, weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto jj = static_cast<std::size_t>(j);
                if (j == i) {
                    row[jj] = 0.0;
                    continue;
                }
                const double shifted = dist(i, j) - d_min;
                row[jj] = std::exp(-b * shifted);
                sum += row[jj];
                weighted += shifted * row[jj];
            }
            for (double& v : row) v /= sum;
            return (b * weighted / sum + std::log(sum)) / std::log(2.0);
        };
        for (int it = 0; it < kEntropySearchIterations; ++it) {
            entropy = evaluate(beta);
            if (std::abs(entropy - target) < kEntropyTolerance) break;
            if (entropy > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = std::isinf(lo) ? beta * 0.5 : 0.5 * (beta + lo);
            }
        }
        // At the iteration cap beta has moved past the last evaluation.
        entropy = evaluate(beta);
        out.entropy_bits[static_cast<std::size_t>(i)] = entropy;
        for (Eigen::Index j = 0; j < n; ++j) conditional(i, j) = row[static_cast<std::size_t>(j)];
    }
    out.joint = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
    return out;
}

struct TsneResult {
    Eigen::MatrixXd coords;  ///< n x 2
    std::vector<double> kl_trace;
    double perplexity = 0.0;
    std::vector<std::string> warnings;
};

inline void validate_tsne_params(const TsneParams& p) {
    if (!(p.perplexity > 0.0)) throw Error("tsne: perplexity must be positive");
    if (p.iterations < 250) throw Error("tsne: iterations must be at least 250");
    if (!(p.learning_rate > 0.0)) throw Error("tsne: learning rate must be positive");
}

namespace detail {

inline TsneResult tsne_ordered(const Eigen::MatrixXd& data, const TsneParams& params, const Eigen::MatrixXd& init) {
    const Eigen::Index n = data.rows();
    TsneResult result;
    double perplexity = params.perplexity;
    const double limit = static_cast<double>(n - 1) / 3.0;
    if (!(perplexity < limit)) {
        perplexity = std::nextafter(limit, 0.0);
        result.warnings.push_back("perplexity clamped to " + format_double(perplexity) + " for " +
                                  std::to_string(n) + " points");
    }
    result.perplexity = perplexity;
    const Affinities aff = compute_affinities(data, perplexity);
    const Eigen::MatrixXd& P = aff.joint;

    Eigen::MatrixXd Y = init;
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
    Eigen::MatrixXd grad(n, 2);
    Eigen::MatrixXd num(n, n);
    result.kl_trace.reserve(static_cast<std::size_t>(params.iterations));

    for (int iter = 0; iter < params.iterations; ++iter) {
        const double exaggeration = iter < params.exaggeration_iterations ? params.early_exaggeration : 1.0;
        const double momentum = iter < params.momentum_switch ? params.momentum : params.final_momentum;

        double z_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double v = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
                num(i, j) = v;
                num(j, i) = v;
                z_sum += 2.0 * v;
            }
        }
        double kl = 0.0;
        grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = num(i, j) / z_sum;
                const double p = P(i, j);
                if (p > 0.0) kl += p * std::log(p / std::max(q, 1e-300));
                const double mult = (exaggeration * p - q) * num(i, j);
                grad(i, 0) += mult * (Y(i, 0) - Y(j, 0));
                grad(i, 1) += mult * (Y(i, 1) - Y(j, 1));
            }
        }
        grad *= 4.0;
        if (!std::isfinite(kl) || !grad.allFinite()) {
            throw Error("tsne: non-finite value encountered at iteration " + std::to_string(iter));
        }
        result.kl_trace.push_back(kl);

        for (Eigen::Index i = 0; i < n; ++i) {
            for (int d = 0; d < 2; ++d) {
                const bool same_sign = (grad(i, d) > 0.0) == (update(i, d) > 0.0);
                gains(i, d) = same_sign ? std::max(gains(i, d) * 0.8, 0.01) : gains(i, d) + 0.2;
                update(i, d) = momentum * update(i, d) - params.learning_rate * gains(i, d) * grad(i, d);
                Y(i, d) += update(i, d);
            }
        }
        const Eigen::RowVector2d mean = Y.colwise().mean();
        Y.rowwise() -= mean;
        if (!Y.allFinite()) throw Error("tsne: non-finite coordinates at iteration " + std::to_string(iter));
    }
    result.coords = std::move(Y);
    return result;
}

} // namespace detail

/// Exact t-SNE to two dimensions. When `row_keys` is given, initial
/// coordinates are seeded per key and the computation runs in key order, so
/// permuting the input rows permutes the output rows identically.
inline TsneResult tsne(const Eigen::MatrixXd& data, const TsneParams& params,
                       std::span<const std::string> row_keys = {}) {
    validate_tsne_params(params);
    const Eigen::Index n = data.rows();
    if (n < 3) throw Error("tsne: need at least 3 points");
    if (!data.allFinite()) throw Error("tsne: input contains non-finite entries");
    if (!row_keys.empty() && static_cast<Eigen::Index>(row_keys.size()) != n) {
        throw Error("tsne: one key per row required");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (!row_keys.empty()) {
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return row_keys[static_cast<std::size_t>(a)] < row_keys[static_cast<std::size_t>(b)];
        });
    }
    Eigen::MatrixXd sorted(n, data.cols());
    Eigen::MatrixXd init(n, 2);
    Rng shared(params.seed);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(r)];
        sorted.row(r) = data.row(src);
        if (row_keys.empty()) {
            init(r, 0) = shared.normal(0.0, params.initial_sd);
            init(r, 1) = shared.normal(0.0, params.initial_sd);
        } else {
            Rng keyed(mix_seed(params.seed, hash_string(row_keys[static_cast<std::size_t>(src)])));
            init(r, 0) = keyed.normal(0.0, params.initial_sd);
            init(r, 1) = keyed.normal(0.0, params.initial_sd);
        }
    }

    TsneResult result = detail::tsne_ordered(sorted, params, init);
    Eigen::MatrixXd coords(n, 2);
    for (Eigen::Index r = 0; r < n; ++r) coords.row(order[static_cast<std::size_t>(r)]) = result.coords.row(r);
    result.coords = std::move(coords);
    return result;
}

// ---------------------------------------------------------------------------
// Speech embedding and radar
// ---------------------------------------------------------------------------

struct EmbeddingResult {
    std::vector<std::string> speech_ids;
    std::vector<int> levels;
    Eigen::MatrixXd coords;
    std::vector<std::string> selected_factors;
    std::vector<double> kl_trace;
    std::vector<std::string> warnings;

    double kl_final() const { return kl_trace.empty() ? 0.0 : kl_trace.back(); }
};

/// Embeds every speech that has values for all selected factors.
inline EmbeddingResult embed_speeches(const FactorTable& table, const AnalysisReport& report, const Corpus& corpus,
                                      const TsneParams& params = {}) {
    EmbeddingResult out;
    out.selected_factors = select_significant(report, 5);
    std::vector<std::size_t> cols;
    for (const auto& name : out.selected_factors) {
        auto c = table.column_index(name);
        if (!c) throw Error("embed: factor '" + name + "' not in table");
        cols.push_back(*c);
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const bool complete = std::all_of(cols.begin(), cols.end(), [&](std::size_t c) { return table.at(r, c).has_value(); });
        if (complete) rows.push_back(r);
        else out.warnings.push_back("speech '" + table.speech_ids()[r] + "' has missing selected factors; not embedded");
    }
    Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string& id = table.speech_ids()[rows[i]];
        out.speech_ids.push_back(id);
        const SpeechRecord* s = corpus.find(id);
        out.levels.push_back(s ? s->level : 0);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *table.at(rows[i], cols[j]);
        }
    }
    auto standardized = standardize(data);
    for (auto& w : standardized.warnings) out.warnings.push_back(std::move(w));
    auto result = tsne(standardized.data, params, out.speech_ids);
    for (auto& w : result.warnings) out.warnings.push_back(std::move(w));
    out.coords = std::move(result.coords);
    out.kl_trace = std::move(result.kl_trace);
    return out;
}

/// Radar radius fraction for a level: 1..5 maps linearly onto 0.2..1.0.
inline double radar_radius(int level) { return 0.2 * level; }

struct RadarAxis {
    std::string factor;
    std::optional<double> value;
    std::optional<int> predicted_level;  ///< absent when the factor value is missing
};

struct RadarSpec {
    std::string speech_id;
    std::vector<RadarAxis> axes;
    int true_level = 0;
};

inline RadarSpec radar(std::string_view speech_id, const FactorTable& table, const AnalysisReport& report,
                       int true_level) {
    const auto row = table.row_index(speech_id);
    if (!row) throw Error("radar: unknown speech '" + std::string(speech_id) + "'");
    RadarSpec spec;
    spec.speech_id = std::string(speech_id);
    spec.true_level = true_level;
    for (const auto& name : select_significant(report, 5)) {
        const FactorAnalysis* analysis = report.find(name);
        RadarAxis axis;
        axis.factor = name;
        if (auto c = table.column_index(name)) {
            axis.value = table.at(*row, *c);
            if (axis.value) axis.predicted_level = predict_level(analysis->fit, *axis.value);
        }
        spec.axes.push_back(std::move(axis));
    }
    return spec;
}

inline RadarSpec radar(std::string_view speech_id, const FactorTable& table, const AnalysisReport& report,
                       const Corpus& corpus) {
    const SpeechRecord* s = corpus.find(speech_id);
    if (!s) throw Error("radar: unknown speech '" + std::string(speech_id) + "'");
    return radar(speech_id, table, report, s->level);
}

inline nlohmann::ordered_json to_json(const EmbeddingResult& e) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < e.speech_ids.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        points.push_back({{"id", e.speech_ids[i]}, {"x", e.coords(r, 0)}, {"y", e.coords(r, 1)}, {"level", e.levels[i]}});
    }
    nlohmann::ordered_json j;
    j["selected_factors"] = e.selected_factors;
    j["points"] = std::move(points);
    j["kl_final"] = e.kl_final();
    return j;
}

inline nlohmann::ordered_json to_json(const RadarSpec& spec) {
    nlohmann::ordered_json axes = nlohmann::ordered_json::array();
    nlohmann::ordered_json predicted = nlohmann::ordered_json::array();
    for (const auto& a : spec.axes) {
        predicted.push_back(a.predicted_level ? nlohmann::ordered_json(*a.predicted_level) : nlohmann::ordered_json(nullptr));
        axes.push_back({{"factor", a.factor},
                        {"value", a.value ? nlohmann::ordered_json(*a.value) : nlohmann::ordered_json(nullptr)},
                        {"predicted_level", a.predicted_level ? nlohmann::ordered_json(*a.predicted_level)
                                                              : nlohmann::ordered_json(nullptr)},
                        {"radius", a.predicted_level ? nlohmann::ordered_json(radar_radius(*a.predicted_level))
                                                     : nlohmann::ordered_json(nullptr)},
                        {"absent", !a.predicted_level.has_value()}});
    }
    nlohmann::ordered_json j;
    j["speech_id"] = spec.speech_id;
    j["axes"] = std::move(axes);
    j["predicted_levels"] = std::move(predicted);
    j["true_level"] = spec.true_level;
    return j;
}

} // namespace speecheff

#endif // SPEECHEFF_EMBED_HPP
