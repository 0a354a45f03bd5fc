#ifndef SPEECHEFF_LAYOUT_HPP
#define SPEECHEFF_LAYOUT_HPP

/**
 * @file layout.hpp
 *
 * Renderer-agnostic geometry for the speech views: emotion spiral, emotion
 * script, emotion type strip, per-level factor strip and level-probability
 * distribution. Every function is a pure function of its inputs.
 *
 * Spiral coordinates follow cx = r cos(theta), cy = r sin(theta). With the
 * y axis pointing down (SVG), increasing theta (p = +1) winds clockwise.
 */

#include "common.hpp"
#include "corpus.hpp"
#include "factors.hpp"
#include "ordinal.hpp"

#include <cstdio>
#include <numbers>

namespace speecheff {

// ---------------------------------------------------------------------------
// Palettes
// ---------------------------------------------------------------------------

/// Indexed by `index_of(Emotion)`.
inline constexpr std::array<std::string_view, kEmotionCount> kEmotionPalette = {
    "#d62728",  // angry
    "#8c564b",  // disgust
    "#9467bd",  // fear
    "#f2b701",  // happy
    "#1f77b4",  // sad
    "#ff7f0e",  // surprise
    "#9e9e9e",  // neutral
};

/// Light to dark; level 5 (final) is darkest.
inline constexpr std::array<std::string_view, kLevelCount> kLevelPalette = {
    "#c6dbef", "#9ecae1", "#6baed6", "#3182bd", "#08519c"};

inline std::string_view emotion_color(Emotion e) { return kEmotionPalette[static_cast<std::size_t>(index_of(e))]; }
inline std::string_view level_color(int level) { return kLevelPalette[static_cast<std::size_t>(level - 1)]; }

// ---------------------------------------------------------------------------
// Interval accumulation
// ---------------------------------------------------------------------------

struct IntervalSummary {
    std::size_t index = 0;
    double start_s = 0.0;
    double accumulated = 0.0;  ///< E_i: sum of facial valence samples
    Emotion dominant = Emotion::neutral;
    double mean_arousal = 0.0;
    double mean_confidence = 0.0;
    std::size_t samples = 0;
};

struct EmotionAccumulator {
    double interval_s = 5.0;
    std::vector<IntervalSummary> intervals;
};

/// Splits the speech into [5i, 5i + 5) second intervals. The dominant label
/// is the mode (ties: label seen first in the interval). An empty interval
/// has E_i = 0, zero means, and inherits the previous dominant label.
inline EmotionAccumulator accumulate_intervals(const SpeechRecord& speech, double interval_s = 5.0) {
    if (!(interval_s > 0.0)) throw Error("accumulate_intervals: interval must be positive");
    const FacialSeries& f = speech.facial;
    if (f.size() == 0) throw Error("accumulate_intervals: empty facial series");
    const auto count = static_cast<std::size_t>(std::ceil(speech.duration_s / interval_s));
    if (count == 0) throw Error("accumulate_intervals: zero intervals");

    EmotionAccumulator acc;
    acc.interval_s = interval_s;
    acc.intervals.resize(count);
    std::vector<std::array<std::size_t, kEmotionCount>> counts(count);
    std::vector<std::array<std::size_t, kEmotionCount>> first_seen(count);
    for (auto& fs : first_seen) fs.fill(std::numeric_limits<std::size_t>::max());

    for (std::size_t k = 0; k < f.size(); ++k) {
        const auto i = std::min(count - 1, static_cast<std::size_t>(std::floor(f.time_of(k) / interval_s)));
        auto& item = acc.intervals[i];
        item.accumulated += f.valence[k];
        item.mean_arousal += f.arousal[k];
        item.mean_confidence += f.confidence[k];
        ++item.samples;
        const auto e = static_cast<std::size_t>(index_of(f.emotion[k]));
        ++counts[i][e];
        first_seen[i][e] = std::min(first_seen[i][e], k);
    }
    Emotion previous = Emotion::neutral;
    for (std::size_t i = 0; i < count; ++i) {
        auto& item = acc.intervals[i];
        item.index = i;
        item.start_s = static_cast<double>(i) * interval_s;
        if (item.samples == 0) {
            item.dominant = previous;
            continue;
        }
        item.mean_arousal /= static_cast<double>(item.samples);
        item.mean_confidence /= static_cast<double>(item.samples);
        std::size_t best = 0;
        for (std::size_t e = 1; e < kEmotionCount; ++e) {
            if (counts[i][e] > counts[i][best] || (counts[i][e] == counts[i][best] && first_seen[i][e] < first_seen[i][best])) {
                best = e;
            }
        }
        item.dominant = kEmotions[best];
        previous = item.dominant;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Emotion spiral
// ---------------------------------------------------------------------------

struct SpiralParams {
    double delta_r = 0.04;
    double interval_s = 5.0;
    double flip_threshold = 10.0;
    double theta_0 = 0.0;
    std::optional<double> r_0;  ///< defaults to delta_r
    double circle_r_min = 0.01;
    double circle_r_max = 0.04;

    double start_radius() const { return r_0.value_or(delta_r); }
};

struct SpiralCircle {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double polar_radius = 0.0;
    double theta = 0.0;
    int direction = 1;
    std::string color;
    double opacity = 0.0;
    std::size_t interval_index = 0;
    double start_s = 0.0;
    Emotion emotion = Emotion::neutral;
};

struct SpiralLayout {
    std::vector<SpiralCircle> circles;
    std::vector<std::size_t> turn_points;
    SpiralParams params;
};

/// Winding direction per interval: p_0 from the sign of E_0, then p flips
/// when consecutive sums change sign and differ by more than the threshold.
inline std::vector<int> spiral_directions(std::span<const double> accumulated, double flip_threshold) {
    std::vector<int> p;
    p.reserve(accumulated.size());
    for (std::size_t i = 0; i < accumulated.size(); ++i) {
        if (i == 0) {
            p.push_back(accumulated[0] >= 0.0 ? 1 : -1);
            continue;
        }
        const double cur = accumulated[i], prev = accumulated[i - 1];
        const bool flip = cur * prev < 0.0 && std::abs(cur - prev) > flip_threshold;
        p.push_back(flip ? -p.back() : p.back());
    }
    return p;
}

inline SpiralLayout spiral_layout(const EmotionAccumulator& acc, const SpiralParams& params = {}) {
    if (acc.intervals.empty()) throw Error("spiral_layout: no intervals");
    std::vector<double> sums;
    for (const auto& item : acc.intervals) sums.push_back(item.accumulated);
    const auto p = spiral_directions(sums, params.flip_threshold);

    SpiralLayout layout;
    layout.params = params;
    double theta = params.theta_0;
    for (std::size_t n = 0; n < acc.intervals.size(); ++n) {
        const auto& item = acc.intervals[n];
        if (n > 0) {
            theta += 2.0 * std::numbers::pi * params.delta_r * p[n];
            if (p[n] != p[n - 1]) layout.turn_points.push_back(n);
        }
        SpiralCircle c;
        c.polar_radius = params.start_radius() + static_cast<double>(n) * params.delta_r;
        c.theta = theta;
        c.cx = c.polar_radius * std::cos(theta);
        c.cy = c.polar_radius * std::sin(theta);
        c.radius = params.circle_r_min + std::clamp(item.mean_arousal, 0.0, 1.0) * (params.circle_r_max - params.circle_r_min);
        c.direction = p[n];
        c.emotion = item.dominant;
        c.color = std::string(emotion_color(item.dominant));
        c.opacity = std::clamp(item.mean_confidence, 0.0, 1.0);
        c.interval_index = n;
        c.start_s = item.start_s;
        layout.circles.push_back(std::move(c));
    }
    return layout;
}

// ---------------------------------------------------------------------------
// Emotion script
// ---------------------------------------------------------------------------

struct ScriptParams {
    double font_min = 12.0;
    double font_max = 32.0;
    double base_gap = 6.0;
    double gap_per_second = 24.0;  ///< extra gap per second of pause
    double max_pause_s = 2.0;
    double tracking_scale = 20.0;  ///< tracking per (seconds per character)
    double tracking_max = 8.0;
    double char_width_em = 0.6;
    double line_height = 1.5;  ///< in units of font_max
    double max_width = 900.0;
};

struct ScriptGlyph {
    std::string text;
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double font_size = 0.0;
    double tracking = 0.0;
    double shape_weight = 0.0;
    double gap_after = 0.0;
    double valence = 0.0;
    double arousal = 0.0;
    std::string color;
    std::size_t line = 0;
    double start_s = 0.0;
};

struct ScriptLayout {
    std::vector<ScriptGlyph> glyphs;
    double width = 0.0;
    double height = 0.0;
    ScriptParams params;
};

/// HSL color: hue 240 (valence -1) to 0 (valence +1), saturation 70%,
/// lightness 50% - 15% * arousal.
inline std::string script_color(double valence, double arousal) {
    const double hue = 240.0 * (1.0 - (std::clamp(valence, -1.0, 1.0) + 1.0) / 2.0);
    const double lightness = 50.0 - 15.0 * std::clamp(arousal, 0.0, 1.0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "hsl(%.1f,70%%,%.1f%%)", hue, lightness);
    return buf;
}

namespace detail {

/// Enclosing sentence of the word midpoint, otherwise the nearest one.
inline std::size_t sentence_for_word(const std::vector<SentenceRecord>& sentences, const WordRecord& w) {
    const double mid = 0.5 * (w.start_s + w.end_s);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& s = sentences[i];
        const double dist = mid < s.start_s ? s.start_s - mid : (mid >= s.end_s ? mid - s.end_s : 0.0);
        if (dist < best_dist) {
            best_dist = dist;
            best = i;
        }
        if (dist == 0.0) break;
    }
    return best;
}

} // namespace detail

inline ScriptLayout script_layout(const SpeechRecord& speech, const ScriptParams& params = {}) {
    if (speech.words.empty()) throw Error("script_layout: empty word list");
    if (speech.sentences.empty()) throw Error("script_layout: no sentences");
    ScriptLayout layout;
    layout.params = params;
    double x = 0.0;
    std::size_t line = 0;
    const double line_step = params.line_height * params.font_max;
    for (std::size_t i = 0; i < speech.words.size(); ++i) {
        const WordRecord& w = speech.words[i];
        const SentenceRecord& sen = speech.sentences[detail::sentence_for_word(speech.sentences, w)];
        ScriptGlyph g;
        g.text = w.word;
        g.start_s = w.start_s;
        g.arousal = std::clamp(std::max(sen.text_arousal, sen.vocal_arousal), 0.0, 1.0);
        g.valence = 0.5 * (sen.text_valence + sen.vocal_valence);
        g.font_size = params.font_min + g.arousal * (params.font_max - params.font_min);
        g.shape_weight = g.arousal;
        const double chars = static_cast<double>(std::max<std::size_t>(1, w.word.size()));
        g.tracking = std::clamp(params.tracking_scale * (w.end_s - w.start_s) / chars, 0.0, params.tracking_max);
        g.color = script_color(g.valence, g.arousal);
        g.width = chars * params.char_width_em * g.font_size + g.tracking * (chars - 1.0);
        const double pause = i + 1 < speech.words.size() ? std::max(0.0, speech.words[i + 1].start_s - w.end_s) : 0.0;
        g.gap_after = params.base_gap + params.gap_per_second * std::min(pause, params.max_pause_s);

        if (x > 0.0 && x + g.width > params.max_width) {
            ++line;
            x = 0.0;
        }
        g.x = x;
        g.line = line;
        g.y = static_cast<double>(line + 1) * line_step;
        layout.width = std::max(layout.width, x + g.width);
        x += g.width + g.gap_after;
        layout.glyphs.push_back(std::move(g));
    }
    layout.height = static_cast<double>(line + 1) * line_step + 0.5 * params.font_max;
    return layout;
}

// ---------------------------------------------------------------------------
// Emotion type
// ---------------------------------------------------------------------------

inline constexpr std::size_t kTypeSamples = 200;

// Sample times within this many frames of a midpoint count as exact halves.
inline constexpr double kTieTolerance = 1e-9;

struct TypeParams {
    double width = 800.0;
    double height = 200.0;
    double max_bar_fraction = 0.25;  ///< bar height at arousal 1, as a fraction of height
};

struct TypeRect {
    double x = 0.0;
    double y_center = 0.0;
    double width = 0.0;
    double height = 0.0;
    Emotion emotion = Emotion::neutral;
    std::string color;
    std::size_t sample_index = 0;
};

struct TypeLayout {
    std::vector<TypeRect> rects;
    std::vector<std::pair<double, double>> polyline;
    TypeParams params;
};

/// 200 samples at the centers of equal time slots; each takes the nearest
/// facial frame (exact halves go to the earlier frame).
inline TypeLayout type_layout(const SpeechRecord& speech, const TypeParams& params = {}) {
    const FacialSeries& f = speech.facial;
    if (f.size() == 0) throw Error("type_layout: empty facial series");
    TypeLayout layout;
    layout.params = params;
    const double slot_w = params.width / static_cast<double>(kTypeSamples);
    const double bar_max = params.max_bar_fraction * params.height;
    const double pad = 0.5 * bar_max;
    const double band = params.height - 2.0 * pad;
    for (std::size_t j = 0; j < kTypeSamples; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * speech.duration_s / static_cast<double>(kTypeSamples);
        const double pos = std::ceil(t * f.fps - 0.5 - kTieTolerance);
        const auto k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(f.size() - 1)));
        TypeRect r;
        r.x = static_cast<double>(j) * slot_w;
        r.width = slot_w;
        r.y_center = pad + (1.0 - std::clamp(f.valence[k], -1.0, 1.0)) / 2.0 * band;
        r.height = std::clamp(f.arousal[k], 0.0, 1.0) * bar_max;
        r.emotion = f.emotion[k];
        r.color = std::string(emotion_color(r.emotion));
        r.sample_index = k;
        layout.polyline.emplace_back(r.x + 0.5 * slot_w, r.y_center);
        layout.rects.push_back(std::move(r));
    }
    return layout;
}

// ---------------------------------------------------------------------------
// Factor strip
// ---------------------------------------------------------------------------

/// Linear-interpolation percentile of sorted values, q in [0, 1].
inline double percentile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("percentile: empty input");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct StripDot {
    std::string speech_id;
    double x = 0.0;
};

struct StripRow {
    int level = 0;
    std::vector<StripDot> dots;
    double x25 = 0.0;
    double median_x = 0.0;
    double x75 = 0.0;
    std::string color;
};

struct StripLayout {
    std::string factor;
    double domain_min = 0.0;
    double domain_max = 0.0;
    std::vector<StripRow> rows;  ///< ascending level, levels with data only
};

inline StripLayout factor_strip_layout(const FactorTable& table, std::string_view factor, std::span<const int> levels) {
    const auto col = table.column_index(factor);
    if (!col) throw Error("factor_strip_layout: unknown factor '" + std::string(factor) + "'");
    if (levels.size() != table.rows()) throw Error("factor_strip_layout: one level per row required");
    StripLayout layout;
    layout.factor = std::string(factor);
    std::array<StripRow, kLevelCount> rows;
    bool any = false;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& v = table.at(r, *col);
        if (!v) continue;
        const int level = levels[r];
        if (level < 1 || level > kLevelCount) throw Error("factor_strip_layout: level out of range");
        rows[static_cast<std::size_t>(level - 1)].dots.push_back({table.speech_ids()[r], *v});
        layout.domain_min = any ? std::min(layout.domain_min, *v) : *v;
        layout.domain_max = any ? std::max(layout.domain_max, *v) : *v;
        any = true;
    }
    if (!any) throw Error("factor_strip_layout: factor '" + std::string(factor) + "' has no values");
    for (int level = 1; level <= kLevelCount; ++level) {
        StripRow& row = rows[static_cast<std::size_t>(level - 1)];
        if (row.dots.empty()) continue;
        std::vector<double> values;
        for (const auto& d : row.dots) values.push_back(d.x);
        std::sort(values.begin(), values.end());
        row.level = level;
        row.x25 = percentile(values, 0.25);
        row.median_x = percentile(values, 0.5);
        row.x75 = percentile(values, 0.75);
        row.color = std::string(level_color(level));
        layout.rows.push_back(std::move(row));
    }
    return layout;
}

inline StripLayout factor_strip_layout(const FactorTable& table, std::string_view factor, const Corpus& corpus) {
    std::vector<int> levels;
    for (const auto& id : table.speech_ids()) {
        const SpeechRecord* s = corpus.find(id);
        if (!s) throw Error("factor_strip_layout: speech '" + id + "' not in corpus");
        levels.push_back(s->level);
    }
    return factor_strip_layout(table, factor, levels);
}

// ---------------------------------------------------------------------------
// Level-probability distribution
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDistributionSamples = 101;

struct DistributionLayout {
    std::string factor;
    std::vector<double> xs;
    std::array<std::vector<double>, kLevelCount> curves;  ///< curves[level - 1][sample]
    std::array<std::string, kLevelCount> colors;
};

inline DistributionLayout distribution_layout(const OrdinalFit& fit, double domain_min, double domain_max) {
    if (!fit.converged) throw Error("distribution_layout: fit did not converge");
    if (!(domain_min < domain_max)) throw Error("distribution_layout: domain must satisfy min < max");
    DistributionLayout layout;
    layout.factor = fit.factor_name;
    for (int l = 0; l < kLevelCount; ++l) layout.colors[static_cast<std::size_t>(l)] = std::string(level_color(l + 1));
    for (std::size_t i = 0; i < kDistributionSamples; ++i) {
        const double x = domain_min + (domain_max - domain_min) * static_cast<double>(i) /
                                          static_cast<double>(kDistributionSamples - 1);
        layout.xs.push_back(x);
        const auto probs = level_probabilities(fit, x);
        for (std::size_t l = 0; l < kLevelCount; ++l) layout.curves[l].push_back(probs[l]);
    }
    return layout;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const EmotionAccumulator& acc) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& i : acc.intervals) {
        arr.push_back({{"index", i.index},
                       {"start_s", i.start_s},
                       {"accumulated", i.accumulated},
                       {"dominant", std::string(to_string(i.dominant))},
                       {"mean_arousal", i.mean_arousal},
                       {"mean_confidence", i.mean_confidence},
                       {"samples", i.samples}});
    }
    return {{"interval_s", acc.interval_s}, {"intervals", arr}};
}

inline nlohmann::ordered_json to_json(const SpiralLayout& s) {
    nlohmann::ordered_json circles = nlohmann::ordered_json::array();
    for (const auto& c : s.circles) {
        circles.push_back({{"cx", c.cx},
                           {"cy", c.cy},
                           {"radius", c.radius},
                           {"polar_radius", c.polar_radius},
                           {"theta", c.theta},
                           {"direction", c.direction},
                           {"color", c.color},
                           {"opacity", c.opacity},
                           {"emotion", std::string(to_string(c.emotion))},
                           {"interval_index", c.interval_index},
                           {"start_s", c.start_s}});
    }
    nlohmann::ordered_json params = {{"delta_r", s.params.delta_r},
                                     {"interval_s", s.params.interval_s},
                                     {"flip_threshold", s.params.flip_threshold},
                                     {"theta_0", s.params.theta_0},
                                     {"r_0", s.params.start_radius()}};
    return {{"circles", circles}, {"turn_points", s.turn_points}, {"params", params}};
}

inline nlohmann::ordered_json to_json(const ScriptLayout& s) {
    nlohmann::ordered_json glyphs = nlohmann::ordered_json::array();
    for (const auto& g : s.glyphs) {
        glyphs.push_back({{"text", g.text},
                          {"x", g.x},
                          {"y", g.y},
                          {"width", g.width},
                          {"font_size", g.font_size},
                          {"tracking", g.tracking},
                          {"shape_weight", g.shape_weight},
                          {"gap_after", g.gap_after},
                          {"color", g.color},
                          {"line", g.line},
                          {"start_s", g.start_s}});
    }
    return {{"glyphs", glyphs},
            {"width", s.width},
            {"height", s.height},
            {"font_min", s.params.font_min},
            {"font_max", s.params.font_max}};
}

inline nlohmann::ordered_json to_json(const TypeLayout& t) {
    nlohmann::ordered_json rects = nlohmann::ordered_json::array();
    for (const auto& r : t.rects) {
        rects.push_back({{"x", r.x},
                         {"y_center", r.y_center},
                         {"width", r.width},
                         {"height", r.height},
                         {"emotion", std::string(to_string(r.emotion))},
                         {"color", r.color}});
    }
    nlohmann::ordered_json line = nlohmann::ordered_json::array();
    for (const auto& [x, y] : t.polyline) line.push_back({x, y});
    return {{"rects", rects}, {"polyline", line}, {"width", t.params.width}, {"height", t.params.height}};
}

inline nlohmann::ordered_json to_json(const StripLayout& s) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : s.rows) {
        nlohmann::ordered_json dots = nlohmann::ordered_json::array();
        for (const auto& d : r.dots) dots.push_back({{"speech_id", d.speech_id}, {"x", d.x}});
        rows.push_back({{"level", r.level},
                        {"dots", dots},
                        {"iqr_box", {{"x25", r.x25}, {"x75", r.x75}}},
                        {"median_x", r.median_x},
                        {"color", r.color}});
    }
    return {{"factor", s.factor}, {"domain", {s.domain_min, s.domain_max}}, {"rows", rows}};
}

inline nlohmann::ordered_json to_json(const DistributionLayout& d) {
    nlohmann::ordered_json curves = nlohmann::ordered_json::array();
    for (int l = 0; l < kLevelCount; ++l) {
        curves.push_back({{"level", l + 1},
                          {"color", d.colors[static_cast<std::size_t>(l)]},
                          {"y", d.curves[static_cast<std::size_t>(l)]}});
    }
    return {{"factor", d.factor}, {"x", d.xs}, {"curves", curves}};
}

} // namespace speecheff

#endif // SPEECHEFF_LAYOUT_HPP
