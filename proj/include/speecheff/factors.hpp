#ifndef SPEECHEFF_FACTORS_HPP
#define SPEECHEFF_FACTORS_HPP

/**
 * @file factors.hpp
 *
 * Per-speech emotional and non-emotional factors: averages, volatilities,
 * emotion diversity, final-segment values, cross-modal coherence, emotion
 * type ratios, pauses and vocabulary level.
 */

#include "common.hpp"
#include "corpus.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <iomanip>
#include <numeric>
#include <span>

namespace speecheff {

/// A valence or arousal time series from one modality.
struct Series {
    std::vector<double> values;
    Modality modality = Modality::facial;
    Kind kind = Kind::valence;
};

inline double average(std::span<const double> series) {
    if (series.empty()) throw Error("average: empty series");
    return std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
}

/// Norm of the first-difference vector of the min-max normalized series.
inline double volatility(std::span<const double> series) {
    if (series.size() < 2) throw Error("volatility: series needs at least 2 samples");
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (range == 0.0) return 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double d = (series[t] - lo) / range - (series[t - 1] - lo) / range;
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq);
}

/// Counts of each emotion label, indexed by `index_of(Emotion)`.
inline std::array<std::size_t, kEmotionCount> emotion_counts(std::span<const Emotion> emotions) {
    std::array<std::size_t, kEmotionCount> counts{};
    for (Emotion e : emotions) ++counts[index_of(e)];
    return counts;
}

/// Sum of r ln r over the emotion types present. Always <= 0; the sign is
/// kept as written in the formula, callers may display the magnitude.
inline double diversity(std::span<const Emotion> emotions) {
    if (emotions.empty()) throw Error("diversity: empty label list");
    const auto counts = emotion_counts(emotions);
    const double n = static_cast<double>(emotions.size());
    double total = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double r = static_cast<double>(c) / n;
        total += r * std::log(r);
    }
    return total;
}

inline constexpr double kCoherenceEpsilon = 1e-6;

struct CoherenceResult {
    double value = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

/// Mean over sentences of the coefficient of variation (population std over
/// the textual, vocal and facial values divided by their mean). Sentences
/// whose mean is below kCoherenceEpsilon in magnitude are excluded.
inline CoherenceResult coherence_detail(const AlignedTriples& aligned, Kind kind) {
    CoherenceResult out;
    double total = 0.0;
    for (const auto& entry : aligned.entries) {
        const ModalityTriple& t = kind == Kind::valence ? entry.valence : entry.arousal;
        const double mean = (t.textual + t.vocal + t.facial) / 3.0;
        if (std::abs(mean) < kCoherenceEpsilon) {
            ++out.excluded;
            continue;
        }
        const double var = ((t.textual - mean) * (t.textual - mean) + (t.vocal - mean) * (t.vocal - mean) +
                            (t.facial - mean) * (t.facial - mean)) /
                           3.0;
        total += std::sqrt(var) / mean;
        ++out.used;
    }
    if (out.used == 0) throw Error("coherence: no valid triples");
    out.value = total / static_cast<double>(out.used);
    return out;
}

inline double coherence(const AlignedTriples& aligned, Kind kind) { return coherence_detail(aligned, kind).value; }

enum class FinalMode { literal, window_mean };

/// Sum over the last round(0.2 T) samples, divided by T (literal) or by the
/// window length (window_mean).
inline double final_segment(std::span<const double> series, FinalMode mode = FinalMode::literal) {
    const std::size_t n = series.size();
    if (n < 5) throw Error("final_segment: series needs at least 5 samples");
    const auto window = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    const double sum = std::accumulate(series.end() - static_cast<std::ptrdiff_t>(window), series.end(), 0.0);
    return mode == FinalMode::literal ? sum / static_cast<double>(n) : sum / static_cast<double>(window);
}

inline double emotion_ratio(std::span<const Emotion> emotions, Emotion target) {
    if (emotions.empty()) throw Error("emotion_ratio: empty label list");
    const auto hits = std::count(emotions.begin(), emotions.end(), target);
    return static_cast<double>(hits) / static_cast<double>(emotions.size());
}

inline double emotion_ratio(std::span<const Emotion> emotions, std::string_view target) {
    auto e = parse_emotion(target);
    if (!e) throw Error("emotion_ratio: unknown label '" + std::string(target) + "'");
    return emotion_ratio(emotions, *e);
}

struct PauseStats {
    double mean_pause_s = 0.0;
    double total_pause_s = 0.0;
    double words_per_minute = 0.0;
};

inline PauseStats pause_stats(std::span<const WordRecord> words, double duration_s) {
    if (words.size() < 2) throw Error("pause_stats: need at least 2 words");
    if (!(duration_s > 0.0)) throw Error("pause_stats: duration must be positive");
    PauseStats out;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        out.total_pause_s += std::max(0.0, words[i + 1].start_s - words[i].end_s);
    }
    out.mean_pause_s = out.total_pause_s / static_cast<double>(words.size() - 1);
    out.words_per_minute = 60.0 * static_cast<double>(words.size()) / duration_s;
    return out;
}

// ---------------------------------------------------------------------------
// Dale-Chall vocabulary level
// ---------------------------------------------------------------------------

struct TextStats {
    std::size_t words = 0;
    std::size_t sentences = 0;
    std::size_t difficult = 0;
};

/// Sentences end at . ! or ?; words are runs of letters, digits and
/// apostrophes. A word is difficult when its lowercase form is not in
/// `familiar`; numerals are always familiar.
inline TextStats text_stats(std::string_view script, const std::set<std::string>& familiar) {
    TextStats stats;
    std::size_t words_in_sentence = 0;
    std::string word;
    auto flush_word = [&] {
        if (word.empty()) return;
        while (!word.empty() && word.back() == '\'') word.pop_back();
        while (!word.empty() && word.front() == '\'') word.erase(0, 1);
        if (!word.empty()) {
            ++stats.words;
            ++words_in_sentence;
            const bool numeral = std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); });
            if (!numeral && !familiar.contains(word)) ++stats.difficult;
        }
        word.clear();
    };
    auto flush_sentence = [&] {
        flush_word();
        if (words_in_sentence > 0) ++stats.sentences;
        words_in_sentence = 0;
    };
    for (char ch : script) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '\'') {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '.' || c == '!' || c == '?') {
            flush_sentence();
        } else {
            flush_word();
        }
    }
    flush_sentence();
    return stats;
}

inline double dale_chall_score(double percent_difficult, double avg_sentence_length) {
    double score = 0.1579 * percent_difficult + 0.0496 * avg_sentence_length;
    if (percent_difficult > 5.0) score += 3.6365;
    return score;
}

inline double vocabulary_level(std::string_view script, const std::set<std::string>& familiar) {
    const TextStats stats = text_stats(script, familiar);
    if (stats.words == 0 || stats.sentences == 0) throw Error("vocabulary_level: script has no words");
    const double pdw = 100.0 * static_cast<double>(stats.difficult) / static_cast<double>(stats.words);
    const double asl = static_cast<double>(stats.words) / static_cast<double>(stats.sentences);
    return dale_chall_score(pdw, asl);
}

// ---------------------------------------------------------------------------
// Factor table
// ---------------------------------------------------------------------------

namespace factor_names {

inline std::string average(Modality m, Kind k) {
    return std::string(to_string(m)) + "_" + std::string(to_string(k)) + "_average";
}
inline std::string volatility(Modality m, Kind k) {
    return std::string(to_string(m)) + "_" + std::string(to_string(k)) + "_volatility";
}
inline std::string ratio(Emotion e) { return "facial_" + std::string(to_string(e)) + "_ratio"; }

inline const std::string diversity = "facial_diversity";
inline const std::string final_arousal = "facial_arousal_final";
inline const std::string final_valence = "facial_valence_final";
inline const std::string coherence_arousal = "arousal_coherence";
inline const std::string coherence_valence = "valence_coherence";
inline const std::string pauses = "pauses";
inline const std::string vocabulary = "vocabulary";

} // namespace factor_names

/// Ratio columns follow the emotion order used in the factor summary table.
inline constexpr std::array<Emotion, kEmotionCount> kRatioOrder = {
    Emotion::happy, Emotion::sad, Emotion::fear, Emotion::angry, Emotion::surprise, Emotion::disgust, Emotion::neutral};

/// Fixed column order of the factor table.
inline const std::vector<std::string>& factor_columns() {
    static const std::vector<std::string> columns = [] {
        std::vector<std::string> c;
        for (Modality m : {Modality::facial, Modality::textual, Modality::vocal}) {
            for (Kind k : {Kind::arousal, Kind::valence}) c.push_back(factor_names::average(m, k));
        }
        for (Modality m : {Modality::facial, Modality::textual, Modality::vocal}) {
            for (Kind k : {Kind::arousal, Kind::valence}) c.push_back(factor_names::volatility(m, k));
        }
        c.push_back(factor_names::diversity);
        c.push_back(factor_names::final_arousal);
        c.push_back(factor_names::final_valence);
        c.push_back(factor_names::coherence_arousal);
        c.push_back(factor_names::coherence_valence);
        for (Emotion e : kRatioOrder) c.push_back(factor_names::ratio(e));
        c.push_back(factor_names::pauses);
        c.push_back(factor_names::vocabulary);
        return c;
    }();
    return columns;
}

struct MissingCell {
    std::size_t row = 0;
    std::size_t column = 0;
    std::string reason;
};

class FactorTable {
public:
    FactorTable() = default;

    FactorTable(std::vector<std::string> speech_ids, std::vector<std::string> factor_names)
        : speech_ids_(std::move(speech_ids)),
          factor_names_(std::move(factor_names)),
          cells_(speech_ids_.size() * factor_names_.size()) {}

    const std::vector<std::string>& speech_ids() const { return speech_ids_; }
    const std::vector<std::string>& factor_names() const { return factor_names_; }
    std::size_t rows() const { return speech_ids_.size(); }
    std::size_t cols() const { return factor_names_.size(); }

    const std::optional<double>& at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }

    void set(std::size_t row, std::size_t col, double value) {
        if (!std::isfinite(value)) throw Error("factor value must be finite");
        cells_[row * cols() + col] = value;
    }

    void mark_missing(std::size_t row, std::size_t col, std::string reason) {
        cells_[row * cols() + col].reset();
        missing_.push_back({row, col, std::move(reason)});
    }

    const std::vector<MissingCell>& missing() const { return missing_; }

    std::optional<std::size_t> column_index(std::string_view name) const {
        auto it = std::find(factor_names_.begin(), factor_names_.end(), name);
        if (it == factor_names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - factor_names_.begin());
    }

    std::optional<std::size_t> row_index(std::string_view id) const {
        auto it = std::find(speech_ids_.begin(), speech_ids_.end(), id);
        if (it == speech_ids_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - speech_ids_.begin());
    }

    std::vector<std::optional<double>> column(std::size_t col) const {
        std::vector<std::optional<double>> out;
        out.reserve(rows());
        for (std::size_t r = 0; r < rows(); ++r) out.push_back(at(r, col));
        return out;
    }

    /// Cells compare equal; missing-cell reasons are not part of the value.
    bool same_values(const FactorTable& other) const {
        return speech_ids_ == other.speech_ids_ && factor_names_ == other.factor_names_ && cells_ == other.cells_;
    }

private:
    std::vector<std::string> speech_ids_;
    std::vector<std::string> factor_names_;
    std::vector<std::optional<double>> cells_;
    std::vector<MissingCell> missing_;
};

struct FactorOptions {
    FinalMode final_mode = FinalMode::literal;
};

namespace detail {

inline std::vector<double> sentence_series(const SpeechRecord& s, Modality m, Kind k) {
    std::vector<double> out;
    out.reserve(s.sentences.size());
    for (const auto& sen : s.sentences) {
        if (m == Modality::textual) out.push_back(k == Kind::valence ? sen.text_valence : sen.text_arousal);
        else out.push_back(k == Kind::valence ? sen.vocal_valence : sen.vocal_arousal);
    }
    return out;
}

} // namespace detail

inline Series facial_series(const SpeechRecord& s, Kind k) {
    return {k == Kind::valence ? s.facial.valence : s.facial.arousal, Modality::facial, k};
}

inline Series modality_series(const SpeechRecord& s, Modality m, Kind k) {
    if (m == Modality::facial) return facial_series(s, k);
    return {detail::sentence_series(s, m, k), m, k};
}

/// One row of the factor table. A factor that cannot be computed for this
/// speech comes back as nullopt with a reason.
inline std::vector<std::pair<std::optional<double>, std::string>> compute_factor_row(
    const SpeechRecord& s, const std::set<std::string>& familiar, const FactorOptions& options = {}) {
    std::vector<std::pair<std::optional<double>, std::string>> row;
    row.reserve(factor_columns().size());
    auto attempt = [&](const std::function<double()>& fn) {
        try {
            row.emplace_back(fn(), std::string{});
        } catch (const Error& e) {
            row.emplace_back(std::nullopt, e.what());
        }
    };

    std::array<Series, 6> series;
    std::size_t i = 0;
    for (Modality m : {Modality::facial, Modality::textual, Modality::vocal}) {
        for (Kind k : {Kind::arousal, Kind::valence}) series[i++] = modality_series(s, m, k);
    }
    for (const auto& ser : series) attempt([&] { return average(ser.values); });
    for (const auto& ser : series) attempt([&] { return volatility(ser.values); });

    attempt([&] { return diversity(s.facial.emotion); });
    attempt([&] { return final_segment(s.facial.arousal, options.final_mode); });
    attempt([&] { return final_segment(s.facial.valence, options.final_mode); });

    std::optional<AlignedTriples> aligned;
    std::string align_error;
    try {
        aligned = align_sentences(s);
    } catch (const Error& e) {
        align_error = e.what();
    }
    for (Kind k : {Kind::arousal, Kind::valence}) {
        attempt([&] {
            if (!aligned) throw Error(align_error);
            return coherence(*aligned, k);
        });
    }

    for (Emotion e : kRatioOrder) attempt([&] { return emotion_ratio(s.facial.emotion, e); });
    attempt([&] { return pause_stats(s.words, s.duration_s).mean_pause_s; });
    attempt([&] {
        if (familiar.empty()) throw Error("vocabulary: no familiar-word list loaded");
        return vocabulary_level(s.script, familiar);
    });
    return row;
}

inline FactorTable compute_factor_table(const Corpus& corpus, const FactorOptions& options = {}) {
    if (corpus.empty()) throw Error("compute_factor_table: empty corpus");
    std::vector<std::string> ids;
    for (const auto& s : corpus.records()) ids.push_back(s.id);
    FactorTable table(std::move(ids), factor_columns());
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        auto row = compute_factor_row(corpus.records()[r], corpus.familiar_words(), options);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c].first) table.set(r, c, *row[c].first);
            else table.mark_missing(r, c, row[c].second);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Header `speech_id,<factors...>`; missing cells are empty. Values use the
/// shortest representation that round-trips.
inline std::string to_csv(const FactorTable& table) {
    std::string out = "speech_id";
    for (const auto& name : table.factor_names()) out += "," + name;
    out += "\n";
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out += table.speech_ids()[r];
        for (std::size_t c = 0; c < table.cols(); ++c) {
            out += ",";
            if (const auto& v = table.at(r, c)) out += format_double(*v);
        }
        out += "\n";
    }
    return out;
}

inline FactorTable factor_table_from_csv(std::string_view text) {
    auto split = [](std::string_view line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            auto pos = line.find(',', start);
            cells.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return cells;
    };
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = pos + 1;
    }
    if (lines.empty()) throw Error("factor CSV: empty");
    auto header = split(lines[0]);
    if (header.empty() || header[0] != "speech_id") throw Error("factor CSV: header must start with speech_id");
    std::vector<std::string> names(header.begin() + 1, header.end());
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i]);
        if (cells.size() != header.size()) throw Error("factor CSV: wrong cell count on line " + std::to_string(i + 1));
        ids.push_back(cells[0]);
        rows.push_back(std::move(cells));
    }
    FactorTable table(std::move(ids), std::move(names));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const std::string& cell = rows[r][c + 1];
            if (cell.empty()) {
                table.mark_missing(r, c, "missing in CSV");
                continue;
            }
            double v = 0.0;
            auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw Error("factor CSV: bad number '" + cell + "'");
            }
            table.set(r, c, v);
        }
    }
    return table;
}

inline nlohmann::ordered_json to_json(const FactorTable& table) {
    nlohmann::ordered_json j;
    j["speech_ids"] = table.speech_ids();
    j["factor_names"] = table.factor_names();
    auto& values = j["values"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < table.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& v = table.at(r, c);
            row.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
        }
        values.push_back(std::move(row));
    }
    return j;
}

} // namespace speecheff

#endif // SPEECHEFF_FACTORS_HPP
