#ifndef SPEECHEFF_SYNTH_HPP
#define SPEECHEFF_SYNTH_HPP

/**
 * @file synth.hpp
 *
 * Deterministic synthetic corpora with planted level effects.
 *
 * Each of the six modality averages has a per-speech target mean. For a
 * planted factor the target is `base + shift * (level - 1)` plus a
 * speech-level offset that is centered within each level, so the per-level
 * means of the planted factor follow the planted schedule. Every other
 * average (the decoy included) gets an independent, level-free offset.
 * Generated series are shifted so their mean hits the target exactly
 * (up to clamping to the canonical range).
 */

#include "common.hpp"
#include "corpus.hpp"
#include "factors.hpp"

namespace speecheff {

struct PlantedEffect {
    std::string factor;
    double shift_per_level = 0.0;
};

struct SynthConfig {
    int speeches_per_level = 8;
    double duration_min_s = 90.0;
    double duration_max_s = 150.0;
    double fps = 4.0;
    std::vector<PlantedEffect> planted = {{"facial_arousal_average", 0.08}};
    std::string decoy = "facial_valence_average";
};

/// The 200-word familiar list shipped with synthetic corpora.
inline const std::vector<std::string>& synth_familiar_words() {
    static const std::vector<std::string> words = {
        "a", "about", "after", "again", "all", "always", "am", "an", "and", "any",
        "are", "around", "as", "ask", "at", "away", "baby", "back", "bad", "be",
        "because", "bed", "been", "before", "best", "better", "big", "book", "both", "boy",
        "bring", "but", "by", "call", "came", "can", "car", "child", "city", "cold",
        "come", "could", "day", "did", "do", "does", "dog", "done", "door", "down",
        "dream", "each", "eat", "every", "eyes", "face", "family", "far", "father", "feel",
        "find", "first", "five", "for", "found", "four", "friend", "from", "full", "gave",
        "get", "girl", "give", "go", "good", "got", "great", "grow", "had", "hand",
        "happy", "hard", "has", "have", "he", "heart", "help", "her", "here", "him",
        "his", "home", "hope", "house", "how", "i", "if", "in", "into", "is",
        "it", "just", "keep", "kind", "know", "last", "laugh", "learn", "let", "life",
        "like", "little", "live", "long", "look", "love", "made", "make", "man", "many",
        "may", "me", "mind", "more", "mother", "much", "must", "my", "name", "never",
        "new", "night", "no", "not", "now", "of", "off", "old", "on", "once",
        "one", "only", "open", "or", "our", "out", "over", "own", "people", "play",
        "put", "ran", "read", "right", "room", "run", "said", "saw", "say", "school",
        "see", "she", "should", "show", "small", "so", "some", "soon", "start", "stop",
        "story", "take", "tell", "than", "that", "the", "their", "them", "then", "there",
        "they", "thing", "think", "this", "time", "to", "today", "told", "too", "try",
        "two", "under", "up", "us", "very", "want", "was", "we", "went", "what"};
    return words;
}

inline const std::vector<std::string>& synth_difficult_words() {
    static const std::vector<std::string> words = {
        "adversity", "ambition", "audience", "championship", "circumstance", "confidence",
        "courageous", "determination", "endeavor", "extraordinary", "gratitude", "hesitation",
        "imagination", "inspiration", "magnificent", "perseverance", "philosophy", "resilience",
        "significant", "transformation", "vulnerable", "wisdom", "serendipity", "triumphant"};
    return words;
}

namespace detail {

struct AverageSlot {
    Modality modality;
    Kind kind;
    double base;
    double between_sd;
    double within_sd;
};

inline const std::array<AverageSlot, 6>& average_slots() {
    static const std::array<AverageSlot, 6> slots = {{
        {Modality::facial, Kind::arousal, 0.35, 0.08, 0.10},
        {Modality::facial, Kind::valence, 0.05, 0.12, 0.20},
        {Modality::textual, Kind::arousal, 0.40, 0.08, 0.12},
        {Modality::textual, Kind::valence, 0.10, 0.12, 0.20},
        {Modality::vocal, Kind::arousal, 0.45, 0.08, 0.12},
        {Modality::vocal, Kind::valence, 0.05, 0.12, 0.20},
    }};
    return slots;
}

inline int slot_of(const std::string& factor) {
    const auto& slots = average_slots();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (factor_names::average(slots[i].modality, slots[i].kind) == factor) return static_cast<int>(i);
    }
    return -1;
}

inline void check_factor_name(const std::string& factor, const char* role) {
    const auto& cols = factor_columns();
    if (std::find(cols.begin(), cols.end(), factor) == cols.end()) {
        throw Error(std::string("synth: unknown ") + role + " factor '" + factor + "'");
    }
    if (slot_of(factor) < 0) {
        throw Error(std::string("synth: ") + role + " factor '" + factor + "' is not a modality average");
    }
}

inline double clamp_kind(double v, Kind k) { return k == Kind::arousal ? std::clamp(v, 0.0, 1.0) : std::clamp(v, -1.0, 1.0); }

/// Shifts `values` toward mean `target`, re-clamping after each pass.
inline void match_mean(std::vector<double>& values, double target, Kind k) {
    for (int pass = 0; pass < 8; ++pass) {
        const double delta = target - average(values);
        if (std::abs(delta) < 1e-12) break;
        for (double& v : values) v = clamp_kind(v + delta, k);
    }
}

inline Emotion sample_emotion(Rng& rng, double valence) {
    struct Weight {
        Emotion e;
        double w;
    };
    static const std::array<Weight, 4> positive = {{{Emotion::happy, 0.7}, {Emotion::surprise, 0.1}, {Emotion::neutral, 0.2}, {Emotion::sad, 0.0}}};
    static const std::array<Weight, 5> negative = {{{Emotion::sad, 0.4}, {Emotion::angry, 0.2}, {Emotion::fear, 0.15}, {Emotion::disgust, 0.1}, {Emotion::neutral, 0.15}}};
    static const std::array<Weight, 5> middle = {{{Emotion::neutral, 0.6}, {Emotion::happy, 0.15}, {Emotion::surprise, 0.1}, {Emotion::sad, 0.1}, {Emotion::fear, 0.05}}};
    auto pick = [&](const auto& table) {
        double u = rng.uniform();
        for (const auto& item : table) {
            if (u < item.w) return item.e;
            u -= item.w;
        }
        return Emotion::neutral;
    };
    if (valence > 0.25) return pick(positive);
    if (valence < -0.25) return pick(negative);
    return pick(middle);
}

inline std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

} // namespace detail

inline void validate_synth_config(const SynthConfig& config) {
    if (config.speeches_per_level <= 0) throw Error("synth: speeches_per_level must be positive");
    if (!(config.duration_min_s >= 10.0) || !(config.duration_max_s >= config.duration_min_s)) {
        throw Error("synth: duration range must satisfy 10 <= min <= max");
    }
    if (!(config.fps > 0.0)) throw Error("synth: fps must be positive");
    for (const auto& p : config.planted) {
        detail::check_factor_name(p.factor, "planted");
        if (!std::isfinite(p.shift_per_level)) throw Error("synth: planted shift must be finite");
    }
    if (!config.decoy.empty()) {
        detail::check_factor_name(config.decoy, "decoy");
        for (const auto& p : config.planted) {
            if (p.factor == config.decoy) throw Error("synth: decoy factor cannot also be planted");
        }
    }
}

/// Pure function of (config, seed).
inline Corpus synth_corpus(const SynthConfig& config, std::uint64_t seed) {
    validate_synth_config(config);
    using detail::average_slots;

    const int per_level = config.speeches_per_level;
    const int total = per_level * kLevelCount;

    // Per-slot shift schedule; zero for level-free slots.
    std::array<double, 6> shift{};
    std::array<bool, 6> planted{};
    for (const auto& p : config.planted) {
        const int slot = detail::slot_of(p.factor);
        shift[slot] = p.shift_per_level;
        planted[slot] = true;
    }

    // Speech-level offsets; centered within each level for planted slots.
    Rng master(mix_seed(seed, 0));
    std::vector<std::array<double, 6>> offset(static_cast<std::size_t>(total));
    for (auto& o : offset) {
        for (double& v : o) v = master.normal();
    }
    for (std::size_t slot = 0; slot < 6; ++slot) {
        if (!planted[slot]) continue;
        for (int level = 0; level < kLevelCount; ++level) {
            double mean = 0.0;
            for (int i = 0; i < per_level; ++i) mean += offset[level * per_level + i][slot];
            mean /= per_level;
            for (int i = 0; i < per_level; ++i) offset[level * per_level + i][slot] -= mean;
        }
    }

    static const std::array<std::string_view, 10> countries = {"US", "CN", "IN", "CA", "AU", "GB", "PH", "MY", "ZA", "NG"};
    const auto& familiar = synth_familiar_words();
    const auto& difficult = synth_difficult_words();

    std::vector<SpeechRecord> records;
    records.reserve(static_cast<std::size_t>(total));
    for (int level = 1; level <= kLevelCount; ++level) {
        for (int i = 0; i < per_level; ++i) {
            const std::size_t index = static_cast<std::size_t>((level - 1) * per_level + i);
            Rng rng(mix_seed(seed, index + 1));

            SpeechRecord s;
            const std::string tag = "L" + std::to_string(level) + "-" + detail::two_digits(i + 1);
            s.id = "speech-" + tag;
            s.title = "Synthetic speech " + tag;
            s.speaker = "Speaker " + tag;
            s.country = std::string(countries[static_cast<std::size_t>(rng.integer(0, countries.size() - 1))]);
            s.year = rng.integer(2014, 2021);
            s.level = level;
            if (level == kLevelCount) s.rank = i + 1;
            s.duration_s = std::round(rng.uniform(config.duration_min_s, config.duration_max_s) * 10.0) / 10.0;

            std::array<double, 6> target{};
            for (std::size_t slot = 0; slot < 6; ++slot) {
                const auto& def = average_slots()[slot];
                double mu = def.base + shift[slot] * (level - 1) + def.between_sd * offset[index][slot];
                target[slot] = def.kind == Kind::arousal ? std::clamp(mu, 0.05, 0.95) : std::clamp(mu, -0.9, 0.9);
            }

            // Facial frames: AR(1) noise around the target means.
            const auto frames = static_cast<std::size_t>(std::floor(s.duration_s * config.fps)) + 1;
            s.facial.fps = config.fps;
            for (std::size_t slot : {std::size_t{0}, std::size_t{1}}) {
                const auto& def = average_slots()[slot];
                std::vector<double> values(frames);
                const double phi = 0.9;
                double noise = def.within_sd * rng.normal();
                for (std::size_t k = 0; k < frames; ++k) {
                    if (k > 0) noise = phi * noise + std::sqrt(1.0 - phi * phi) * def.within_sd * rng.normal();
                    values[k] = detail::clamp_kind(target[slot] + noise, def.kind);
                }
                detail::match_mean(values, target[slot], def.kind);
                (def.kind == Kind::arousal ? s.facial.arousal : s.facial.valence) = std::move(values);
            }
            s.facial.emotion.reserve(frames);
            s.facial.confidence.reserve(frames);
            for (std::size_t k = 0; k < frames; ++k) {
                s.facial.emotion.push_back(detail::sample_emotion(rng, s.facial.valence[k]));
                s.facial.confidence.push_back(std::round(rng.uniform(0.5, 1.0) * 1000.0) / 1000.0);
            }

            // Sentences and word timings.
            double cursor = rng.uniform(0.2, 1.0);
            while (true) {
                const double length = rng.uniform(3.0, 8.0);
                const double end = std::min(cursor + length, s.duration_s - 0.2);
                if (end - cursor < 1.5) break;
                const double span = end - cursor;
                const int n_words = std::max(2, static_cast<int>(std::lround(span * 2.3 * rng.uniform(0.8, 1.2))));
                const double slot_len = span / n_words;
                std::string text;
                for (int w = 0; w < n_words; ++w) {
                    const bool hard = rng.uniform() < 0.12;
                    std::string word = hard ? difficult[static_cast<std::size_t>(rng.integer(0, difficult.size() - 1))]
                                            : familiar[static_cast<std::size_t>(rng.integer(0, familiar.size() - 1))];
                    const double ws = cursor + w * slot_len + rng.uniform(0.0, 0.1) * slot_len;
                    const double we = ws + slot_len * rng.uniform(0.55, 0.85);
                    s.words.push_back({word, ws, we});
                    if (w == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
                    text += (w == 0 ? "" : " ") + word;
                }
                text += rng.uniform() < 0.15 ? "!" : ".";
                SentenceRecord sen;
                sen.start_s = cursor;
                sen.end_s = end;
                sen.text = std::move(text);
                s.sentences.push_back(std::move(sen));
                cursor = end + rng.uniform(0.2, 1.5);
            }
            for (std::size_t slot = 2; slot < 6; ++slot) {
                const auto& def = average_slots()[slot];
                std::vector<double> values;
                for (std::size_t k = 0; k < s.sentences.size(); ++k) {
                    values.push_back(detail::clamp_kind(target[slot] + def.within_sd * rng.normal(), def.kind));
                }
                detail::match_mean(values, target[slot], def.kind);
                for (std::size_t k = 0; k < s.sentences.size(); ++k) {
                    auto& sen = s.sentences[k];
                    if (def.modality == Modality::textual) (def.kind == Kind::valence ? sen.text_valence : sen.text_arousal) = values[k];
                    else (def.kind == Kind::valence ? sen.vocal_valence : sen.vocal_arousal) = values[k];
                }
            }
            for (std::size_t k = 0; k < s.sentences.size(); ++k) {
                s.script += (k == 0 ? "" : " ") + s.sentences[k].text;
            }
            validate_speech(s);
            records.push_back(std::move(s));
        }
    }
    std::set<std::string> familiar_set(familiar.begin(), familiar.end());
    return Corpus(std::move(records), std::move(familiar_set));
}

} // namespace speecheff

#endif // SPEECHEFF_SYNTH_HPP
