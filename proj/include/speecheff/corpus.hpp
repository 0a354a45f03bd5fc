#ifndef SPEECHEFF_CORPUS_HPP
#define SPEECHEFF_CORPUS_HPP

/**
 * @file corpus.hpp
 *
 * Speech record schema, validation, JSON (de)serialization, corpus loading
 * and sentence-level alignment of facial samples.
 *
 * Canonical value ranges for every modality: valence in [-1, 1], arousal in
 * [0, 1]. Facial sample k is taken at time k / fps seconds.
 */

#include "common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace speecheff {

struct FacialSeries {
    double fps = 0.0;
    std::vector<double> valence;
    std::vector<double> arousal;
    std::vector<Emotion> emotion;
    std::vector<double> confidence;

    std::size_t size() const { return valence.size(); }
    double time_of(std::size_t k) const { return static_cast<double>(k) / fps; }

    bool operator==(const FacialSeries&) const = default;
};

struct SentenceRecord {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;
    double text_valence = 0.0;
    double vocal_valence = 0.0;
    double text_arousal = 0.0;
    double vocal_arousal = 0.0;

    bool operator==(const SentenceRecord&) const = default;
};

struct WordRecord {
    std::string word;
    double start_s = 0.0;
    double end_s = 0.0;

    bool operator==(const WordRecord&) const = default;
};

struct SpeechRecord {
    std::string id;
    std::string title;
    std::string speaker;
    std::string country;
    int year = 0;
    int level = 1;
    std::optional<int> rank;
    double duration_s = 0.0;
    FacialSeries facial;
    std::vector<SentenceRecord> sentences;
    std::vector<WordRecord> words;
    std::string script;

    bool operator==(const SpeechRecord&) const = default;
};

/// Immutable after construction; records sorted by id.
class Corpus {
public:
    Corpus() = default;

    Corpus(std::vector<SpeechRecord> records, std::set<std::string> familiar_words = {})
        : records_(std::move(records)), familiar_(std::move(familiar_words)) {
        std::sort(records_.begin(), records_.end(),
                  [](const SpeechRecord& a, const SpeechRecord& b) { return a.id < b.id; });
        for (std::size_t i = 1; i < records_.size(); ++i) {
            if (records_[i].id == records_[i - 1].id) {
                throw ValidationError("id", "duplicate speech id '" + records_[i].id + "'");
            }
        }
    }

    const std::vector<SpeechRecord>& records() const { return records_; }
    const std::set<std::string>& familiar_words() const { return familiar_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const SpeechRecord* find(std::string_view id) const {
        auto it = std::lower_bound(records_.begin(), records_.end(), id,
                                   [](const SpeechRecord& r, std::string_view key) { return r.id < key; });
        return it != records_.end() && it->id == id ? &*it : nullptr;
    }

    bool operator==(const Corpus&) const = default;

private:
    std::vector<SpeechRecord> records_;
    std::set<std::string> familiar_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ValidationError(field, message);
}

inline bool in_range(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

} // namespace detail

/// Throws ValidationError naming the first violated field.
inline void validate_speech(const SpeechRecord& s) {
    using detail::in_range;
    using detail::require;

    require(!s.id.empty(), "id", "must be non-empty");
    require(s.level >= 1 && s.level <= kLevelCount, "level", "must be in 1..5, got " + std::to_string(s.level));
    require(s.country.size() == 2 && std::isupper(static_cast<unsigned char>(s.country[0])) &&
                std::isupper(static_cast<unsigned char>(s.country[1])),
            "country", "must be an ISO-3166 alpha-2 code");
    require(!s.rank || *s.rank >= 1, "rank", "must be >= 1");
    require(std::isfinite(s.duration_s) && s.duration_s > 0.0, "duration_s", "must be > 0");

    const FacialSeries& f = s.facial;
    require(std::isfinite(f.fps) && f.fps > 0.0, "facial.fps", "must be > 0");
    const std::size_t n = f.valence.size();
    require(f.arousal.size() == n && f.emotion.size() == n && f.confidence.size() == n, "facial",
            "valence, arousal, emotion and confidence must have equal length");
    require(n >= 2, "facial", "series must have at least 2 samples");
    for (std::size_t k = 0; k < n; ++k) {
        require(in_range(f.valence[k], -1.0, 1.0), "facial.valence", "value out of [-1, 1] at " + std::to_string(k));
        require(in_range(f.arousal[k], 0.0, 1.0), "facial.arousal", "value out of [0, 1] at " + std::to_string(k));
        require(in_range(f.confidence[k], 0.0, 1.0), "facial.confidence",
                "value out of [0, 1] at " + std::to_string(k));
    }
    require(f.time_of(n - 1) <= s.duration_s + 1e-9, "facial", "samples extend beyond duration_s");

    for (std::size_t i = 0; i < s.sentences.size(); ++i) {
        const auto& sen = s.sentences[i];
        const std::string at = " at sentence " + std::to_string(i);
        require(in_range(sen.start_s, 0.0, s.duration_s) && in_range(sen.end_s, 0.0, s.duration_s),
                "sentences.start_s", "timestamp outside [0, duration_s]" + at);
        require(sen.end_s > sen.start_s, "sentences.end_s", "must exceed start_s" + at);
        require(!sen.text.empty(), "sentences.text", "must be non-empty" + at);
        require(in_range(sen.text_valence, -1.0, 1.0), "sentences.text_valence", "out of [-1, 1]" + at);
        require(in_range(sen.vocal_valence, -1.0, 1.0), "sentences.vocal_valence", "out of [-1, 1]" + at);
        require(in_range(sen.text_arousal, 0.0, 1.0), "sentences.text_arousal", "out of [0, 1]" + at);
        require(in_range(sen.vocal_arousal, 0.0, 1.0), "sentences.vocal_arousal", "out of [0, 1]" + at);
        if (i > 0) {
            require(sen.start_s >= s.sentences[i - 1].end_s, "sentences",
                    "must be sorted and non-overlapping" + at);
        }
    }
    for (std::size_t i = 0; i < s.words.size(); ++i) {
        const auto& w = s.words[i];
        const std::string at = " at word " + std::to_string(i);
        require(in_range(w.start_s, 0.0, s.duration_s) && in_range(w.end_s, 0.0, s.duration_s), "words.start_s",
                "timestamp outside [0, duration_s]" + at);
        require(w.end_s >= w.start_s, "words.end_s", "must not precede start_s" + at);
        if (i > 0) {
            require(w.start_s >= s.words[i - 1].end_s, "words", "must be sorted and non-overlapping" + at);
        }
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const SpeechRecord& s) {
    nlohmann::ordered_json facial;
    facial["fps"] = s.facial.fps;
    facial["valence"] = s.facial.valence;
    facial["arousal"] = s.facial.arousal;
    auto& emotions = facial["emotion"] = nlohmann::ordered_json::array();
    for (Emotion e : s.facial.emotion) emotions.push_back(std::string(to_string(e)));
    facial["confidence"] = s.facial.confidence;

    nlohmann::ordered_json sentences = nlohmann::ordered_json::array();
    for (const auto& sen : s.sentences) {
        sentences.push_back({{"start_s", sen.start_s},
                             {"end_s", sen.end_s},
                             {"text", sen.text},
                             {"text_valence", sen.text_valence},
                             {"vocal_valence", sen.vocal_valence},
                             {"text_arousal", sen.text_arousal},
                             {"vocal_arousal", sen.vocal_arousal}});
    }
    nlohmann::ordered_json words = nlohmann::ordered_json::array();
    for (const auto& w : s.words) words.push_back({{"word", w.word}, {"start_s", w.start_s}, {"end_s", w.end_s}});

    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["title"] = s.title;
    j["speaker"] = s.speaker;
    j["country"] = s.country;
    j["year"] = s.year;
    j["level"] = s.level;
    j["rank"] = s.rank ? nlohmann::ordered_json(*s.rank) : nlohmann::ordered_json(nullptr);
    j["duration_s"] = s.duration_s;
    j["facial"] = std::move(facial);
    j["sentences"] = std::move(sentences);
    j["words"] = std::move(words);
    j["script"] = s.script;
    return j;
}

namespace detail {

template <typename T, typename Json>
T field(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(path + key, "missing");
    try {
        return j.at(key).template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(path + key, "has the wrong type");
    }
}

} // namespace detail

/// Parses one speech document. Structural problems raise ValidationError;
/// semantic checks are left to validate_speech.
template <typename Json>
SpeechRecord speech_from_json(const Json& j) {
    using detail::field;
    if (!j.is_object()) throw ValidationError("<root>", "expected a JSON object");
    SpeechRecord s;
    s.id = field<std::string>(j, "id", "");
    s.title = field<std::string>(j, "title", "");
    s.speaker = field<std::string>(j, "speaker", "");
    s.country = field<std::string>(j, "country", "");
    s.year = field<int>(j, "year", "");
    s.level = field<int>(j, "level", "");
    if (j.contains("rank") && !j.at("rank").is_null()) s.rank = field<int>(j, "rank", "");
    s.duration_s = field<double>(j, "duration_s", "");

    if (!j.contains("facial")) throw ValidationError("facial", "missing");
    const auto& f = j.at("facial");
    s.facial.fps = field<double>(f, "fps", "facial.");
    s.facial.valence = field<std::vector<double>>(f, "valence", "facial.");
    s.facial.arousal = field<std::vector<double>>(f, "arousal", "facial.");
    s.facial.confidence = field<std::vector<double>>(f, "confidence", "facial.");
    for (const auto& name : field<std::vector<std::string>>(f, "emotion", "facial.")) {
        auto e = parse_emotion(name);
        if (!e) throw ValidationError("facial.emotion", "unknown label '" + name + "'");
        s.facial.emotion.push_back(*e);
    }

    if (!j.contains("sentences") || !j.at("sentences").is_array()) throw ValidationError("sentences", "missing");
    for (const auto& sj : j.at("sentences")) {
        SentenceRecord sen;
        sen.start_s = field<double>(sj, "start_s", "sentences.");
        sen.end_s = field<double>(sj, "end_s", "sentences.");
        sen.text = field<std::string>(sj, "text", "sentences.");
        sen.text_valence = field<double>(sj, "text_valence", "sentences.");
        sen.vocal_valence = field<double>(sj, "vocal_valence", "sentences.");
        sen.text_arousal = field<double>(sj, "text_arousal", "sentences.");
        sen.vocal_arousal = field<double>(sj, "vocal_arousal", "sentences.");
        s.sentences.push_back(std::move(sen));
    }
    if (!j.contains("words") || !j.at("words").is_array()) throw ValidationError("words", "missing");
    for (const auto& wj : j.at("words")) {
        s.words.push_back({field<std::string>(wj, "word", "words."), field<double>(wj, "start_s", "words."),
                           field<double>(wj, "end_s", "words.")});
    }
    s.script = field<std::string>(j, "script", "");
    return s;
}

inline std::string serialize_speech(const SpeechRecord& s) { return to_json(s).dump(1) + "\n"; }

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline const char* kWordlistFile = "wordlist.txt";

inline std::set<std::string> load_wordlist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open word list " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        std::size_t b = 0;
        while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
        line.erase(0, b);
        if (line.empty()) continue;
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        words.insert(line);
    }
    return words;
}

inline SpeechRecord load_speech_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("<file>", "cannot open", path.string());
    try {
        auto j = nlohmann::json::parse(in);
        SpeechRecord s = speech_from_json(j);
        validate_speech(s);
        if (s.id != path.stem().string()) throw ValidationError("id", "must match file name '" + path.stem().string() + "'");
        return s;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("<file>", std::string("malformed JSON: ") + e.what(), path.string());
    } catch (const ValidationError& e) {
        throw ValidationError(e.field(), e.what(), path.string());
    }
}

/// Loads every `<id>.json` in `dir` plus the optional `wordlist.txt`.
inline Corpus load_corpus(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("corpus directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no speech files in " + dir.string());

    std::vector<SpeechRecord> records;
    std::set<std::string> seen;
    for (const auto& file : files) {
        SpeechRecord s = load_speech_file(file);
        if (!seen.insert(s.id).second) throw ValidationError("id", "duplicate speech id '" + s.id + "'", file.string());
        records.push_back(std::move(s));
    }
    std::set<std::string> familiar;
    if (fs::exists(dir / kWordlistFile)) familiar = load_wordlist(dir / kWordlistFile);
    return Corpus(std::move(records), std::move(familiar));
}

/// Writes one file per record plus the word list (when non-empty).
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& s : corpus.records()) {
        std::ofstream out(dir / (s.id + ".json"), std::ios::binary);
        out << serialize_speech(s);
        if (!out) throw Error("failed writing " + (dir / (s.id + ".json")).string());
    }
    if (!corpus.familiar_words().empty()) {
        std::ofstream out(dir / kWordlistFile, std::ios::binary);
        for (const auto& w : corpus.familiar_words()) out << w << '\n';
    }
}

// ---------------------------------------------------------------------------
// Sentence alignment
// ---------------------------------------------------------------------------

struct ModalityTriple {
    double textual = 0.0;
    double vocal = 0.0;
    double facial = 0.0;
};

struct AlignedSentence {
    std::size_t sentence_index = 0;
    ModalityTriple valence;
    ModalityTriple arousal;
};

struct AlignedTriples {
    std::vector<AlignedSentence> entries;
    std::size_t dropped = 0;
};

/// Facial value per sentence is the mean over samples with time in
/// [start_s, end_s). Sentences covering no sample are dropped and counted.
inline AlignedTriples align_sentences(const SpeechRecord& speech) {
    const FacialSeries& f = speech.facial;
    AlignedTriples out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < speech.sentences.size(); ++i) {
        const auto& sen = speech.sentences[i];
        while (k < f.size() && f.time_of(k) < sen.start_s) ++k;
        double sum_v = 0.0;
        double sum_a = 0.0;
        std::size_t count = 0;
        for (std::size_t m = k; m < f.size() && f.time_of(m) < sen.end_s; ++m) {
            sum_v += f.valence[m];
            sum_a += f.arousal[m];
            ++count;
        }
        if (count == 0) {
            ++out.dropped;
            continue;
        }
        const double n = static_cast<double>(count);
        out.entries.push_back({i,
                               {sen.text_valence, sen.vocal_valence, sum_v / n},
                               {sen.text_arousal, sen.vocal_arousal, sum_a / n}});
    }
    if (out.entries.empty()) throw Error("speech '" + speech.id + "': no sentence overlaps a facial sample");
    return out;
}

} // namespace speecheff

#endif // SPEECHEFF_CORPUS_HPP
