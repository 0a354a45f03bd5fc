#ifndef SPEECHEFF_TESTS_SUPPORT_HPP
#define SPEECHEFF_TESTS_SUPPORT_HPP

// Shared helpers for the test binaries: fixture paths, temp directories,
// speech builders, random generators and a small JSON-schema checker.

#include <speecheff/corpus.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#ifndef SPEECHEFF_TEST_DATA
#error "SPEECHEFF_TEST_DATA must point at the tests directory"
#endif

namespace testing_support {

namespace fs = std::filesystem;
using speecheff::Emotion;
using speecheff::SpeechRecord;

inline fs::path data_dir() { return fs::path(SPEECHEFF_TEST_DATA); }
inline fs::path fixture_corpus() { return data_dir() / "fixtures" / "corpus3"; }

class TempDir {
public:
    explicit TempDir(const std::string& tag = "speecheff") {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(++counter));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& p) const { return path_ / p; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

/// A minimal valid speech: `n` facial samples at `fps`, one sentence per
/// 4 seconds, two words per sentence.
inline SpeechRecord make_speech(const std::string& id, std::vector<double> valence, double fps = 1.0, int level = 1) {
    SpeechRecord s;
    s.id = id;
    s.title = "Title " + id;
    s.speaker = "Speaker";
    s.country = "US";
    s.year = 2020;
    s.level = level;
    const std::size_t n = valence.size();
    s.duration_s = static_cast<double>(n) / fps;
    s.facial.fps = fps;
    s.facial.valence = std::move(valence);
    s.facial.arousal.assign(n, 0.5);
    s.facial.emotion.assign(n, Emotion::neutral);
    s.facial.confidence.assign(n, 0.9);
    std::string script;
    for (double t = 0.0; t + 4.0 <= s.duration_s + 1e-9; t += 4.0) {
        s.sentences.push_back({t, t + 4.0, "We can win the day.", 0.2, 0.1, 0.4, 0.6});
        s.words.push_back({"we", t + 0.5, t + 1.0});
        s.words.push_back({"win", t + 1.5, t + 2.5});
        script += "We can win the day. ";
    }
    if (s.sentences.empty()) {
        s.sentences.push_back({0.0, s.duration_s, "Hello there.", 0.0, 0.0, 0.5, 0.5});
        s.words.push_back({"hello", 0.0, 0.4 * s.duration_s});
        s.words.push_back({"there", 0.5 * s.duration_s, 0.9 * s.duration_s});
        script = "Hello there.";
    }
    s.script = script;
    return s;
}

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
inline int uniform_int(Gen& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline std::vector<double> random_vector(Gen& g, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(g, lo, hi);
    return v;
}

inline std::vector<Emotion> random_labels(Gen& g, std::size_t n, int distinct = 7) {
    std::vector<Emotion> v(n);
    for (auto& e : v) e = speecheff::kEmotions[static_cast<std::size_t>(uniform_int(g, 0, distinct - 1))];
    return v;
}

// ---------------------------------------------------------------------------
// JSON-schema subset: type, properties, required, additionalProperties
// (boolean), items, minItems, maxItems, enum, minimum, maximum.
// ---------------------------------------------------------------------------

using nlohmann::json;

inline bool type_matches(const std::string& type, const json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (type == "number") return v.is_number();
    return false;
}

inline void check_schema(const json& schema, const json& v, const std::string& where, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        std::vector<std::string> types;
        if (schema["type"].is_array()) types = schema["type"].get<std::vector<std::string>>();
        else types.push_back(schema["type"].get<std::string>());
        const bool ok = std::any_of(types.begin(), types.end(), [&](const std::string& t) { return type_matches(t, v); });
        if (!ok) {
            errors.push_back(where + ": expected " + schema["type"].dump() + ", got " + v.type_name());
            return;
        }
    }
    if (schema.contains("enum")) {
        const auto& options = schema["enum"];
        if (std::find(options.begin(), options.end(), v) == options.end()) errors.push_back(where + ": value not in enum");
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>()) errors.push_back(where + ": below minimum");
        if (schema.contains("maximum") && x > schema["maximum"].get<double>()) errors.push_back(where + ": above maximum");
    }
    if (v.is_object()) {
        const json props = schema.value("properties", json::object());
        for (const auto& r : schema.value("required", json::array())) {
            if (!v.contains(r.get<std::string>())) errors.push_back(where + ": missing '" + r.get<std::string>() + "'");
        }
        for (const auto& [key, value] : v.items()) {
            if (props.contains(key)) check_schema(props[key], value, where + "." + key, errors);
            else if (!schema.value("additionalProperties", true)) errors.push_back(where + ": unexpected '" + key + "'");
        }
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) errors.push_back(where + ": too few items");
        if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>()) errors.push_back(where + ": too many items");
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i) check_schema(schema["items"], v[i], where + "[" + std::to_string(i) + "]", errors);
        }
    }
}

inline json load_schema(const std::string& name) { return json::parse(slurp(data_dir() / "schemas" / (name + ".schema.json"))); }

/// Empty when `v` satisfies the named schema.
inline std::vector<std::string> schema_errors(const std::string& name, const json& v) {
    std::vector<std::string> errors;
    check_schema(load_schema(name), v, "$", errors);
    if (errors.size() > 10) errors.resize(10);
    return errors;
}

} // namespace testing_support

#endif // SPEECHEFF_TESTS_SUPPORT_HPP
