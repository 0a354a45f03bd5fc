#ifndef SPEECHEFF_COMMON_HPP
#define SPEECHEFF_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace speecheff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record or file failed schema validation. `field` names the offending
/// field (dotted path), `file` the source document when known.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message, std::string file = {})
        : Error(compose(file, field, message)), field_(std::move(field)), file_(std::move(file)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& file() const noexcept { return file_; }

private:
    static std::string compose(const std::string& file, const std::string& field, const std::string& message) {
        std::string out;
        if (!file.empty()) out += file + ": ";
        out += "field '" + field + "': " + message;
        return out;
    }

    std::string field_;
    std::string file_;
};

inline constexpr int kLevelCount = 5;

inline constexpr std::array<std::string_view, kLevelCount> kLevelNames = {
    "area", "division", "district", "semi-final", "final"};

enum class Emotion : std::uint8_t { angry, disgust, fear, happy, sad, surprise, neutral };

inline constexpr int kEmotionCount = 7;

inline constexpr std::array<Emotion, kEmotionCount> kEmotions = {
    Emotion::angry, Emotion::disgust, Emotion::fear, Emotion::happy,
    Emotion::sad,   Emotion::surprise, Emotion::neutral};

inline constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "angry", "disgust", "fear", "happy", "sad", "surprise", "neutral"};

inline std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

inline std::optional<Emotion> parse_emotion(std::string_view name) {
    for (int i = 0; i < kEmotionCount; ++i) {
        if (kEmotionNames[i] == name) return kEmotions[i];
    }
    return std::nullopt;
}

inline int index_of(Emotion e) { return static_cast<int>(e); }

enum class Modality : std::uint8_t { facial, textual, vocal };
enum class Kind : std::uint8_t { valence, arousal };

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::facial: return "facial";
        case Modality::textual: return "textual";
        case Modality::vocal: return "vocal";
    }
    return "?";
}

inline std::string_view to_string(Kind k) { return k == Kind::valence ? "valence" : "arousal"; }

/// Deterministic random source. The engine output sequence is fixed by the
/// standard, so the deviates below are reproducible across standard library
/// implementations (unlike std::normal_distribution).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer uniform on [lo, hi].
    int integer(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; derives independent seeds from (seed, key) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace speecheff

#endif // SPEECHEFF_COMMON_HPP
