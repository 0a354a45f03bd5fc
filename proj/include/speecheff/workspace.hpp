#ifndef SPEECHEFF_WORKSPACE_HPP
#define SPEECHEFF_WORKSPACE_HPP

/**
 * @file workspace.hpp
 *
 * Pipeline configuration and the derived-artifact cache.
 *
 * Artifacts live in `<out>/<digest>/`, where the digest is a SHA-256 over
 * the corpus directory contents and the canonical configuration, so a cache
 * directory is always reproducible from its inputs.
 */

#include "corpus.hpp"
#include "embed.hpp"
#include "factors.hpp"
#include "layout.hpp"
#include "ordinal.hpp"
#include "svg.hpp"
#include "synth.hpp"

#include <openssl/evp.h>

namespace speecheff {

struct Config {
    double significance = kSignificance;
    FinalMode final_mode = FinalMode::literal;
    TsneParams tsne;
    SpiralParams spiral;
    ScriptParams script;
    TypeParams type;
    SynthConfig synth;
};

namespace detail {

template <typename Json>
void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw Error("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error("config: unknown key '" + where + key + "'");
        }
    }
}

template <typename T, typename Json>
void read_opt(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).template get<T>();
}

} // namespace detail

inline Config config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::read_opt;
    Config c;
    try {
        check_keys(j, {"significance", "final_mode", "tsne", "spiral", "script", "type", "synth"}, "");
        read_opt(j, "significance", c.significance);
        if (j.contains("final_mode")) {
            const auto mode = j.at("final_mode").get<std::string>();
            if (mode == "literal") c.final_mode = FinalMode::literal;
            else if (mode == "window_mean") c.final_mode = FinalMode::window_mean;
            else throw Error("config: final_mode must be 'literal' or 'window_mean'");
        }
        if (j.contains("tsne")) {
            const auto& t = j.at("tsne");
            check_keys(t, {"perplexity", "iterations", "early_exaggeration", "exaggeration_iterations", "learning_rate",
                           "momentum", "final_momentum", "momentum_switch", "initial_sd", "seed"},
                       "tsne.");
            read_opt(t, "perplexity", c.tsne.perplexity);
            read_opt(t, "iterations", c.tsne.iterations);
            read_opt(t, "early_exaggeration", c.tsne.early_exaggeration);
            read_opt(t, "exaggeration_iterations", c.tsne.exaggeration_iterations);
            read_opt(t, "learning_rate", c.tsne.learning_rate);
            read_opt(t, "momentum", c.tsne.momentum);
            read_opt(t, "final_momentum", c.tsne.final_momentum);
            read_opt(t, "momentum_switch", c.tsne.momentum_switch);
            read_opt(t, "initial_sd", c.tsne.initial_sd);
            read_opt(t, "seed", c.tsne.seed);
            validate_tsne_params(c.tsne);
        }
        if (j.contains("spiral")) {
            const auto& s = j.at("spiral");
            check_keys(s, {"delta_r", "interval_s", "flip_threshold", "theta_0", "r_0", "circle_r_min", "circle_r_max"}, "spiral.");
            read_opt(s, "delta_r", c.spiral.delta_r);
            read_opt(s, "interval_s", c.spiral.interval_s);
            read_opt(s, "flip_threshold", c.spiral.flip_threshold);
            read_opt(s, "theta_0", c.spiral.theta_0);
            if (s.contains("r_0")) c.spiral.r_0 = s.at("r_0").get<double>();
            read_opt(s, "circle_r_min", c.spiral.circle_r_min);
            read_opt(s, "circle_r_max", c.spiral.circle_r_max);
        }
        if (j.contains("script")) {
            const auto& s = j.at("script");
            check_keys(s, {"font_min", "font_max", "base_gap", "gap_per_second", "max_pause_s", "tracking_scale",
                           "tracking_max", "char_width_em", "line_height", "max_width"},
                       "script.");
            read_opt(s, "font_min", c.script.font_min);
            read_opt(s, "font_max", c.script.font_max);
            read_opt(s, "base_gap", c.script.base_gap);
            read_opt(s, "gap_per_second", c.script.gap_per_second);
            read_opt(s, "max_pause_s", c.script.max_pause_s);
            read_opt(s, "tracking_scale", c.script.tracking_scale);
            read_opt(s, "tracking_max", c.script.tracking_max);
            read_opt(s, "char_width_em", c.script.char_width_em);
            read_opt(s, "line_height", c.script.line_height);
            read_opt(s, "max_width", c.script.max_width);
        }
        if (j.contains("type")) {
            const auto& t = j.at("type");
            check_keys(t, {"width", "height", "max_bar_fraction"}, "type.");
            read_opt(t, "width", c.type.width);
            read_opt(t, "height", c.type.height);
            read_opt(t, "max_bar_fraction", c.type.max_bar_fraction);
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            check_keys(s, {"speeches_per_level", "duration_min_s", "duration_max_s", "fps", "planted", "decoy"}, "synth.");
            read_opt(s, "speeches_per_level", c.synth.speeches_per_level);
            read_opt(s, "duration_min_s", c.synth.duration_min_s);
            read_opt(s, "duration_max_s", c.synth.duration_max_s);
            read_opt(s, "fps", c.synth.fps);
            read_opt(s, "decoy", c.synth.decoy);
            if (s.contains("planted")) {
                c.synth.planted.clear();
                for (const auto& p : s.at("planted")) {
                    check_keys(p, {"factor", "shift_per_level"}, "synth.planted.");
                    c.synth.planted.push_back({p.at("factor").get<std::string>(), p.at("shift_per_level").get<double>()});
                }
            }
            validate_synth_config(c.synth);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return c;
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("config: malformed JSON: ") + e.what());
    }
}

/// Canonical form of every analysis-relevant setting.
inline nlohmann::ordered_json to_json(const Config& c) {
    nlohmann::ordered_json j;
    j["significance"] = c.significance;
    j["final_mode"] = c.final_mode == FinalMode::literal ? "literal" : "window_mean";
    j["tsne"] = {{"perplexity", c.tsne.perplexity},
                 {"iterations", c.tsne.iterations},
                 {"early_exaggeration", c.tsne.early_exaggeration},
                 {"exaggeration_iterations", c.tsne.exaggeration_iterations},
                 {"learning_rate", c.tsne.learning_rate},
                 {"momentum", c.tsne.momentum},
                 {"final_momentum", c.tsne.final_momentum},
                 {"momentum_switch", c.tsne.momentum_switch},
                 {"initial_sd", c.tsne.initial_sd},
                 {"seed", c.tsne.seed}};
    j["spiral"] = {{"delta_r", c.spiral.delta_r},
                   {"interval_s", c.spiral.interval_s},
                   {"flip_threshold", c.spiral.flip_threshold},
                   {"theta_0", c.spiral.theta_0},
                   {"r_0", c.spiral.start_radius()},
                   {"circle_r_min", c.spiral.circle_r_min},
                   {"circle_r_max", c.spiral.circle_r_max}};
    j["script"] = {{"font_min", c.script.font_min},
                   {"font_max", c.script.font_max},
                   {"base_gap", c.script.base_gap},
                   {"gap_per_second", c.script.gap_per_second},
                   {"max_pause_s", c.script.max_pause_s},
                   {"tracking_scale", c.script.tracking_scale},
                   {"tracking_max", c.script.tracking_max},
                   {"char_width_em", c.script.char_width_em},
                   {"line_height", c.script.line_height},
                   {"max_width", c.script.max_width}};
    j["type"] = {{"width", c.type.width}, {"height", c.type.height}, {"max_bar_fraction", c.type.max_bar_fraction}};
    return j;
}

// ---------------------------------------------------------------------------
// Digests
// ---------------------------------------------------------------------------

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1) throw Error("sha256: update failed");
    }

    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1) throw Error("sha256: final failed");
        static const char* hexdigits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += hexdigits[digest[i] >> 4];
            out += hexdigits[digest[i] & 0xf];
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

/// SHA-256 over the names and bytes of every regular file directly in `dir`
/// (sorted by name), skipping names in `exclude`.
inline std::string directory_digest(const std::filesystem::path& dir, const std::set<std::string>& exclude = {}) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && !exclude.contains(entry.path().filename().string())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    Sha256 sha;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        sha.update(name);
        sha.update(std::string_view("\0", 1));
        const std::string content = read_file(f);
        sha.update(std::to_string(content.size()));
        sha.update(std::string_view("\0", 1));
        sha.update(content);
    }
    return sha.hex();
}

// ---------------------------------------------------------------------------
// Workspace
// ---------------------------------------------------------------------------

struct Artifacts {
    Corpus corpus;
    std::vector<int> levels;  ///< per factor-table row
    FactorTable factors;
    AnalysisReport analysis;
    std::optional<EmbeddingResult> embedding;
    std::string embedding_error;
    Config config;
};

inline nlohmann::ordered_json speech_metadata(const SpeechRecord& s) {
    return {{"id", s.id},
            {"title", s.title},
            {"speaker", s.speaker},
            {"country", s.country},
            {"year", s.year},
            {"level", s.level},
            {"level_name", std::string(kLevelNames[static_cast<std::size_t>(s.level - 1)])},
            {"rank", s.rank ? nlohmann::ordered_json(*s.rank) : nlohmann::ordered_json(nullptr)},
            {"duration_s", s.duration_s}};
}

template <typename Json>
EmbeddingResult embedding_from_json(const Json& j) {
    EmbeddingResult e;
    e.selected_factors = j.at("selected_factors").template get<std::vector<std::string>>();
    const auto& points = j.at("points");
    e.coords.resize(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        e.speech_ids.push_back(points[i].at("id").template get<std::string>());
        e.coords(static_cast<Eigen::Index>(i), 0) = points[i].at("x").template get<double>();
        e.coords(static_cast<Eigen::Index>(i), 1) = points[i].at("y").template get<double>();
        e.levels.push_back(points[i].at("level").template get<int>());
    }
    e.kl_trace.push_back(j.at("kl_final").template get<double>());
    return e;
}

class Workspace {
public:
    Workspace(std::filesystem::path corpus_dir, std::filesystem::path out_dir, Config config = {})
        : corpus_dir_(std::move(corpus_dir)), out_dir_(std::move(out_dir)), config_(std::move(config)) {}

    const Config& config() const { return config_; }
    const std::filesystem::path& corpus_dir() const { return corpus_dir_; }

    const Corpus& corpus() {
        if (!corpus_) corpus_ = load_corpus(corpus_dir_);
        return *corpus_;
    }

    std::string digest() {
        if (digest_.empty()) {
            Sha256 sha;
            sha.update(directory_digest(corpus_dir_));
            sha.update(to_json(config_).dump());
            digest_ = sha.hex();
        }
        return digest_;
    }

    std::filesystem::path cache_dir() { return out_dir_ / digest().substr(0, 16); }

    std::filesystem::path factors_path() { return cache_dir() / "factors.csv"; }
    std::filesystem::path analysis_path() { return cache_dir() / "analysis.json"; }
    std::filesystem::path embedding_path() { return cache_dir() / "embedding.json"; }
    std::filesystem::path layouts_dir() { return cache_dir() / "layouts"; }

    std::vector<int> levels_for(const FactorTable& table) {
        std::vector<int> levels;
        for (const auto& id : table.speech_ids()) {
            const SpeechRecord* s = corpus().find(id);
            if (!s) throw Error("cached factor table lists unknown speech '" + id + "'");
            levels.push_back(s->level);
        }
        return levels;
    }

    /// Reads the cached table or computes and caches it.
    const FactorTable& factors() {
        if (factors_) return *factors_;
        if (std::filesystem::exists(factors_path())) {
            factors_ = factor_table_from_csv(read_file(factors_path()));
        } else {
            factors_ = compute_factor_table(corpus(), {config_.final_mode});
            write_file(factors_path(), to_csv(*factors_));
        }
        return *factors_;
    }

    const AnalysisReport& analysis() {
        if (analysis_) return *analysis_;
        if (std::filesystem::exists(analysis_path())) {
            analysis_ = analysis_from_json(nlohmann::json::parse(read_file(analysis_path())));
            analysis_->significance = config_.significance;
        } else {
            const auto& table = factors();
            analysis_ = analyze_all(table, levels_for(table), config_.significance);
            write_file(analysis_path(), to_json(*analysis_).dump(2) + "\n");
        }
        return *analysis_;
    }

    const EmbeddingResult& embedding() {
        if (embedding_) return *embedding_;
        if (std::filesystem::exists(embedding_path())) {
            embedding_ = embedding_from_json(nlohmann::json::parse(read_file(embedding_path())));
        } else {
            embedding_ = embed_speeches(factors(), analysis(), corpus(), config_.tsne);
            write_file(embedding_path(), to_json(*embedding_).dump(2) + "\n");
        }
        return *embedding_;
    }

    /// Writes every per-speech and per-factor layout (JSON and SVG). Returns
    /// the number of layout documents written.
    std::size_t write_layouts() {
        const auto dir = layouts_dir();
        std::size_t written = 0;
        auto emit = [&](const std::string& stem, const auto& layout) {
            write_file(dir / (stem + ".json"), to_json(layout).dump(1) + "\n");
            write_file(dir / (stem + ".svg"), render_svg(layout));
            ++written;
        };
        for (const auto& s : corpus().records()) {
            emit(s.id + ".spiral", spiral_layout(accumulate_intervals(s, config_.spiral.interval_s), config_.spiral));
            if (!s.words.empty() && !s.sentences.empty()) emit(s.id + ".script", script_layout(s, config_.script));
            emit(s.id + ".type", type_layout(s, config_.type));
        }
        const auto& table = factors();
        const auto levels = levels_for(table);
        for (const auto& name : table.factor_names()) {
            StripLayout strip;
            try {
                strip = factor_strip_layout(table, name, levels);
            } catch (const Error&) {
                continue;
            }
            emit(name + ".factor-strip", strip);
            const FactorAnalysis* fa = analysis().find(name);
            if (fa && fa->fit.converged && strip.domain_min < strip.domain_max) {
                emit(name + ".distribution", distribution_layout(fa->fit, strip.domain_min, strip.domain_max));
            }
        }
        return written;
    }

    /// Everything the service needs, computed or read from cache.
    Artifacts artifacts() {
        Artifacts a;
        a.config = config_;
        a.corpus = corpus();
        a.factors = factors();
        a.levels = levels_for(a.factors);
        a.analysis = analysis();
        try {
            a.embedding = embedding();
        } catch (const Error& e) {
            a.embedding_error = e.what();
        }
        return a;
    }

private:
    std::filesystem::path corpus_dir_;
    std::filesystem::path out_dir_;
    Config config_;
    std::string digest_;
    std::optional<Corpus> corpus_;
    std::optional<FactorTable> factors_;
    std::optional<AnalysisReport> analysis_;
    std::optional<EmbeddingResult> embedding_;
};

} // namespace speecheff

#endif // SPEECHEFF_WORKSPACE_HPP
