#include "support.hpp"

#include <speecheff/service.hpp>

#include <gtest/gtest.h>

#include <thread>

using namespace speecheff;
using namespace testing_support;

namespace {

struct Fixture {
    TempDir root{"speecheff-service"};
    fs::path corpus_dir = root / "corpus";
    fs::path out_dir = root / "cache";
    std::unique_ptr<Service> service;

    Fixture() {
        Corpus c = synth_corpus(SynthConfig{}, 7);
        // One speech without a transcript exercises the script 422 path.
        SpeechRecord bare = make_speech("bare-speech", std::vector<double>(30, 0.1), 1.0, 2);
        bare.words.clear();
        bare.sentences.clear();
        bare.script.clear();
        std::vector<SpeechRecord> records = c.records();
        records.push_back(bare);
        save_corpus(Corpus(records, c.familiar_words()), corpus_dir);
        Workspace ws(corpus_dir, out_dir);
        service = std::make_unique<Service>(ws.artifacts());
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

const Service& svc() { return *fixture().service; }

nlohmann::json body(const Response& r) { return nlohmann::json::parse(r.body); }

void expect_schema(const Response& r, const std::string& schema, int status = 200) {
    EXPECT_EQ(r.status, status) << r.body.substr(0, 200);
    const auto errors = schema_errors(schema, body(r));
    EXPECT_TRUE(errors.empty()) << schema << ": " << (errors.empty() ? "" : errors.front());
}

std::string first_id() {
    for (const auto& s : svc().artifacts().corpus.records()) {
        if (!s.words.empty()) return s.id;
    }
    return {};
}

} // namespace

// ---------------------------------------------------------------------------
// Config and cache
// ---------------------------------------------------------------------------

TEST(Config, DefaultsAndOverrides) {
    const Config d = config_from_json(nlohmann::json::object());
    EXPECT_DOUBLE_EQ(d.significance, 0.05);
    EXPECT_DOUBLE_EQ(d.tsne.perplexity, 10.0);
    EXPECT_EQ(d.tsne.iterations, 1000);
    EXPECT_DOUBLE_EQ(d.spiral.flip_threshold, 10.0);
    const Config c = config_from_json(nlohmann::json::parse(
        R"({"significance": 0.01, "final_mode": "window_mean", "tsne": {"perplexity": 5, "seed": 3}, "spiral": {"r_0": 0.2}})"));
    EXPECT_DOUBLE_EQ(c.significance, 0.01);
    EXPECT_EQ(c.final_mode, FinalMode::window_mean);
    EXPECT_DOUBLE_EQ(c.tsne.perplexity, 5.0);
    EXPECT_EQ(c.tsne.seed, 3u);
    EXPECT_DOUBLE_EQ(c.spiral.start_radius(), 0.2);
    EXPECT_EQ(to_json(config_from_json(nlohmann::json::parse(to_json(c).dump()))).dump(), to_json(c).dump());
}

TEST(Config, Rejections) {
    auto message = [](const std::string& text) {
        try {
            config_from_json(nlohmann::json::parse(text));
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message(R"({"tsne": {"foo": 1}})").find("tsne.foo"), std::string::npos);
    EXPECT_NE(message(R"({"bogus": 1})").find("bogus"), std::string::npos);
    EXPECT_FALSE(message(R"({"tsne": {"iterations": 100}})").empty());
    EXPECT_FALSE(message(R"({"final_mode": "median"})").empty());
    EXPECT_FALSE(message(R"({"significance": "high"})").empty());
    EXPECT_FALSE(message(R"({"synth": {"speeches_per_level": 0}})").empty());
    TempDir t;
    spit(t / "bad.json", "{not json");
    EXPECT_THROW(load_config(t / "bad.json"), Error);
    EXPECT_THROW(load_config(t / "missing.json"), Error);
}

TEST(Digest, Sha256KnownVector) {
    Sha256 sha;
    sha.update("abc");
    EXPECT_EQ(sha.hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, TracksCorpusAndConfig) {
    TempDir t;
    save_corpus(load_corpus(fixture_corpus()), t / "c");
    Workspace a(fixture_corpus(), t / "out");
    Workspace b(t / "c", t / "out");
    EXPECT_EQ(a.digest(), b.digest());
    EXPECT_EQ(a.cache_dir(), b.cache_dir());
    EXPECT_EQ(a.cache_dir().filename().string().size(), 16u);

    Config other;
    other.tsne.seed = 99;
    EXPECT_NE(Workspace(t / "c", t / "out", other).digest(), a.digest());
    Config synth_only;
    synth_only.synth.speeches_per_level = 3;
    EXPECT_EQ(Workspace(t / "c", t / "out", synth_only).digest(), a.digest());

    const auto file = t / "c" / "speech-L1-01.json";
    auto j = nlohmann::json::parse(slurp(file));
    j["year"] = j["year"].get<int>() + 1;
    spit(file, j.dump(1) + "\n");
    EXPECT_NE(Workspace(t / "c", t / "out").digest(), a.digest());
}

TEST(Workspace, CachesAndReloads) {
    auto& f = fixture();
    Workspace again(f.corpus_dir, f.out_dir);
    ASSERT_TRUE(fs::exists(again.factors_path()));
    ASSERT_TRUE(fs::exists(again.analysis_path()));
    ASSERT_TRUE(fs::exists(again.embedding_path()));
    const Service reloaded(again.artifacts());
    for (const std::string& path : std::vector<std::string>{"/api/factors", "/api/analysis", "/api/embedding",
                                   "/api/analysis/facial_arousal_average/distribution", "/api/radar/" + first_id()}) {
        EXPECT_TRUE(reloaded.handle("GET", path).body == svc().handle("GET", path).body) << path;
    }
}

TEST(Workspace, AnalyzeComputesMissingFactors) {
    TempDir t;
    Workspace ws(fixture_corpus(), t / "out");
    EXPECT_FALSE(fs::exists(ws.factors_path()));
    ws.analysis();
    EXPECT_TRUE(fs::exists(ws.factors_path()));
    EXPECT_TRUE(fs::exists(ws.analysis_path()));
}

TEST(Workspace, WritesLayouts) {
    TempDir t;
    Workspace ws(fixture_corpus(), t / "out");
    const std::size_t n = ws.write_layouts();
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(ws.layouts_dir())) files += e.is_regular_file() ? 1 : 0;
    EXPECT_EQ(files, 2 * n);
    EXPECT_TRUE(fs::exists(ws.layouts_dir() / "speech-L1-01.spiral.svg"));
    EXPECT_TRUE(fs::exists(ws.layouts_dir() / "speech-L5-01.type.json"));
    EXPECT_TRUE(fs::exists(ws.layouts_dir() / "speech-L3-01.script.json"));
}

// ---------------------------------------------------------------------------
// Endpoints
// ---------------------------------------------------------------------------

TEST(Service, SpeechList) {
    const auto all = svc().handle("GET", "/api/speeches");
    expect_schema(all, "speech-list");
    EXPECT_EQ(body(all).size(), 41u);
    const auto top = svc().handle("GET", "/api/speeches", {{"level", "5"}});
    expect_schema(top, "speech-list");
    EXPECT_EQ(body(top).size(), 8u);
    for (const auto& s : body(top)) EXPECT_EQ(s["level"], 5);
    const std::string country = body(all)[0]["country"];
    const auto by_country = svc().handle("GET", "/api/speeches", {{"country", country}, {"level", "1"}});
    for (const auto& s : body(by_country)) {
        EXPECT_EQ(s["country"], country);
        EXPECT_EQ(s["level"], 1);
    }
    EXPECT_EQ(body(svc().handle("GET", "/api/speeches", {{"country", "ZZ"}})).size(), 0u);
}

TEST(Service, SpeechListValidation) {
    for (const std::string& bad : std::vector<std::string>{"0", "6", "x", "2.5", ""}) {
        expect_schema(svc().handle("GET", "/api/speeches", {{"level", bad}}), "error", 400);
    }
    expect_schema(svc().handle("GET", "/api/speeches", {{"sort", "year"}}), "error", 400);
}

TEST(Service, SpeechDetail) {
    expect_schema(svc().handle("GET", "/api/speeches/" + first_id()), "speech");
    expect_schema(svc().handle("GET", "/api/speeches/nope"), "error", 404);
}

TEST(Service, Factors) {
    const auto j = svc().handle("GET", "/api/factors");
    expect_schema(j, "factors");
    const auto csv = svc().handle("GET", "/api/factors", {}, "text/csv");
    EXPECT_EQ(csv.status, 200);
    EXPECT_EQ(csv.content_type, "text/csv");
    EXPECT_EQ(csv.body, to_csv(svc().artifacts().factors));
    EXPECT_EQ(svc().handle("GET", "/api/factors", {}, "text/html, text/csv;q=0.9").content_type, "text/csv");
    EXPECT_EQ(svc().handle("GET", "/api/factors", {}, "*/*").content_type, "application/json");
}

TEST(Service, Analysis) {
    const auto r = svc().handle("GET", "/api/analysis");
    expect_schema(r, "analysis");
    EXPECT_EQ(body(r)[0]["factor"], "facial_arousal_average");
    expect_schema(svc().handle("GET", "/api/analysis/facial_arousal_average/distribution"), "distribution");
    expect_schema(svc().handle("GET", "/api/analysis/no_such/distribution"), "error", 404);
}

TEST(Service, DistributionOfPlantedFactorIsMonotone) {
    const auto d = body(svc().handle("GET", "/api/analysis/facial_arousal_average/distribution"));
    const auto& top = d["curves"][4]["y"];
    for (std::size_t i = 1; i < top.size(); ++i) EXPECT_GE(top[i].get<double>(), top[i - 1].get<double>());
    for (std::size_t i = 0; i < d["x"].size(); ++i) {
        double sum = 0.0;
        for (const auto& c : d["curves"]) sum += c["y"][i].get<double>();
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Service, EmbeddingAndRadar) {
    expect_schema(svc().handle("GET", "/api/embedding"), "embedding");
    expect_schema(svc().handle("GET", "/api/radar/" + first_id()), "radar");
    expect_schema(svc().handle("GET", "/api/radar/nope"), "error", 404);
}

TEST(Service, Layouts) {
    const std::string id = first_id();
    expect_schema(svc().handle("GET", "/api/layout/spiral/" + id), "spiral");
    expect_schema(svc().handle("GET", "/api/layout/script/" + id), "script");
    expect_schema(svc().handle("GET", "/api/layout/type/" + id), "type");
    expect_schema(svc().handle("GET", "/api/layout/factor-strip/facial_arousal_average"), "factor-strip");
    expect_schema(svc().handle("GET", "/api/layout/spiral/nope"), "error", 404);
    expect_schema(svc().handle("GET", "/api/layout/radial/" + id), "error", 404);
    expect_schema(svc().handle("GET", "/api/layout/factor-strip/nope"), "error", 404);
    expect_schema(svc().handle("GET", "/api/layout/script/bare-speech"), "error", 422);
    expect_schema(svc().handle("GET", "/api/layout/spiral/bare-speech"), "spiral");
}

TEST(Service, RoutingErrors) {
    expect_schema(svc().handle("GET", "/api/nothing"), "error", 404);
    expect_schema(svc().handle("GET", "/api"), "error", 404);
    expect_schema(svc().handle("POST", "/api/analysis"), "error", 405);
    expect_schema(svc().handle("GET", "/index.html"), "error", 404);
}

TEST(Service, UnavailableEmbeddingAndUnfittedFactor) {
    Artifacts a = svc().artifacts();
    a.embedding.reset();
    a.embedding_error = "only 3 usable factors";
    a.analysis.factors.erase(a.analysis.factors.begin());
    const Service s(std::move(a));
    const auto r = s.handle("GET", "/api/embedding");
    expect_schema(r, "error", 422);
    EXPECT_NE(r.body.find("only 3 usable factors"), std::string::npos);
    expect_schema(s.handle("GET", "/api/analysis/facial_arousal_average/distribution"), "error", 422);
}

TEST(Service, RepeatedRequestsAreByteIdentical) {
    for (const std::string& path : std::vector<std::string>{"/api/speeches", "/api/factors", "/api/analysis", "/api/embedding",
                                   "/api/layout/type/" + first_id(), "/api/radar/" + first_id()}) {
        EXPECT_TRUE(svc().handle("GET", path).body == svc().handle("GET", path).body) << path;
    }
}

TEST(Service, StaticFiles) {
    TempDir ui;
    spit(ui / "index.html", "<html>ui</html>");
    spit(ui / "js" / "app.js", "console.log(1);");
    spit(ui.path().parent_path() / "secret.txt", "x");
    const Service s(svc().artifacts(), ui.path());
    const auto index = s.handle("GET", "/");
    EXPECT_EQ(index.status, 200);
    EXPECT_EQ(index.content_type, "text/html");
    EXPECT_EQ(index.body, "<html>ui</html>");
    EXPECT_EQ(s.handle("GET", "/js/app.js").content_type, "text/javascript");
    EXPECT_EQ(s.handle("GET", "/../secret.txt").status, 404);
    EXPECT_EQ(s.handle("GET", "/missing.css").status, 404);
    fs::remove(ui.path().parent_path() / "secret.txt");
}

TEST(Service, OverHttp) {
    httplib::Server server;
    bind_service(server, svc());
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    const auto analysis = client.Get("/api/analysis");
    ASSERT_TRUE(analysis);
    EXPECT_EQ(analysis->status, 200);
    EXPECT_EQ(analysis->get_header_value("Content-Type"), "application/json");
    EXPECT_TRUE(analysis->body == svc().handle("GET", "/api/analysis").body);
    const auto filtered = client.Get("/api/speeches?level=3");
    ASSERT_TRUE(filtered);
    EXPECT_EQ(nlohmann::json::parse(filtered->body).size(), 8u);
    const auto bad = client.Get("/api/speeches?level=9");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    const auto csv = client.Get("/api/factors", {{"Accept", "text/csv"}});
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
    const auto missing = client.Get("/api/speeches/nope");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    server.stop();
    worker.join();
}
