#ifndef SPEECHEFF_SERVICE_HPP
#define SPEECHEFF_SERVICE_HPP

/**
 * @file service.hpp
 *
 * Read-only HTTP API over precomputed artifacts.
 *
 * Service::handle() is a pure function of the request, which keeps routing
 * testable without sockets. run_server() wires it into cpp-httplib.
 */

#include "workspace.hpp"

#include <httplib.h>

#include <map>

namespace speecheff {

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

inline Response json_response(const nlohmann::ordered_json& j, int status = 200) {
    return {status, "application/json", j.dump() + "\n"};
}

inline Response error_response(int status, const std::string& message) {
    return json_response(nlohmann::ordered_json{{"error", message}}, status);
}

using Query = std::multimap<std::string, std::string>;

class Service {
public:
    explicit Service(Artifacts artifacts, std::optional<std::filesystem::path> static_root = std::nullopt)
        : a_(std::move(artifacts)), static_root_(std::move(static_root)) {
        precompute();
    }

    const Artifacts& artifacts() const { return a_; }

    Response handle(std::string_view method, std::string_view path, const Query& query = {},
                    std::string_view accept = "application/json") const {
        if (method != "GET" && method != "HEAD") return error_response(405, "method not allowed");
        if (path.starts_with("/api/") || path == "/api") return route_api(path, query, accept);
        return serve_static(path);
    }

private:
    static std::vector<std::string> split_path(std::string_view path) {
        std::vector<std::string> parts;
        std::size_t i = 0;
        while (i < path.size()) {
            while (i < path.size() && path[i] == '/') ++i;
            const std::size_t j = path.find('/', i);
            const std::size_t end = j == std::string_view::npos ? path.size() : j;
            if (end > i) parts.emplace_back(path.substr(i, end - i));
            i = end;
        }
        return parts;
    }

    static const std::string* find_one(const std::map<std::string, std::string>& m, const std::string& key) {
        auto it = m.find(key);
        return it == m.end() ? nullptr : &it->second;
    }

    void precompute() {
        const auto& records = a_.corpus.records();
        for (const auto& s : records) {
            speech_meta_.push_back(speech_metadata(s));
            speech_detail_[s.id] = to_json(s).dump() + "\n";
            spiral_[s.id] = to_json(spiral_layout(accumulate_intervals(s, a_.config.spiral.interval_s), a_.config.spiral)).dump() + "\n";
            type_[s.id] = to_json(type_layout(s, a_.config.type)).dump() + "\n";
            if (!s.words.empty() && !s.sentences.empty()) {
                script_[s.id] = to_json(script_layout(s, a_.config.script)).dump() + "\n";
            }
        }
        factors_csv_ = to_csv(a_.factors);
        factors_json_ = to_json(a_.factors).dump() + "\n";
        analysis_json_ = to_json(a_.analysis).dump() + "\n";
        if (a_.embedding) embedding_json_ = to_json(*a_.embedding).dump() + "\n";

        for (const auto& name : a_.factors.factor_names()) {
            StripLayout strip;
            try {
                strip = factor_strip_layout(a_.factors, name, a_.levels);
            } catch (const Error& e) {
                factor_errors_[name] = e.what();
                continue;
            }
            strip_[name] = to_json(strip).dump() + "\n";
            const FactorAnalysis* fa = a_.analysis.find(name);
            if (!fa) {
                factor_errors_[name] = "factor '" + name + "' was not fitted";
            } else if (!fa->fit.converged) {
                factor_errors_[name] = "fit for '" + name + "' did not converge";
            } else if (!(strip.domain_min < strip.domain_max)) {
                factor_errors_[name] = "factor '" + name + "' has a degenerate domain";
            } else {
                distribution_[name] = to_json(distribution_layout(fa->fit, strip.domain_min, strip.domain_max)).dump() + "\n";
            }
        }
        for (const auto& s : records) {
            if (a_.factors.row_index(s.id)) {
                radar_[s.id] = to_json(radar(s.id, a_.factors, a_.analysis, s.level)).dump() + "\n";
            }
        }
    }

    Response route_api(std::string_view path, const Query& query, std::string_view accept) const {
        const auto parts = split_path(path);
        const std::size_t n = parts.size();
        auto cached = [](const std::string* body, int missing_status, const std::string& missing) {
            if (!body) return error_response(missing_status, missing);
            return Response{200, "application/json", *body};
        };
        if (n == 2 && parts[1] == "speeches") return list_speeches(query);
        if (n == 3 && parts[1] == "speeches") return cached(find_one(speech_detail_, parts[2]), 404, "unknown speech '" + parts[2] + "'");
        if (n == 2 && parts[1] == "factors") {
            if (accept.find("text/csv") != std::string_view::npos) return {200, "text/csv", factors_csv_};
            return {200, "application/json", factors_json_};
        }
        if (n == 2 && parts[1] == "analysis") return {200, "application/json", analysis_json_};
        if (n == 4 && parts[1] == "analysis" && parts[3] == "distribution") {
            if (const auto* body = find_one(distribution_, parts[2])) return {200, "application/json", *body};
            if (const auto* why = find_one(factor_errors_, parts[2])) return error_response(422, *why);
            return error_response(404, "unknown factor '" + parts[2] + "'");
        }
        if (n == 2 && parts[1] == "embedding") {
            if (!a_.embedding) return error_response(422, "embedding unavailable: " + a_.embedding_error);
            return {200, "application/json", embedding_json_};
        }
        if (n == 3 && parts[1] == "radar") return cached(find_one(radar_, parts[2]), 404, "unknown speech '" + parts[2] + "'");
        if (n == 4 && parts[1] == "layout") {
            const std::string& kind = parts[2];
            const std::string& key = parts[3];
            if (kind == "factor-strip") {
                if (const auto* body = find_one(strip_, key)) return {200, "application/json", *body};
                if (const auto* why = find_one(factor_errors_, key)) return error_response(422, *why);
                return error_response(404, "unknown factor '" + key + "'");
            }
            const std::map<std::string, std::string>* table = nullptr;
            if (kind == "spiral") table = &spiral_;
            else if (kind == "script") table = &script_;
            else if (kind == "type") table = &type_;
            else return error_response(404, "unknown layout '" + kind + "'");
            if (const auto* body = find_one(*table, key)) return {200, "application/json", *body};
            if (speech_detail_.contains(key)) return error_response(422, "speech '" + key + "' has no words for a script layout");
            return error_response(404, "unknown speech '" + key + "'");
        }
        return error_response(404, "no such endpoint '" + std::string(path) + "'");
    }

    Response list_speeches(const Query& query) const {
        std::optional<std::string> country;
        std::optional<int> level;
        for (const auto& [key, value] : query) {
            if (key == "country") {
                country = value;
            } else if (key == "level") {
                int v = 0;
                const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
                if (ec != std::errc() || ptr != value.data() + value.size() || v < 1 || v > kLevelCount) {
                    return error_response(400, "level must be an integer in 1..5");
                }
                level = v;
            } else {
                return error_response(400, "unknown query parameter '" + key + "'");
            }
        }
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& m : speech_meta_) {
            if (country && m["country"].get<std::string>() != *country) continue;
            if (level && m["level"].get<int>() != *level) continue;
            out.push_back(m);
        }
        return json_response(out);
    }

    static std::string mime_type(const std::filesystem::path& p) {
        const auto ext = p.extension().string();
        if (ext == ".html") return "text/html";
        if (ext == ".js" || ext == ".mjs") return "text/javascript";
        if (ext == ".css") return "text/css";
        if (ext == ".json") return "application/json";
        if (ext == ".svg") return "image/svg+xml";
        if (ext == ".png") return "image/png";
        return "application/octet-stream";
    }

    Response serve_static(std::string_view path) const {
        if (!static_root_) return error_response(404, "no UI bundle configured");
        std::filesystem::path rel;
        for (const auto& part : split_path(path)) {
            if (part == "..") return error_response(404, "not found");
            rel /= part;
        }
        auto file = *static_root_ / rel;
        if (rel.empty() || std::filesystem::is_directory(file)) file /= "index.html";
        if (!std::filesystem::is_regular_file(file)) return error_response(404, "not found");
        return {200, mime_type(file), read_file(file)};
    }

    Artifacts a_;
    std::optional<std::filesystem::path> static_root_;
    std::vector<nlohmann::ordered_json> speech_meta_;
    std::map<std::string, std::string> speech_detail_, spiral_, script_, type_, radar_, strip_, distribution_, factor_errors_;
    std::string factors_csv_, factors_json_, analysis_json_, embedding_json_;
};

inline void bind_service(httplib::Server& server, const Service& service) {
    server.Get(".*", [&service](const httplib::Request& req, httplib::Response& res) {
        Query query(req.params.begin(), req.params.end());
        const Response r = service.handle("GET", req.path, query, req.get_header_value("Accept"));
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    });
}

/// Blocks until the server is stopped.
inline void run_server(const Service& service, const std::string& host, int port) {
    httplib::Server server;
    bind_service(server, service);
    if (!server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
    server.listen_after_bind();
}

} // namespace speecheff

#endif // SPEECHEFF_SERVICE_HPP
