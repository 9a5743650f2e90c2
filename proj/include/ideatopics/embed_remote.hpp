#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ideatopics/embed.hpp"

namespace ideatopics {

struct RemoteEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // request path, "/" when absent
};

inline RemoteEndpoint parse_endpoint(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ArgumentError("endpoint must be an absolute URL: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

struct RemoteOptions {
    std::size_t batch_size = 32;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::seconds timeout{30};
};

// Client for the embedding service wire protocol:
//   POST {"texts": [...]}  ->  200 {"embeddings": [[...], ...]}
// Batches are sent in input order. A batch is attempted once plus up to
// max_retries retries, sleeping backoff_base * 2^attempt between them.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RemoteEmbeddingProvider(std::string endpoint, RemoteOptions options = {},
                            Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
        : endpoint_(std::move(endpoint)), options_(options), sleeper_(std::move(sleeper)) {
        if (options_.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
        parse_endpoint(endpoint_);
    }

    EmbeddingMatrix embed(const std::vector<std::string>& texts) const override {
        if (texts.empty()) throw ArgumentError("fetch_remote_embeddings: no texts");
        const auto ep = parse_endpoint(endpoint_);
        httplib::Client client(ep.base);
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);

        EmbeddingMatrix out;
        out.ids = texts;
        for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
            const std::size_t end = std::min(texts.size(), start + options_.batch_size);
            const std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
            for (const auto& row : fetch_batch(client, ep.path, batch)) {
                if (out.data.rows() > 0 && row.size() != out.dim())
                    throw TransportError("embedding service changed dimension between batches");
                out.data.append_row(row);
            }
        }
        return out;
    }

    std::string describe() const override {
        return "http(" + endpoint_ + ",batch=" + std::to_string(options_.batch_size) + ")";
    }

private:
    std::vector<std::vector<double>> fetch_batch(httplib::Client& client, const std::string& path,
                                                 const std::vector<std::string>& batch) const {
        const std::string body = nlohmann::json{{"texts", batch}}.dump();
        std::string last_error;
        for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
            if (attempt > 0) sleeper_(options_.backoff_base * (1 << (attempt - 1)));
            auto res = client.Post(path, body, "application/json");
            if (!res) {
                last_error = "request failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error&) {
                last_error = "response is not valid JSON";
                continue;
            }
            const auto emb = doc.find("embeddings");
            if (!doc.is_object() || emb == doc.end() || !emb->is_array()) {
                last_error = "response lacks \"embeddings\" array";
                continue;
            }
            if (emb->size() != batch.size()) {
                throw ProtocolError("embedding service returned " + std::to_string(emb->size()) +
                                    " rows for " + std::to_string(batch.size()) + " texts");
            }
            std::vector<std::vector<double>> rows;
            bool ok = true;
            for (const auto& r : *emb) {
                if (!r.is_array() || r.size() < 2) {
                    ok = false;
                    break;
                }
                std::vector<double> v;
                for (const auto& x : r) {
                    if (!x.is_number() || !std::isfinite(x.get<double>())) {
                        ok = false;
                        break;
                    }
                    v.push_back(x.get<double>());
                }
                if (!ok || (!rows.empty() && v.size() != rows.front().size())) {
                    ok = false;
                    break;
                }
                rows.push_back(std::move(v));
            }
            if (!ok) {
                last_error = "dimension mismatch or non-finite values in response";
                continue;
            }
            return rows;
        }
        throw TransportError("embedding service failed after " + std::to_string(options_.max_retries) +
                             " retries: " + last_error);
    }

    std::string endpoint_;
    RemoteOptions options_;
    Sleeper sleeper_;
};

inline EmbeddingMatrix fetch_remote_embeddings(const std::string& endpoint,
                                               const std::vector<std::string>& texts,
                                               std::size_t batch_size) {
    RemoteOptions opts;
    opts.batch_size = batch_size;
    return embed_texts(RemoteEmbeddingProvider(endpoint, opts), texts);
}

}  // namespace ideatopics
