#pragma once

#include <memory>

#include "ideatopics/embed.hpp"
#include "ideatopics/embed_remote.hpp"
#include "ideatopics/pipeline.hpp"

namespace ideatopics {

inline std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg) {
    if (cfg.provider == "hash") return std::make_unique<HashEmbeddingProvider>(cfg.dim, cfg.embedding_seed());
    if (cfg.provider == "file")
        return std::make_unique<PrecomputedEmbeddingProvider>(PrecomputedEmbeddingProvider::from_file(cfg.embeddings_file));
    if (cfg.provider == "http") {
        RemoteOptions opts;
        opts.batch_size = cfg.batch_size;
        try {
            return std::make_unique<RemoteEmbeddingProvider>(cfg.endpoint, opts);
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string("endpoint: ") + e.what());
        }
    }
    throw ConfigError("provider: expected hash, file or http, got '" + cfg.provider + "'");
}

}  // namespace ideatopics
