#ifndef CSS_EMBEDDER_HPP
#define CSS_EMBEDDER_HPP

#include "css/audio.hpp"

#include <vector>

namespace css {

inline constexpr int kEmbedDim = 128;
inline constexpr int kEmbedFrameSamples = 640; // 40 ms at 16 kHz, no overlap
inline constexpr double kEmbedFrameHop = 0.04;
inline constexpr double kChunkSeconds = 1.2; // 30 frames
inline constexpr double kSilenceRms = 1e-4;

// Unit-norm K-dimensional speaker vector.
struct Embedding {
    Eigen::VectorXd vector;

    Embedding() = default;
    explicit Embedding(Eigen::VectorXd v);

    double dot(const Embedding& other) const { return vector.dot(other.vector); }
};

// T x K frame embeddings; silent frames carry an all-zero row and a flag.
struct EmbeddingSequence {
    Eigen::MatrixXd frames;
    std::vector<bool> silent;
    double frame_hop = kEmbedFrameHop;
    double source_duration = 0.0;

    Eigen::Index num_frames() const { return frames.rows(); }
    Eigen::Index num_voiced() const;
};

struct ChunkEmbeddings {
    std::vector<std::pair<int, Embedding>> chunks; // (chunk_index, pooled embedding)
    std::vector<int> silent_indices;
};

// Deterministic 128-dim spectral fingerprint per 40 ms frame:
// 64 log-mel energies, 32 harmonic-comb correlations (F0 grid 60-400 Hz),
// 16 spectral-shape statistics, 16 modulation features; fixed
// standardization then unit normalization.
EmbeddingSequence embed_frames(const Waveform& w);

// Mean of non-silent rows, re-normalized.
Embedding mean_pool(const EmbeddingSequence& seq);

// Non-overlapping chunks; silent chunks omitted and flagged.
ChunkEmbeddings chunk_embeddings(const Waveform& w, double chunk_seconds = kChunkSeconds);

} // namespace css

#endif
