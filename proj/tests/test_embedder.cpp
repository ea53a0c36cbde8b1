#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "css/embedder.hpp"
#include "css/rng.hpp"
#include "css/simulator.hpp"

#include <vector>

using namespace css;

TEST_CASE("1.2 s of speech yields exactly 30 unit-norm frames") {
    const Waveform w = synth_speaker(0, 1.2, 1);
    const EmbeddingSequence seq = embed_frames(w);
    REQUIRE(seq.num_frames() == 30);
    REQUIRE(seq.frames.cols() == kEmbedDim);
    for (Eigen::Index t = 0; t < seq.num_frames(); ++t) {
        if (seq.silent[static_cast<std::size_t>(t)]) continue;
        CHECK(seq.frames.row(t).norm() == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(seq.num_voiced() > 0);
}

TEST_CASE("silent frames are flagged and zeroed") {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(3 * kEmbedFrameSamples);
    const Waveform voice = synth_speaker(2, 0.04, 3);
    s.segment(kEmbedFrameSamples, kEmbedFrameSamples) = voice.samples;
    const EmbeddingSequence seq = embed_frames(Waveform(s));
    REQUIRE(seq.num_frames() == 3);
    CHECK(seq.silent[0]);
    CHECK_FALSE(seq.silent[1]);
    CHECK(seq.silent[2]);
    CHECK(seq.frames.row(0).norm() == 0.0);
    CHECK(seq.num_voiced() == 1);
}

TEST_CASE("embed_frames rejects wrong rates and too-short input") {
    CHECK_THROWS(embed_frames(Waveform(Eigen::VectorXd::Ones(16000), 8000)));
    CHECK_THROWS(embed_frames(Waveform::zeros(100)));
}

TEST_CASE("shifting input by one hop shifts embedding rows by one") {
    const Waveform w = synth_speaker(4, 1.0, 9);
    const EmbeddingSequence a = embed_frames(w);
    Eigen::VectorXd shifted(w.size() + kEmbedFrameSamples);
    shifted.head(kEmbedFrameSamples).setZero();
    shifted.tail(w.size()) = w.samples;
    const EmbeddingSequence b = embed_frames(Waveform(shifted));
    REQUIRE(b.num_frames() == a.num_frames() + 1);
    for (Eigen::Index t = 0; t < a.num_frames(); ++t)
        CHECK((a.frames.row(t) - b.frames.row(t + 1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mean_pool equals an independent mean-then-normalize recomputation") {
    const Waveform w = synth_speaker(5, 1.2, 2);
    const EmbeddingSequence seq = embed_frames(w);
    const Embedding pooled = mean_pool(seq);

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(kEmbedDim);
    int n = 0;
    for (Eigen::Index t = 0; t < seq.num_frames(); ++t)
        if (!seq.silent[static_cast<std::size_t>(t)]) {
            acc += seq.frames.row(t).transpose();
            ++n;
        }
    REQUIRE(n > 0);
    acc /= n;
    acc.normalize();
    CHECK((pooled.vector - acc).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mean_pool of identical rows returns that row and rejects silence") {
    Rng rng = make_rng(3, "pool-test");
    Eigen::VectorXd v(kEmbedDim);
    for (int d = 0; d < kEmbedDim; ++d) v[d] = uniform(rng, -1.0, 1.0);
    v.normalize();
    EmbeddingSequence seq;
    seq.frames = v.transpose().replicate(5, 1);
    seq.silent.assign(5, false);
    CHECK((mean_pool(seq).vector - v).cwiseAbs().maxCoeff() < 1e-12);

    seq.silent.assign(5, true);
    CHECK_THROWS(mean_pool(seq));
}

TEST_CASE("chunk_embeddings splits into 1.2 s chunks and flags silent ones") {
    // 6 s: chunks 0..4; silence the middle chunk
    Waveform w = synth_speaker(1, 6.0, 4);
    w.samples.segment(2 * 19200, 19200).setZero();
    const ChunkEmbeddings ce = chunk_embeddings(w);
    CHECK(ce.chunks.size() == 4);
    REQUIRE(ce.silent_indices.size() == 1);
    CHECK(ce.silent_indices[0] == 2);

    const ChunkEmbeddings silent = chunk_embeddings(Waveform::zeros(4 * 19200));
    CHECK(silent.chunks.empty());
    CHECK(silent.silent_indices.size() == 4);
}

TEST_CASE("same-speaker chunks cohere and a 10-speaker panel separates") {
    std::vector<std::vector<Embedding>> emb(10);
    for (int id = 0; id < 10; ++id) {
        const ChunkEmbeddings ce = chunk_embeddings(synth_speaker(id, 12.0, 42 + id));
        for (const auto& [i, e] : ce.chunks) emb[id].push_back(e);
        REQUIRE(emb[id].size() >= 8);
    }
    double min_same = 2.0, max_diff = -2.0;
    for (int a = 0; a < 10; ++a)
        for (int b = a; b < 10; ++b)
            for (std::size_t i = 0; i < emb[a].size(); ++i)
                for (std::size_t j = (a == b ? i + 1 : 0); j < emb[b].size(); ++j) {
                    const double c = emb[a][i].dot(emb[b][j]);
                    if (a == b)
                        min_same = std::min(min_same, c);
                    else
                        max_diff = std::max(max_diff, c);
                }
    CHECK(min_same >= 0.9); // same-speaker coherence
    CHECK(min_same > max_diff); // strict separability on the panel
}
