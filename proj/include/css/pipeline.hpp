#ifndef CSS_PIPELINE_HPP
#define CSS_PIPELINE_HPP

#include "css/separator.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace css {

struct SegmentPlan {
    double window = 4.0;
    double hop = 3.0;
    std::vector<std::pair<double, double>> segments; // (start, end) seconds

    std::size_t size() const { return segments.size(); }
};

SegmentPlan plan_segments(double duration, double window = 4.0, double hop = 3.0);

enum class StitchPermutation { Identity, Swap };
enum class StitchSimilarity { Waveform, Spectrogram };

// Decide how next_out's channels align with prev_out's over the shared
// overlap region. Silent overlaps fall back to identity (keep previous
// assignment).
StitchPermutation stitch_pair(const std::array<Waveform, 2>& prev_tail,
                              const std::array<Waveform, 2>& next_head,
                              StitchSimilarity similarity = StitchSimilarity::Waveform);

enum class BackendKind { OracleIrm, Affinity };

struct CssConfig {
    int m = 4; // cluster count for self inventory
    std::uint64_t seed = 0;
    BackendKind backend = BackendKind::Affinity;
    double window = 4.0;
    double hop = 3.0;
    StitchSimilarity stitch_similarity = StitchSimilarity::Waveform;
    // optional enrolled inventory; self-clustering is used when absent
    std::optional<SpeakerInventory> enrolled;
    // ground-truth sources, required by the oracle backend
    const SimulatedRecording* truth = nullptr;
};

struct SegmentLog {
    double start = 0.0;
    double end = 0.0;
    int p1_index = -1;
    int p2_index = -1;
    std::vector<std::pair<int, double>> top_scores; // top-5 (profile, weight)
    StitchPermutation permutation = StitchPermutation::Identity;
};

struct ContinuousStreams {
    std::array<Waveform, 2> streams;
    std::vector<SegmentLog> segment_logs;
    SpeakerInventory inventory;
};

ContinuousStreams run_css(const Waveform& recording, const CssConfig& config);

} // namespace css

#endif
