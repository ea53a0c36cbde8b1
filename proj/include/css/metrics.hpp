#ifndef CSS_METRICS_HPP
#define CSS_METRICS_HPP

#include "css/audio.hpp"
#include "css/simulator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace css {

inline constexpr double kDbCap = 60.0;

enum class Metric { Snr, SiSdr };

// 10*log10(|s|^2 / |s - est|^2), capped at +/-60 dB
double snr(const Waveform& ref, const Waveform& est);

// scale-invariant SDR: project est onto ref, then SDR of projection vs residual
double si_sdr(const Waveform& ref, const Waveform& est);

double compute_metric(Metric m, const Waveform& ref, const Waveform& est);

// (time with >= 2 active speakers) / (time with >= 1 active speaker)
double overlap_ratio(const RecordingScript& script);
double overlap_ratio(const RecordingScript& script, double win_start, double win_end);

// Table-style overlap buckets: 0, (0,25], (25,50], (50,75], (75,100] percent.
int overlap_bucket(double ratio);
std::string bucket_label(int bucket);

// Best permutation over the two outputs; single-active-truth segments score
// only the active reference against its best-matching output.
// Returns nullopt when both truths are silent.
std::optional<double> eval_segment(const std::array<Waveform, 2>& outputs,
                                   const std::array<Waveform, 2>& truth, Metric metric);

struct UtteranceScore {
    int speaker_id = 0;
    double onset = 0.0;
    double offset = 0.0;
    double score_db = 0.0;
    int best_stream = 0;
};

struct EvalReport {
    std::vector<UtteranceScore> utterances;
    double mean_db = 0.0;
    Metric metric = Metric::SiSdr;

    std::string to_text() const;
};

EvalReport eval_utterances(const std::array<Waveform, 2>& streams,
                           const SimulatedRecording& recording, Metric metric);

// Segment-wise report grouped by overlap bucket (4 s windows over the script).
struct SegmentBucketReport {
    std::array<std::vector<double>, 5> bucket_scores;
    double mean_db = 0.0;
    Metric metric = Metric::Snr;

    std::string to_text() const;
};

SegmentBucketReport eval_segments_bucketed(const std::array<Waveform, 2>& streams,
                                           const SimulatedRecording& recording, Metric metric,
                                           double window_s = 4.0);

} // namespace css

#endif
