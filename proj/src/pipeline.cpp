#include "css/pipeline.hpp"

#include "css/rng.hpp"

#include <algorithm>
#include <cmath>

namespace css {

namespace {

constexpr double kStitchSilenceRms = 1e-5;

double ncc(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return a.dot(b) / (na * nb);
}

double spec_mse(const Waveform& a, const Waveform& b) {
    const StftConfig c;
    if (a.size() < c.fft_size) return (a.samples - b.samples).squaredNorm();
    const Eigen::MatrixXd ma = stft(a, c).bins.cwiseAbs();
    const Eigen::MatrixXd mb = stft(b, c).bins.cwiseAbs();
    return (ma - mb).squaredNorm() / static_cast<double>(ma.size());
}

} // namespace

SegmentPlan plan_segments(double duration, double window, double hop) {
    if (window <= 0.0 || hop <= 0.0 || hop >= window)
        throw std::invalid_argument("need 0 < hop < window");
    SegmentPlan plan;
    plan.window = window;
    plan.hop = hop;
    if (duration < window) {
        plan.segments.emplace_back(0.0, duration);
        return plan;
    }
    double start = 0.0;
    while (start + window <= duration + 1e-9) {
        plan.segments.emplace_back(start, start + window);
        start += hop;
    }
    if (plan.segments.back().second < duration - 1e-9)
        plan.segments.emplace_back(duration - window, duration);
    return plan;
}

StitchPermutation stitch_pair(const std::array<Waveform, 2>& prev_tail,
                              const std::array<Waveform, 2>& next_head,
                              StitchSimilarity similarity) {
    if (prev_tail[0].size() != next_head[0].size() || prev_tail[1].size() != next_head[1].size())
        throw std::invalid_argument("overlap regions must have equal length");

    const bool prev_silent =
        prev_tail[0].rms() < kStitchSilenceRms && prev_tail[1].rms() < kStitchSilenceRms;
    const bool next_silent =
        next_head[0].rms() < kStitchSilenceRms && next_head[1].rms() < kStitchSilenceRms;
    if (prev_silent || next_silent) return StitchPermutation::Identity;

    if (similarity == StitchSimilarity::Spectrogram) {
        const double identity = spec_mse(prev_tail[0], next_head[0]) +
                                spec_mse(prev_tail[1], next_head[1]);
        const double swapped = spec_mse(prev_tail[0], next_head[1]) +
                               spec_mse(prev_tail[1], next_head[0]);
        return swapped < identity ? StitchPermutation::Swap : StitchPermutation::Identity;
    }
    const double identity =
        ncc(prev_tail[0].samples, next_head[0].samples) + ncc(prev_tail[1].samples, next_head[1].samples);
    const double swapped =
        ncc(prev_tail[0].samples, next_head[1].samples) + ncc(prev_tail[1].samples, next_head[0].samples);
    return swapped > identity ? StitchPermutation::Swap : StitchPermutation::Identity;
}

namespace {

Waveform slice(const Waveform& w, Eigen::Index a, Eigen::Index b) {
    return Waveform(w.samples.segment(a, b - a), w.sample_rate);
}

// two speakers with the most segment energy, by the ground-truth script
std::array<Waveform, 2> oracle_truth_slices(const SimulatedRecording& truth, Eigen::Index a,
                                            Eigen::Index b) {
    std::vector<std::pair<double, int>> energies;
    for (const auto& [id, src] : truth.clean_sources)
        energies.emplace_back(src.samples.segment(a, b - a).squaredNorm(), id);
    std::sort(energies.rbegin(), energies.rend());
    std::array<Waveform, 2> out{Waveform::zeros(b - a), Waveform::zeros(b - a)};
    for (int i = 0; i < 2 && i < static_cast<int>(energies.size()); ++i)
        if (energies[static_cast<std::size_t>(i)].first > 0.0)
            out[static_cast<std::size_t>(i)] =
                slice(truth.clean_sources.at(energies[static_cast<std::size_t>(i)].second), a, b);
    return out;
}

} // namespace

ContinuousStreams run_css(const Waveform& recording, const CssConfig& config) {
    const Eigen::Index total = recording.size();
    ContinuousStreams result;
    result.streams = {Waveform::zeros(total), Waveform::zeros(total)};

    if (recording.rms() < kSilenceRms) return result; // nothing to separate

    if (config.backend == BackendKind::OracleIrm && config.truth == nullptr)
        throw std::invalid_argument("oracle backend requires ground-truth recording");

    result.inventory = config.enrolled
                           ? *config.enrolled
                           : build_inventory_self(recording, config.m,
                                                  named_seed(config.seed, "inventory"));

    const SegmentPlan plan = plan_segments(recording.duration(), config.window, config.hop);

    std::array<Waveform, 2> prev_outputs; // previous segment outputs in stream order
    Eigen::Index prev_start = 0, prev_end = 0;

    for (std::size_t i = 0; i < plan.segments.size(); ++i) {
        const auto [start_s, end_s] = plan.segments[i];
        const Eigen::Index a = static_cast<Eigen::Index>(std::llround(start_s * recording.sample_rate));
        const Eigen::Index b = std::min<Eigen::Index>(
            static_cast<Eigen::Index>(std::llround(end_s * recording.sample_rate)), total);
        const Waveform segment = slice(recording, a, b);

        SegmentLog log;
        log.start = start_s;
        log.end = end_s;

        std::array<Waveform, 2> outputs{Waveform::zeros(b - a), Waveform::zeros(b - a)};
        if (segment.rms() >= kSilenceRms) {
            std::optional<SelectedProfiles> profiles;
            try {
                const EmbeddingSequence seq = embed_frames(segment);
                if (seq.num_voiced() > 0) {
                    SelectionScores scores = score(seq, result.inventory);
                    profiles = select_top2(scores, result.inventory);
                    log.p1_index = profiles->p1_index;
                    log.p2_index = profiles->p2_index;
                    std::vector<std::pair<double, int>> ranked;
                    for (Eigen::Index j = 0; j < scores.averaged.size(); ++j)
                        ranked.emplace_back(scores.averaged[j], static_cast<int>(j));
                    std::sort(ranked.rbegin(), ranked.rend());
                    for (std::size_t r = 0; r < ranked.size() && r < 5; ++r)
                        log.top_scores.emplace_back(ranked[r].second, ranked[r].first);
                }
            } catch (const std::exception& e) {
                throw std::runtime_error("segment " + std::to_string(i) + ": " + e.what());
            }

            MaskBackend backend;
            if (config.backend == BackendKind::OracleIrm) {
                OracleIrmBackend oracle{oracle_truth_slices(*config.truth, a, b), std::nullopt};
                if (config.truth->noise.size() == total)
                    oracle.noise = slice(config.truth->noise, a, b);
                backend = std::move(oracle);
            } else {
                backend = AffinityBackend{};
            }

            if (config.backend == BackendKind::Affinity && !profiles) {
                // voiced-frame-free segment: leave outputs silent
            } else {
                SeparationResult sep = separate_segment(segment, profiles, backend);
                outputs = std::move(sep.outputs);
            }
        }

        if (i == 0) {
            result.streams[0].samples.segment(a, b - a) = outputs[0].samples;
            result.streams[1].samples.segment(a, b - a) = outputs[1].samples;
        } else {
            const Eigen::Index ov_start = a;
            const Eigen::Index ov_end = std::min(prev_end, b);
            StitchPermutation perm = StitchPermutation::Identity;
            if (ov_end > ov_start) {
                const std::array<Waveform, 2> prev_tail{
                    slice(prev_outputs[0], ov_start - prev_start, ov_end - prev_start),
                    slice(prev_outputs[1], ov_start - prev_start, ov_end - prev_start)};
                const std::array<Waveform, 2> next_head{slice(outputs[0], 0, ov_end - ov_start),
                                                        slice(outputs[1], 0, ov_end - ov_start)};
                perm = stitch_pair(prev_tail, next_head, config.stitch_similarity);
            }
            log.permutation = perm;
            if (perm == StitchPermutation::Swap) std::swap(outputs[0], outputs[1]);

            // linear cross-fade over the shared region, then direct copy
            const Eigen::Index ov_len = ov_end - ov_start;
            for (int ch = 0; ch < 2; ++ch) {
                auto& stream = result.streams[static_cast<std::size_t>(ch)].samples;
                const auto& out = outputs[static_cast<std::size_t>(ch)].samples;
                for (Eigen::Index s = 0; s < ov_len; ++s) {
                    const double alpha = (ov_len > 1)
                                             ? static_cast<double>(s) / (ov_len - 1)
                                             : 1.0;
                    stream[ov_start + s] =
                        (1.0 - alpha) * stream[ov_start + s] + alpha * out[s];
                }
                stream.segment(ov_end, b - ov_end) = out.tail(b - ov_end);
            }
        }

        prev_outputs = outputs;
        prev_start = a;
        prev_end = b;
        result.segment_logs.push_back(std::move(log));
    }
    return result;
}

} // namespace css
