#include "css/metrics.hpp"

#include "css/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace css {

namespace {

double clamp_db(double ratio) {
    if (ratio <= 0.0) return -kDbCap;
    return std::clamp(10.0 * std::log10(ratio), -kDbCap, kDbCap);
}

bool is_silent(const Waveform& w) { return w.rms() < kSilenceRms; }

Waveform slice(const Waveform& w, double start_s, double end_s) {
    const Eigen::Index a =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(start_s * w.sample_rate)),
                                 0, w.samples.size());
    const Eigen::Index b =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(end_s * w.sample_rate)),
                                 a, w.samples.size());
    return Waveform(w.samples.segment(a, b - a), w.sample_rate);
}

double metric_or_floor(Metric m, const Waveform& ref, const Waveform& est) {
    if (est.energy() <= 0.0) return -kDbCap;
    return compute_metric(m, ref, est);
}

} // namespace

double snr(const Waveform& ref, const Waveform& est) {
    if (ref.samples.size() != est.samples.size())
        throw std::invalid_argument("snr: length mismatch");
    const double ref_energy = ref.energy();
    if (ref_energy <= 0.0) throw std::invalid_argument("snr: zero reference");
    const double err_energy = (ref.samples - est.samples).squaredNorm();
    if (err_energy <= 0.0) return kDbCap;
    return clamp_db(ref_energy / err_energy);
}

double si_sdr(const Waveform& ref, const Waveform& est) {
    if (ref.samples.size() != est.samples.size())
        throw std::invalid_argument("si_sdr: length mismatch");
    const double ref_energy = ref.energy();
    if (ref_energy <= 0.0 || est.energy() <= 0.0)
        throw std::invalid_argument("si_sdr: zero input");
    const double alpha = est.samples.dot(ref.samples) / ref_energy;
    const Eigen::VectorXd proj = alpha * ref.samples;
    const double proj_energy = proj.squaredNorm();
    if (proj_energy <= 0.0) return -kDbCap;
    const double err_energy = (proj - est.samples).squaredNorm();
    if (err_energy <= 0.0) return kDbCap;
    return clamp_db(proj_energy / err_energy);
}

double compute_metric(Metric m, const Waveform& ref, const Waveform& est) {
    return m == Metric::Snr ? snr(ref, est) : si_sdr(ref, est);
}

double overlap_ratio(const RecordingScript& script) {
    return overlap_ratio(script, 0.0, script.duration);
}

double overlap_ratio(const RecordingScript& script, double win_start, double win_end) {
    std::vector<std::pair<double, int>> edges;
    for (const auto& e : script.events) {
        const double a = std::max(e.onset, win_start);
        const double b = std::min(e.offset, win_end);
        if (a >= b) continue;
        edges.emplace_back(a, +1);
        edges.emplace_back(b, -1);
    }
    if (edges.empty()) return 0.0;
    std::sort(edges.begin(), edges.end());
    double active = 0.0, overlapped = 0.0;
    int count = 0;
    double prev = edges.front().first;
    for (const auto& [t, d] : edges) {
        if (count >= 1) active += t - prev;
        if (count >= 2) overlapped += t - prev;
        count += d;
        prev = t;
    }
    return active > 0.0 ? overlapped / active : 0.0;
}

int overlap_bucket(double ratio) {
    if (ratio <= 0.0) return 0;
    if (ratio <= 0.25) return 1;
    if (ratio <= 0.50) return 2;
    if (ratio <= 0.75) return 3;
    return 4;
}

std::string bucket_label(int bucket) {
    switch (bucket) {
        case 0: return "0";
        case 1: return "0-25";
        case 2: return "25-50";
        case 3: return "50-75";
        case 4: return "75-100";
    }
    return "?";
}

std::optional<double> eval_segment(const std::array<Waveform, 2>& outputs,
                                   const std::array<Waveform, 2>& truth, Metric metric) {
    const bool s0 = is_silent(truth[0]), s1 = is_silent(truth[1]);
    if (s0 && s1) return std::nullopt;
    if (s0 || s1) {
        const Waveform& ref = s0 ? truth[1] : truth[0];
        return std::max(metric_or_floor(metric, ref, outputs[0]),
                        metric_or_floor(metric, ref, outputs[1]));
    }
    const double identity = 0.5 * (metric_or_floor(metric, truth[0], outputs[0]) +
                                   metric_or_floor(metric, truth[1], outputs[1]));
    const double swapped = 0.5 * (metric_or_floor(metric, truth[0], outputs[1]) +
                                  metric_or_floor(metric, truth[1], outputs[0]));
    return std::max(identity, swapped);
}

EvalReport eval_utterances(const std::array<Waveform, 2>& streams,
                           const SimulatedRecording& recording, Metric metric) {
    EvalReport report;
    report.metric = metric;
    double sum = 0.0;
    for (const auto& ev : recording.script.events) {
        const auto src_it = recording.clean_sources.find(ev.speaker_id);
        if (src_it == recording.clean_sources.end()) continue;
        const Waveform ref = slice(src_it->second, ev.onset, ev.offset);
        if (ref.energy() <= 0.0) continue;
        const double s0 = metric_or_floor(metric, ref, slice(streams[0], ev.onset, ev.offset));
        const double s1 = metric_or_floor(metric, ref, slice(streams[1], ev.onset, ev.offset));
        UtteranceScore u;
        u.speaker_id = ev.speaker_id;
        u.onset = ev.onset;
        u.offset = ev.offset;
        u.best_stream = s1 > s0 ? 1 : 0;
        u.score_db = std::max(s0, s1);
        report.utterances.push_back(u);
        sum += u.score_db;
    }
    report.mean_db = report.utterances.empty() ? 0.0 : sum / report.utterances.size();
    return report;
}

SegmentBucketReport eval_segments_bucketed(const std::array<Waveform, 2>& streams,
                                           const SimulatedRecording& recording, Metric metric,
                                           double window_s) {
    SegmentBucketReport report;
    report.metric = metric;
    double sum = 0.0;
    int count = 0;
    for (double start = 0.0; start + window_s <= recording.script.duration + 1e-9;
         start += window_s) {
        const double end = start + window_s;
        // up to two active speakers in this window
        std::vector<int> active;
        for (const auto& ev : recording.script.events)
            if (ev.onset < end && ev.offset > start &&
                std::find(active.begin(), active.end(), ev.speaker_id) == active.end())
                active.push_back(ev.speaker_id);
        if (active.empty()) continue;

        auto src_slice = [&](int id) { return slice(recording.clean_sources.at(id), start, end); };
        std::array<Waveform, 2> truth{
            src_slice(active[0]),
            active.size() > 1 ? src_slice(active[1]) : Waveform::zeros(slice(streams[0], start, end).size())};
        std::array<Waveform, 2> outs{slice(streams[0], start, end), slice(streams[1], start, end)};
        const auto score = eval_segment(outs, truth, metric);
        if (!score) continue;
        const int bucket = overlap_bucket(overlap_ratio(recording.script, start, end));
        report.bucket_scores[static_cast<std::size_t>(bucket)].push_back(*score);
        sum += *score;
        ++count;
    }
    report.mean_db = count > 0 ? sum / count : 0.0;
    return report;
}

std::string EvalReport::to_text() const {
    std::ostringstream os;
    os << "utterance-level " << (metric == Metric::Snr ? "SNR" : "SI-SDR") << " (dB)\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s %-10s %-10s %-8s %-10s\n", "speaker", "onset", "offset",
                  "stream", "score");
    os << line;
    for (const auto& u : utterances) {
        std::snprintf(line, sizeof(line), "%-8d %-10.2f %-10.2f %-8d %-10.2f\n", u.speaker_id,
                      u.onset, u.offset, u.best_stream, u.score_db);
        os << line;
    }
    std::snprintf(line, sizeof(line), "mean: %.2f dB over %zu utterances\n", mean_db,
                  utterances.size());
    os << line;
    return os.str();
}

std::string SegmentBucketReport::to_text() const {
    std::ostringstream os;
    os << "segment-wise " << (metric == Metric::Snr ? "SNR" : "SI-SDR")
       << " (dB) by overlap ratio (%)\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %-8s %-8s %-8s\n", "0", "0-25", "25-50",
                  "50-75", "75-100", "Average");
    os << line;
    std::string row;
    for (int b = 0; b < 5; ++b) {
        const auto& v = bucket_scores[static_cast<std::size_t>(b)];
        if (v.empty()) {
            std::snprintf(line, sizeof(line), "%-8s ", "-");
        } else {
            double m = 0.0;
            for (double x : v) m += x;
            std::snprintf(line, sizeof(line), "%-8.2f ", m / v.size());
        }
        row += line;
    }
    std::snprintf(line, sizeof(line), "%-8.2f\n", mean_db);
    row += line;
    os << row;
    return os.str();
}

} // namespace css
