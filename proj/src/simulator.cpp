#include "css/simulator.hpp"

#include "css/metrics.hpp"
#include "css/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

namespace css {

namespace {

constexpr double kSegmentSeconds = 4.0;
constexpr double kMinOverlap = 1.0;
constexpr double kMaxSequentialGap = 0.5;
constexpr double kMuteProbability = 0.1;
constexpr double kReverbTailGain = 0.03;

double u01_from_hash(std::uint64_t h) { return (h >> 11) * 0x1.0p-53; }

// speaker voice character is a function of the id alone
struct VoiceCharacter {
    double f0;
    double tilt;
    double formant_center[3];
    double formant_gain[3];
    double am_phase;
    double vib_rate;
    double vib_phase;
};

constexpr double kVibratoDepth = 0.0; // relative F0 excursion

VoiceCharacter voice_character(int speaker_id) {
    VoiceCharacter v;
    const std::uint64_t base = mix64(0x5eedf00dULL ^ static_cast<std::uint64_t>(speaker_id));
    v.f0 = 90.0 + 7.0 * (speaker_id % 40);
    v.tilt = 0.7 + 0.6 * u01_from_hash(mix64(base + 1));
    for (int j = 0; j < 3; ++j) {
        v.formant_center[j] = 350.0 + 3200.0 * u01_from_hash(mix64(base + 10 + j));
        v.formant_gain[j] = 0.6 + 1.8 * u01_from_hash(mix64(base + 20 + j));
    }
    v.am_phase = 2.0 * std::numbers::pi * u01_from_hash(mix64(base + 30));
    v.vib_rate = 4.5 + 2.0 * u01_from_hash(mix64(base + 31));
    v.vib_phase = 2.0 * std::numbers::pi * u01_from_hash(mix64(base + 32));
    return v;
}

} // namespace

const char* pattern_name(OverlapPattern p) {
    switch (p) {
        case OverlapPattern::Inclusive: return "inclusive";
        case OverlapPattern::Sequential: return "sequential";
        case OverlapPattern::FullyOverlapped: return "fully_overlapped";
        case OverlapPattern::PartiallyOverlapped: return "partially_overlapped";
    }
    return "?";
}

int RecordingScript::max_concurrency() const {
    std::vector<std::pair<double, int>> edges;
    for (const auto& e : events) {
        edges.emplace_back(e.onset, +1);
        edges.emplace_back(e.offset, -1);
    }
    std::sort(edges.begin(), edges.end());
    int cur = 0, best = 0;
    for (const auto& [t, d] : edges) {
        cur += d;
        best = std::max(best, cur);
    }
    return best;
}

Waveform synth_speaker(int speaker_id, double duration, std::uint64_t seed) {
    if (duration <= 0.0) throw std::invalid_argument("duration must be positive");
    const VoiceCharacter v = voice_character(speaker_id);
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(duration * kSampleRate));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

    const std::uint64_t phase_base =
        mix64(seed ^ mix64(0xabcd1234ULL + static_cast<std::uint64_t>(speaker_id)));

    const double dt = 1.0 / kSampleRate;
    for (int k = 1; k * v.f0 < 4000.0; ++k) {
        const double f = k * v.f0;
        double gain = std::pow(static_cast<double>(k), -v.tilt);
        for (int j = 0; j < 3; ++j) {
            const double d = (f - v.formant_center[j]) / 260.0;
            gain *= 1.0 + v.formant_gain[j] * std::exp(-0.5 * d * d);
        }
        const double phase0 =
            2.0 * std::numbers::pi * u01_from_hash(mix64(phase_base + static_cast<std::uint64_t>(k)));
        const double w = 2.0 * std::numbers::pi * f;
        // slight vibrato keeps harmonic collisions between speakers transient
        const double vib_amp = w * kVibratoDepth / (2.0 * std::numbers::pi * v.vib_rate);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = i * dt;
            const double phase =
                w * t - vib_amp * std::cos(2.0 * std::numbers::pi * v.vib_rate * t + v.vib_phase);
            out[i] += gain * std::sin(phase + phase0);
        }
    }
    // 4 Hz amplitude modulation, deep enough for syllable-like energy bursts
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = i * dt;
        out[i] *= 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * 4.0 * t + v.am_phase);
    }
    const double rms = std::sqrt(out.squaredNorm() / n);
    if (rms > 0) out *= 0.08 / rms;
    return Waveform(std::move(out));
}

OverlapPattern sample_pattern(Rng& rng) {
    const double u = uniform(rng);
    if (u < 0.10) return OverlapPattern::Inclusive;
    if (u < 0.30) return OverlapPattern::Sequential;
    if (u < 0.65) return OverlapPattern::FullyOverlapped;
    return OverlapPattern::PartiallyOverlapped;
}

namespace {

// pattern timing for a 4-second episode; events are (onset, offset) pairs
std::pair<UtteranceEvent, UtteranceEvent> pattern_timing(OverlapPattern pattern, int spk_a,
                                                         int spk_b, Rng& rng) {
    UtteranceEvent a{spk_a, 0.0, kSegmentSeconds};
    UtteranceEvent b{spk_b, 0.0, kSegmentSeconds};
    switch (pattern) {
        case OverlapPattern::FullyOverlapped:
            break;
        case OverlapPattern::Sequential: {
            const double gap = uniform(rng, 0.0, kMaxSequentialGap);
            const double split = uniform(rng, 0.5, kSegmentSeconds - 0.5 - gap);
            a.offset = split;
            b.onset = split + gap;
            break;
        }
        case OverlapPattern::Inclusive: {
            const double len_a = uniform(rng, 2.5, kSegmentSeconds);
            a.onset = uniform(rng, 0.0, kSegmentSeconds - len_a);
            a.offset = a.onset + len_a;
            const double len_b = uniform(rng, kMinOverlap, len_a);
            b.onset = a.onset + uniform(rng, 0.0, len_a - len_b);
            b.offset = b.onset + len_b;
            break;
        }
        case OverlapPattern::PartiallyOverlapped: {
            const double overlap = uniform(rng, kMinOverlap, 3.0);
            const double a_end = uniform(rng, overlap, kSegmentSeconds);
            a.offset = a_end;
            b.onset = a_end - overlap;
            break;
        }
    }
    return {a, b};
}

void render_event(const UtteranceEvent& ev, double episode_start, std::uint64_t utt_seed,
                  const Eigen::VectorXd& rir, const SpeakerCorpus& corpus,
                  std::map<int, Waveform>& sources, Eigen::Index total_len) {
    const double len = ev.offset - ev.onset;
    Waveform utt = corpus.utterance(ev.speaker_id, len, utt_seed);
    Eigen::VectorXd wet = fft_convolve_truncated(utt.samples, rir);

    auto it = sources.find(ev.speaker_id);
    if (it == sources.end())
        it = sources.emplace(ev.speaker_id, Waveform::zeros(total_len)).first;
    const Eigen::Index start =
        static_cast<Eigen::Index>(std::llround((episode_start + ev.onset) * kSampleRate));
    const Eigen::Index count = std::min(wet.size(), total_len - start);
    it->second.samples.segment(start, count) += wet.head(count);
}

} // namespace

SimulatedRecording generate_segment(int spk_a, int spk_b, OverlapPattern pattern,
                                    std::uint64_t seed) {
    if (spk_a == spk_b || spk_a < 0 || spk_b < 0)
        throw std::invalid_argument("segment requires two distinct non-negative speaker ids");
    Rng rng = make_rng(seed, "segment");

    auto [ev_a, ev_b] = pattern_timing(pattern, spk_a, spk_b, rng);
    std::vector<UtteranceEvent> events{ev_a, ev_b};
    if (uniform(rng) < kMuteProbability)
        events.erase(events.begin() + (uniform(rng) < 0.5 ? 0 : 1));

    const Eigen::Index total_len =
        static_cast<Eigen::Index>(std::llround(kSegmentSeconds * kSampleRate));
    const double rt60 = uniform(rng, 0.1, 0.5);

    SyntheticCorpus corpus;
    SimulatedRecording rec;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Eigen::VectorXd rir = make_rir(rt60, kSampleRate, rng());
        render_event(events[i], 0.0, rng(), rir, corpus, rec.clean_sources, total_len);
    }

    std::sort(events.begin(), events.end(),
              [](const auto& x, const auto& y) { return x.onset < y.onset; });
    rec.script.events = events;
    rec.script.duration = kSegmentSeconds;
    for (const auto& e : events) rec.script.speaker_ids.insert(e.speaker_id);

    Waveform clean = Waveform::zeros(total_len);
    for (const auto& [id, src] : rec.clean_sources) clean.samples += src.samples;
    const double snr = uniform(rng, 0.0, 20.0);
    auto [noisy, noise] = add_noise(clean, snr, rng());
    rec.mixture = std::move(noisy);
    rec.noise = std::move(noise);
    return rec;
}

std::pair<Waveform, Waveform> add_noise(const Waveform& w, double snr_db, std::uint64_t seed) {
    const double sig_energy = w.energy();
    if (sig_energy <= 0.0) throw std::invalid_argument("cannot set SNR on silent signal");

    Rng rng = make_rng(seed, "noise");
    Eigen::VectorXd n(w.samples.size());
    for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = gaussian(rng);
    const double target_noise_energy = sig_energy / std::pow(10.0, snr_db / 10.0);
    n *= std::sqrt(target_noise_energy / n.squaredNorm());

    Waveform noise(std::move(n), w.sample_rate);
    Waveform noisy(w.samples + noise.samples, w.sample_rate);
    return {std::move(noisy), std::move(noise)};
}

Eigen::VectorXd make_rir(double rt60, int sample_rate, std::uint64_t seed) {
    if (rt60 <= 0.0 || rt60 > 1.0) throw std::invalid_argument("rt60 out of range (0, 1]");
    Rng rng = make_rng(seed, "rir");
    const int taps = static_cast<int>(std::llround(rt60 * sample_rate)) + 1;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(taps);
    h[0] = 1.0; // direct path
    const double decay = std::log(1000.0) / rt60;
    for (int i = 1; i < taps; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        h[i] = kReverbTailGain * gaussian(rng) * std::exp(-decay * t);
    }
    return h;
}

Waveform apply_reverb(const Waveform& w, double rt60, std::uint64_t seed) {
    const Eigen::VectorXd h = make_rir(rt60, w.sample_rate, seed);
    return Waveform(fft_convolve_truncated(w.samples, h), w.sample_rate);
}

SimulatedRecording generate_recording(int n_speakers, double duration, double target_overlap,
                                      std::uint64_t seed) {
    SyntheticCorpus corpus;
    return generate_recording(n_speakers, duration, target_overlap, seed, corpus);
}

namespace {

struct EpisodePlan {
    double start = 0.0;
    std::vector<UtteranceEvent> events; // onsets relative to episode start
};

// Greedy pattern control: steer toward the target overlap ratio, falling
// back to the nominal pattern frequencies when already on target.
std::vector<EpisodePlan> plan_episodes(int n_speakers, double duration, double target_overlap,
                                       Rng& rng) {
    std::vector<int> coverage(static_cast<std::size_t>(n_speakers));
    for (int i = 0; i < n_speakers; ++i) coverage[static_cast<std::size_t>(i)] = i;
    std::shuffle(coverage.begin(), coverage.end(), rng);
    std::size_t coverage_pos = 0;

    std::vector<EpisodePlan> plan;
    double cursor = 0.0;
    double overlap_time = 0.0, speech_time = 0.0;
    while (cursor + kSegmentSeconds <= duration) {
        int spk_a, spk_b;
        if (coverage_pos + 1 < coverage.size()) {
            spk_a = coverage[coverage_pos];
            spk_b = coverage[coverage_pos + 1];
            coverage_pos += 2;
        } else {
            spk_a = uniform_int(rng, 0, n_speakers - 1);
            do { spk_b = uniform_int(rng, 0, n_speakers - 1); } while (spk_b == spk_a);
        }

        OverlapPattern pattern;
        const double ratio = speech_time > 0 ? overlap_time / speech_time : target_overlap;
        if (ratio > target_overlap + 0.02) pattern = OverlapPattern::Sequential;
        else if (ratio < target_overlap - 0.02) pattern = OverlapPattern::PartiallyOverlapped;
        else pattern = sample_pattern(rng);

        auto [ev_a, ev_b] = pattern_timing(pattern, spk_a, spk_b, rng);
        std::vector<UtteranceEvent> events{ev_a, ev_b};
        if (uniform(rng) < kMuteProbability)
            events.erase(events.begin() + (uniform(rng) < 0.5 ? 0 : 1));

        if (events.size() == 2) {
            const auto& a = events[0];
            const auto& b = events[1];
            const double ov =
                std::max(0.0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
            overlap_time += ov;
            speech_time += (a.offset - a.onset) + (b.offset - b.onset) - ov;
        } else {
            speech_time += events[0].offset - events[0].onset;
        }

        plan.push_back({cursor, std::move(events)});
        cursor += kSegmentSeconds + uniform(rng, 0.0, 0.5);
    }
    return plan;
}

double plan_overlap_ratio(const std::vector<EpisodePlan>& plan) {
    double overlap = 0.0, speech = 0.0;
    for (const auto& ep : plan) {
        if (ep.events.size() == 2) {
            const auto& a = ep.events[0];
            const auto& b = ep.events[1];
            overlap += std::max(0.0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
            const double union_len = (a.offset - a.onset) + (b.offset - b.onset) -
                                     std::max(0.0, std::min(a.offset, b.offset) -
                                                       std::max(a.onset, b.onset));
            speech += union_len;
        } else {
            speech += ep.events[0].offset - ep.events[0].onset;
        }
    }
    return speech > 0 ? overlap / speech : 0.0;
}

} // namespace

SimulatedRecording generate_recording(int n_speakers, double duration, double target_overlap,
                                      std::uint64_t seed, const SpeakerCorpus& corpus) {
    if (n_speakers < 2) throw std::invalid_argument("need at least 2 speakers");
    if (duration < 10.0) throw std::invalid_argument("duration must be >= 10 s");
    if (target_overlap < 0.0 || target_overlap >= 1.0)
        throw std::invalid_argument("target_overlap must be in [0, 1)");

    constexpr int kMaxAttempts = 64;
    std::vector<EpisodePlan> plan;
    bool found = false;
    Rng rng = make_rng(seed, "recording");
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng plan_rng = make_rng(named_seed(seed, "recording-plan"), std::to_string(attempt));
        auto candidate = plan_episodes(n_speakers, duration, target_overlap, plan_rng);
        if (std::abs(plan_overlap_ratio(candidate) - target_overlap) <= 0.05) {
            plan = std::move(candidate);
            found = true;
            break;
        }
    }
    if (!found) throw std::runtime_error("infeasible overlap target");

    const Eigen::Index total_len = static_cast<Eigen::Index>(std::llround(duration * kSampleRate));
    SimulatedRecording rec;
    for (const auto& ep : plan) {
        const double rt60 = uniform(rng, 0.1, 0.5);
        for (const auto& ev : ep.events) {
            const Eigen::VectorXd rir = make_rir(rt60, kSampleRate, rng());
            render_event(ev, ep.start, rng(), rir, corpus, rec.clean_sources, total_len);
            UtteranceEvent abs_ev = ev;
            abs_ev.onset += ep.start;
            abs_ev.offset += ep.start;
            rec.script.events.push_back(abs_ev);
            rec.script.speaker_ids.insert(ev.speaker_id);
        }
    }
    std::sort(rec.script.events.begin(), rec.script.events.end(),
              [](const auto& x, const auto& y) { return x.onset < y.onset; });
    rec.script.duration = duration;

    Waveform clean = Waveform::zeros(total_len);
    for (const auto& [id, src] : rec.clean_sources) clean.samples += src.samples;
    const double snr = uniform(rng, 0.0, 20.0);
    auto [noisy, noise] = add_noise(clean, snr, rng());
    rec.mixture = std::move(noisy);
    rec.noise = std::move(noise);
    return rec;
}

WavDirCorpus::WavDirCorpus(const std::string& root) {
    namespace fs = std::filesystem;
    for (const auto& dir : fs::directory_iterator(root)) {
        if (!dir.is_directory()) continue;
        const std::string name = dir.path().filename().string();
        if (name.rfind("spk", 0) != 0) continue;
        const int id = std::stoi(name.substr(3));
        std::vector<std::string> files;
        for (const auto& f : fs::directory_iterator(dir.path()))
            if (f.path().extension() == ".wav") files.push_back(f.path().string());
        std::sort(files.begin(), files.end());
        if (!files.empty()) files_[id] = std::move(files);
    }
    if (files_.empty()) throw std::runtime_error("no spk<id> directories with wav files in " + root);
}

Waveform WavDirCorpus::utterance(int speaker_id, double duration, std::uint64_t seed) const {
    auto it = files_.find(speaker_id);
    if (it == files_.end())
        throw std::runtime_error("no corpus files for speaker " + std::to_string(speaker_id));
    const auto& files = it->second;
    Waveform w = read_wav(files[mix64(seed) % files.size()]);
    const Eigen::Index want = static_cast<Eigen::Index>(std::llround(duration * kSampleRate));
    Eigen::VectorXd out(want);
    if (w.samples.size() == 0) throw std::runtime_error("empty corpus wav");
    for (Eigen::Index i = 0; i < want; ++i) out[i] = w.samples[i % w.samples.size()];
    return Waveform(std::move(out));
}

} // namespace css
