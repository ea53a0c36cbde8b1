#ifndef CSS_SIMULATOR_HPP
#define CSS_SIMULATOR_HPP

#include "css/audio.hpp"
#include "css/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace css {

enum class OverlapPattern { Inclusive, Sequential, FullyOverlapped, PartiallyOverlapped };

const char* pattern_name(OverlapPattern p);

struct UtteranceEvent {
    int speaker_id = 0;
    double onset = 0.0;  // seconds
    double offset = 0.0; // seconds
};

struct RecordingScript {
    std::vector<UtteranceEvent> events; // sorted by onset
    double duration = 0.0;
    std::set<int> speaker_ids;

    // Max number of simultaneously active speakers at any instant.
    int max_concurrency() const;
};

struct SimulatedRecording {
    Waveform mixture;
    std::map<int, Waveform> clean_sources; // full-length, zero where inactive
    RecordingScript script;
    Waveform noise;
};

// Deterministic synthetic voice: harmonic comb at F0 = 90 + 7*(id mod 40) Hz
// with speaker-specific tilt, formant-like band emphasis, and 4 Hz AM.
Waveform synth_speaker(int speaker_id, double duration, std::uint64_t seed);

// Categorical draw at the (0.10, 0.20, 0.35, 0.35) pattern frequencies.
OverlapPattern sample_pattern(Rng& rng);

SimulatedRecording generate_segment(int spk_a, int spk_b, OverlapPattern pattern,
                                    std::uint64_t seed);

// Additive white Gaussian noise scaled to an exact SNR in dB.
std::pair<Waveform, Waveform> add_noise(const Waveform& w, double snr_db, std::uint64_t seed);

// Parametric exponential-decay reverberation, truncated to input length.
Waveform apply_reverb(const Waveform& w, double rt60, std::uint64_t seed);
Eigen::VectorXd make_rir(double rt60, int sample_rate, std::uint64_t seed);

SimulatedRecording generate_recording(int n_speakers, double duration, double target_overlap,
                                      std::uint64_t seed);

// Optional corpus adapter: a directory of spk<id>/*.wav supplies real speech
// in place of synth_speaker. Falls back to synthesis when null.
class SpeakerCorpus {
  public:
    virtual ~SpeakerCorpus() = default;
    virtual Waveform utterance(int speaker_id, double duration, std::uint64_t seed) const = 0;
};

class SyntheticCorpus final : public SpeakerCorpus {
  public:
    Waveform utterance(int speaker_id, double duration, std::uint64_t seed) const override {
        return synth_speaker(speaker_id, duration, seed);
    }
};

class WavDirCorpus final : public SpeakerCorpus {
  public:
    explicit WavDirCorpus(const std::string& root);
    Waveform utterance(int speaker_id, double duration, std::uint64_t seed) const override;

  private:
    std::map<int, std::vector<std::string>> files_;
};

SimulatedRecording generate_recording(int n_speakers, double duration, double target_overlap,
                                      std::uint64_t seed, const SpeakerCorpus& corpus);

} // namespace css

#endif
