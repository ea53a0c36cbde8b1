#ifndef CSS_SEPARATOR_HPP
#define CSS_SEPARATOR_HPP

#include "css/selector.hpp"

#include <optional>

namespace css {

// Output of the feature-extraction stage, one K-dim row per frame.
struct FeatureMatrix {
    Eigen::MatrixXd values; // L x K
};

// Profile-adapted features: [b ⊙ e_p1 | b ⊙ e_p2], L x 2K.
struct AdaptedFeatures {
    Eigen::MatrixXd values;
};

struct SeparationResult {
    std::array<Waveform, 2> outputs;
    std::array<Mask, 2> masks;
    std::optional<SelectedProfiles> profiles_used;
};

AdaptedFeatures adapt_features(const FeatureMatrix& b, const Embedding& e_p1,
                               const Embedding& e_p2);

// Ideal-ratio-mask oracle over two ground-truth source spectrograms.
std::pair<Mask, Mask> oracle_irm_masks(const Spectrogram& s1, const Spectrogram& s2,
                                       double floor = 1e-8);

// Noise-aware variant: the noise magnitude joins the denominator, so the
// masks also suppress the additive noise.
std::pair<Mask, Mask> oracle_irm_masks(const Spectrogram& s1, const Spectrogram& s2,
                                       const Spectrogram& noise, double floor = 1e-8);

// Non-learned profile-biased backend: per embedder frame, softmax over the
// two profile similarities plus a silence logit, broadcast over T-F bins.
std::pair<Mask, Mask> affinity_masks(const Waveform& segment, const SelectedProfiles& profiles,
                                     const StftConfig& config = {});

struct OracleIrmBackend {
    // ground-truth source segments aligned with the mixture segment
    std::array<Waveform, 2> truth;
    // optional aligned noise reference; when present the masks suppress it
    std::optional<Waveform> noise;
};
struct AffinityBackend {};

using MaskBackend = std::variant<OracleIrmBackend, AffinityBackend>;

SeparationResult separate_segment(const Waveform& segment,
                                  const std::optional<SelectedProfiles>& profiles,
                                  const MaskBackend& backend, const StftConfig& config = {});

} // namespace css

#endif
