#include "css/separator.hpp"

#include <cmath>

namespace css {

namespace {

constexpr double kAffinityTemperature = 10.0;
constexpr double kSilenceLogit = 0.0;
constexpr double kSegmentSeconds = 4.0;

Eigen::Index stft_grid_length(Eigen::Index len, const StftConfig& c) {
    if (len <= c.fft_size) return c.fft_size;
    const Eigen::Index hops = (len - c.fft_size + c.hop - 1) / c.hop;
    return hops * c.hop + c.fft_size;
}

Waveform pad_to(const Waveform& w, Eigen::Index len) {
    if (w.samples.size() >= len) return w;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(len);
    s.head(w.samples.size()) = w.samples;
    return Waveform(std::move(s), w.sample_rate);
}

} // namespace

AdaptedFeatures adapt_features(const FeatureMatrix& b, const Embedding& e_p1,
                               const Embedding& e_p2) {
    const Eigen::Index k = b.values.cols();
    if (e_p1.vector.size() != k || e_p2.vector.size() != k)
        throw std::invalid_argument("profile dimension does not match feature dimension");
    AdaptedFeatures out;
    out.values.resize(b.values.rows(), 2 * k);
    out.values.leftCols(k) = b.values.array().rowwise() * e_p1.vector.transpose().array();
    out.values.rightCols(k) = b.values.array().rowwise() * e_p2.vector.transpose().array();
    return out;
}

std::pair<Mask, Mask> oracle_irm_masks(const Spectrogram& s1, const Spectrogram& s2,
                                       double floor) {
    if (s1.bins.rows() != s2.bins.rows() || s1.bins.cols() != s2.bins.cols())
        throw std::invalid_argument("source spectrogram shapes differ");
    const Eigen::MatrixXd a1 = s1.bins.cwiseAbs();
    const Eigen::MatrixXd a2 = s2.bins.cwiseAbs();
    const Eigen::MatrixXd denom = a1 + a2 + Eigen::MatrixXd::Constant(a1.rows(), a1.cols(), floor);
    return {Mask(a1.cwiseQuotient(denom)), Mask(a2.cwiseQuotient(denom))};
}

std::pair<Mask, Mask> oracle_irm_masks(const Spectrogram& s1, const Spectrogram& s2,
                                       const Spectrogram& noise, double floor) {
    if (s1.bins.rows() != s2.bins.rows() || s1.bins.cols() != s2.bins.cols() ||
        s1.bins.rows() != noise.bins.rows() || s1.bins.cols() != noise.bins.cols())
        throw std::invalid_argument("source spectrogram shapes differ");
    // power-domain form: sharper noise suppression than the magnitude ratio
    const Eigen::MatrixXd a1 = s1.bins.cwiseAbs2();
    const Eigen::MatrixXd a2 = s2.bins.cwiseAbs2();
    const Eigen::MatrixXd denom = a1 + a2 + noise.bins.cwiseAbs2() +
                                  Eigen::MatrixXd::Constant(a1.rows(), a1.cols(), floor);
    return {Mask(a1.cwiseQuotient(denom)), Mask(a2.cwiseQuotient(denom))};
}

std::pair<Mask, Mask> affinity_masks(const Waveform& segment, const SelectedProfiles& profiles,
                                     const StftConfig& config) {
    if (profiles.p1_index == profiles.p2_index)
        throw std::invalid_argument("profiles must be distinct");

    const EmbeddingSequence seq = embed_frames(segment);
    const Eigen::Index t_frames = seq.num_frames();

    // per embedder frame: softmax over (sim1, sim2, silence)
    Eigen::MatrixXd w(t_frames, 2);
    for (Eigen::Index t = 0; t < t_frames; ++t) {
        const double d1 = kAffinityTemperature * seq.frames.row(t).dot(profiles.e_p1.vector);
        const double d2 = kAffinityTemperature * seq.frames.row(t).dot(profiles.e_p2.vector);
        const double mx = std::max({d1, d2, kSilenceLogit});
        const double z1 = std::exp(d1 - mx), z2 = std::exp(d2 - mx),
                     zs = std::exp(kSilenceLogit - mx);
        w(t, 0) = z1 / (z1 + z2 + zs);
        w(t, 1) = z2 / (z1 + z2 + zs);
    }

    const Eigen::Index padded = stft_grid_length(segment.size(), config);
    const Eigen::Index l_frames = (padded - config.fft_size) / config.hop + 1;
    Eigen::MatrixXd m1(l_frames, config.num_bins()), m2(l_frames, config.num_bins());
    for (Eigen::Index l = 0; l < l_frames; ++l) {
        // temporal linear interpolation between embedder frame centers
        const double center = l * config.hop + config.fft_size / 2.0;
        const double u = (center - kEmbedFrameSamples / 2.0) / kEmbedFrameSamples;
        const Eigen::Index lo = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)),
                                                         0, t_frames - 1);
        const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, t_frames - 1);
        const double frac = std::clamp(u - static_cast<double>(lo), 0.0, 1.0);
        const double w1 = (1.0 - frac) * w(lo, 0) + frac * w(hi, 0);
        const double w2 = (1.0 - frac) * w(lo, 1) + frac * w(hi, 1);
        m1.row(l).setConstant(w1);
        m2.row(l).setConstant(w2);
    }
    return {Mask(std::move(m1)), Mask(std::move(m2))};
}

SeparationResult separate_segment(const Waveform& segment,
                                  const std::optional<SelectedProfiles>& profiles,
                                  const MaskBackend& backend, const StftConfig& config) {
    const Eigen::Index orig_len = segment.size();
    const Eigen::Index seg_samples =
        static_cast<Eigen::Index>(std::llround(kSegmentSeconds * segment.sample_rate));
    const Eigen::Index padded =
        stft_grid_length(std::max(orig_len, seg_samples), config);
    const Waveform mix = pad_to(segment, padded);

    SeparationResult result;
    std::pair<Mask, Mask> masks;
    if (const auto* oracle = std::get_if<OracleIrmBackend>(&backend)) {
        if (oracle->truth[0].size() == 0 || oracle->truth[1].size() == 0)
            throw std::invalid_argument("oracle IRM backend requires ground-truth sources");
        if (oracle->truth[0].size() != orig_len || oracle->truth[1].size() != orig_len)
            throw std::invalid_argument("truth length does not match segment");
        const Spectrogram t1 = stft(pad_to(oracle->truth[0], padded), config);
        const Spectrogram t2 = stft(pad_to(oracle->truth[1], padded), config);
        masks = oracle->noise
                    ? oracle_irm_masks(t1, t2, stft(pad_to(*oracle->noise, padded), config))
                    : oracle_irm_masks(t1, t2);
    } else {
        if (!profiles)
            throw std::invalid_argument("affinity backend requires selected profiles");
        masks = affinity_masks(mix, *profiles, config);
        result.profiles_used = profiles;
    }

    const Spectrogram mix_spec = stft(mix, config);
    Waveform out1 = istft(apply_mask(mix_spec, masks.first));
    Waveform out2 = istft(apply_mask(mix_spec, masks.second));
    out1.samples.conservativeResize(orig_len);
    out2.samples.conservativeResize(orig_len);

    result.outputs = {std::move(out1), std::move(out2)};
    result.masks = {std::move(masks.first), std::move(masks.second)};
    return result;
}

} // namespace css
