#include "css/embedder.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace css {

namespace {

constexpr int kFftSize = 2048;
constexpr int kNumMel = 64;
constexpr int kNumComb = 32;
constexpr int kNumStats = 16;
constexpr int kNumMod = 16;
constexpr double kF0Lo = 60.0, kF0Hi = 400.0;

// group weights applied after per-dimension standardization
constexpr double kMelWeight = 1.0;
constexpr double kCombWeight = 4.0;
constexpr double kStatWeight = 1.0;
constexpr double kModWeight = 0.5;

#include "embedder_stats.inc" // kFeatMean / kFeatStd fixed standardization tables

double group_weight(int d) {
    if (d < kNumMel) return kMelWeight;
    if (d < kNumMel + kNumComb) return kCombWeight;
    if (d < kNumMel + kNumComb + kNumStats) return kStatWeight;
    return kModWeight;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// triangular mel filterbank, kNumMel bands over [0, sr/2]
const Eigen::MatrixXd& mel_filterbank(int nbins, double sr) {
    static const Eigen::MatrixXd fb = [&] {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kNumMel, nbins);
        const double mel_max = hz_to_mel(sr / 2.0);
        Eigen::VectorXd edges(kNumMel + 2);
        for (int i = 0; i < kNumMel + 2; ++i)
            edges[i] = mel_to_hz(mel_max * i / (kNumMel + 1));
        const double bin_hz = sr / kFftSize;
        for (int b = 0; b < kNumMel; ++b) {
            const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
            for (int k = 0; k < nbins; ++k) {
                const double f = k * bin_hz;
                if (f > lo && f < mid) m(b, k) = (f - lo) / (mid - lo);
                else if (f >= mid && f < hi) m(b, k) = (hi - f) / (hi - mid);
            }
        }
        return m;
    }();
    return fb;
}

double interp_mag(const Eigen::VectorXd& mag, double bin) {
    const int i = static_cast<int>(bin);
    if (i < 0 || i + 1 >= mag.size()) return 0.0;
    const double t = bin - i;
    return (1.0 - t) * mag[i] + t * mag[i + 1];
}

void fill_frame_features(const Eigen::VectorXd& frame, double sr, Eigen::VectorXd& out) {
    static thread_local Eigen::FFT<double> fft;
    static const Eigen::VectorXd win = [] {
        Eigen::VectorXd w(kEmbedFrameSamples);
        for (int n = 0; n < kEmbedFrameSamples; ++n)
            w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kEmbedFrameSamples);
        return w;
    }();

    std::vector<double> padded(kFftSize, 0.0);
    for (int i = 0; i < kEmbedFrameSamples; ++i) padded[i] = frame[i] * win[i];
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);

    const int nbins = kFftSize / 2 + 1;
    Eigen::VectorXd mag(nbins);
    for (int k = 0; k < nbins; ++k) mag[k] = std::abs(spec[k]);
    const double bin_hz = sr / kFftSize;

    int idx = 0;

    // 64 log-mel energies
    Eigen::VectorXd mel = mel_filterbank(nbins, sr) * mag.cwiseProduct(mag);
    for (int b = 0; b < kNumMel; ++b) out[idx++] = std::log(mel[b] + 1e-10);

    // 32 harmonic-comb correlations over a log F0 grid 60-400 Hz. The comb
    // contrast (magnitude on the teeth minus magnitude between the teeth)
    // is searched on a fine fundamental grid; the winning correlation mass
    // is then placed as a narrow bump at the best-matching grid position.
    // This resolves fundamentals closer together than the grid spacing.
    const int lim4k = static_cast<int>(4000.0 / bin_hz);
    const double mean_mag = mag.head(lim4k).mean() + 1e-12;
    {
        const double log_span = std::log(kF0Hi / kF0Lo);
        constexpr int kFine = 257;
        Eigen::VectorXd contrast(kFine);
        for (int c = 0; c < kFine; ++c) {
            const double f0 = kF0Lo * std::exp(log_span * c / double(kFine - 1));
            double on = 0.0, off = 0.0;
            int n = 0;
            for (double f = f0; f < 4000.0; f += f0) {
                on += interp_mag(mag, f / bin_hz);
                off += interp_mag(mag, (f + 0.5 * f0) / bin_hz);
                ++n;
            }
            contrast[c] = (on - off) / std::max(n, 1);
        }
        // strongest fundamental, then a second pass for a concurrent speaker
        // in an overlapped frame. The second pass skips every tooth close to
        // a multiple of the first fundamental, so rational-ratio phantoms of
        // the first voice (whose teeth are all such multiples) score zero
        // while a genuine second voice keeps most of its teeth.
        double u1 = 0.0, c1 = 0.0, u2 = 0.0, c2 = 0.0;
        for (int c = 0; c < kFine; ++c) {
            const double u = c / double(kFine - 1);
            if (contrast[c] > c1) { c1 = contrast[c]; u1 = u; }
        }
        const double f0_1 = kF0Lo * std::exp(log_span * u1);
        constexpr double kToothExcludeHz = 45.0; // analysis-window half lobe
        auto near_multiple = [&](double f) {
            return std::abs(f - std::round(f / f0_1) * f0_1) < kToothExcludeHz;
        };
        Eigen::VectorXd resid = Eigen::VectorXd::Zero(kFine);
        for (int c = 0; c < kFine; ++c) {
            const double u = c / double(kFine - 1);
            const double f0 = kF0Lo * std::exp(log_span * u);
            double on = 0.0, off = 0.0;
            int n_on = 0, n_off = 0;
            for (double f = f0; f < 4000.0; f += f0) {
                if (!near_multiple(f)) { on += interp_mag(mag, f / bin_hz); ++n_on; }
                const double fo = f + 0.5 * f0;
                if (!near_multiple(fo)) { off += interp_mag(mag, fo / bin_hz); ++n_off; }
            }
            if (n_on >= 3 && n_off >= 3) resid[c] = on / n_on - off / n_off;
        }
        for (int c = 1; c + 1 < kFine; ++c) {
            const double u = c / double(kFine - 1);
            if (std::abs(u - u1) < 0.02) continue;
            if (resid[c] > c2 && resid[c] >= resid[c - 1] && resid[c] >= resid[c + 1]) {
                c2 = resid[c];
                u2 = u;
            }
        }
        const double amp1 = std::log1p(c1 / mean_mag);
        const double amp2 = c2 > 0.2 * c1 ? std::log1p(c2 / mean_mag) : 0.0;
        constexpr double kBumpWidth = 0.012; // in units of normalized log-F0
        for (int c = 0; c < kNumComb; ++c) {
            const double u_c = c / double(kNumComb - 1);
            const double z1 = (u_c - u1) / kBumpWidth;
            const double z2 = (u_c - u2) / kBumpWidth;
            out[idx++] = amp1 * std::exp(-0.5 * z1 * z1) +
                         amp2 * std::exp(-0.5 * z2 * z2);
        }
    }

    // 16 spectral-shape statistics
    {
        Eigen::VectorXd stats(kNumStats);
        const Eigen::VectorXd pow_spec = mag.cwiseProduct(mag);
        const double total = pow_spec.sum() + 1e-20;
        double centroid = 0.0;
        for (int k = 0; k < nbins; ++k) centroid += k * bin_hz * pow_spec[k];
        centroid /= total;
        stats[0] = centroid / 8000.0;

        double cum = 0.0;
        double rolloff = sr / 2.0;
        for (int k = 0; k < nbins; ++k) {
            cum += pow_spec[k];
            if (cum >= 0.85 * total) { rolloff = k * bin_hz; break; }
        }
        stats[1] = rolloff / 8000.0;

        // tilt: slope of log-magnitude vs log-frequency, 100 Hz - 6 kHz
        {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int n = 0;
            for (int k = static_cast<int>(100.0 / bin_hz); k < 6000.0 / bin_hz; ++k) {
                const double x = std::log(k * bin_hz);
                const double y = std::log(mag[k] + 1e-12);
                sx += x; sy += y; sxx += x * x; sxy += x * y; ++n;
            }
            const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx + 1e-20);
            stats[2] = (slope + 4.0) / 8.0;
        }

        // spectral irregularity: mean absolute step of adjacent log magnitudes
        {
            double irr = 0.0;
            for (int k = 1; k < lim4k; ++k)
                irr += std::abs(std::log(mag[k] + 1e-12) - std::log(mag[k - 1] + 1e-12));
            stats[3] = irr / lim4k / 4.0;
        }

        // 12 log-band energy fractions
        for (int b = 0; b < 12; ++b) {
            const double lo = 100.0 * std::pow(80.0, b / 12.0);
            const double hi = 100.0 * std::pow(80.0, (b + 1) / 12.0);
            double e = 0.0;
            for (int k = static_cast<int>(lo / bin_hz); k < hi / bin_hz && k < nbins; ++k)
                e += pow_spec[k];
            stats[4 + b] = std::log(e / total + 1e-6) / 6.0 + 1.0;
        }
        for (int i = 0; i < kNumStats; ++i) out[idx++] = stats[i];
    }

    // 16 modulation features: sub-frame envelope relative to frame RMS
    {
        const double frame_rms =
            std::sqrt(frame.squaredNorm() / kEmbedFrameSamples) + 1e-12;
        const int sub = kEmbedFrameSamples / kNumMod;
        for (int i = 0; i < kNumMod; ++i) {
            const double r = std::sqrt(frame.segment(i * sub, sub).squaredNorm() / sub);
            out[idx++] = std::log(r / frame_rms + 1e-6);
        }
    }
}

} // namespace

Embedding::Embedding(Eigen::VectorXd v) : vector(std::move(v)) {
    const double n = vector.norm();
    if (n < 1e-12) throw std::invalid_argument("embedding has zero norm");
    vector /= n;
}

Eigen::Index EmbeddingSequence::num_voiced() const {
    Eigen::Index n = 0;
    for (bool s : silent)
        if (!s) ++n;
    return n;
}

EmbeddingSequence embed_frames(const Waveform& w) {
    if (w.sample_rate != kSampleRate)
        throw std::invalid_argument("embedder expects 16 kHz input");
    const Eigen::Index n = w.samples.size();
    if (n < kEmbedFrameSamples) throw std::invalid_argument("signal too short to embed");

    const Eigen::Index frames = n / kEmbedFrameSamples;
    EmbeddingSequence seq;
    seq.frames = Eigen::MatrixXd::Zero(frames, kEmbedDim);
    seq.silent.assign(static_cast<std::size_t>(frames), false);
    seq.source_duration = w.duration();

    Eigen::VectorXd feat(kEmbedDim);
    for (Eigen::Index t = 0; t < frames; ++t) {
        const Eigen::VectorXd frame = w.samples.segment(t * kEmbedFrameSamples, kEmbedFrameSamples);
        const double rms = std::sqrt(frame.squaredNorm() / kEmbedFrameSamples);
        if (rms < kSilenceRms) {
            seq.silent[static_cast<std::size_t>(t)] = true;
            continue;
        }
        fill_frame_features(frame, w.sample_rate, feat);
        // fixed per-dimension standardization and group weighting, then a
        // fixed within-speaker whitening transform (shrinks directions that
        // vary inside one voice so cosines reflect voice identity), then
        // unit norm
        for (int d = 0; d < kEmbedDim; ++d)
            feat[d] = group_weight(d) * (feat[d] - kFeatMean[d]) / kFeatStd[d];
        const Eigen::Map<const Eigen::Matrix<double, kEmbedDim, kEmbedDim, Eigen::RowMajor>>
            whiten(kFeatWhiten);
        feat = whiten * feat;
        const double norm = feat.norm();
        seq.frames.row(t) = feat / (norm > 1e-12 ? norm : 1.0);
    }
    return seq;
}

Embedding mean_pool(const EmbeddingSequence& seq) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(seq.frames.cols());
    Eigen::Index n = 0;
    for (Eigen::Index t = 0; t < seq.num_frames(); ++t) {
        if (seq.silent[static_cast<std::size_t>(t)]) continue;
        acc += seq.frames.row(t).transpose();
        ++n;
    }
    if (n == 0) throw std::runtime_error("no speech content");
    acc /= static_cast<double>(n);
    if (acc.norm() < 1e-12) throw std::runtime_error("degenerate mean embedding");
    return Embedding(std::move(acc));
}

ChunkEmbeddings chunk_embeddings(const Waveform& w, double chunk_seconds) {
    const Eigen::Index chunk_len =
        static_cast<Eigen::Index>(std::llround(chunk_seconds * w.sample_rate));
    if (w.samples.size() < chunk_len)
        throw std::invalid_argument("signal shorter than one chunk");

    ChunkEmbeddings out;
    const Eigen::Index n_chunks = w.samples.size() / chunk_len;
    for (Eigen::Index b = 0; b < n_chunks; ++b) {
        Waveform chunk(w.samples.segment(b * chunk_len, chunk_len), w.sample_rate);
        EmbeddingSequence seq = embed_frames(chunk);
        if (seq.num_voiced() == 0) {
            out.silent_indices.push_back(static_cast<int>(b));
            continue;
        }
        out.chunks.emplace_back(static_cast<int>(b), mean_pool(seq));
    }
    return out;
}

} // namespace css
