#include "css/audio.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace css {

Eigen::VectorXd StftConfig::window() const {
    Eigen::VectorXd w(fft_size);
    for (int n = 0; n < fft_size; ++n)
        w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / fft_size);
    return w;
}

void StftConfig::validate() const {
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("fft_size must be a positive power of two");
    if (hop <= 0 || hop > fft_size)
        throw std::invalid_argument("hop must be in (0, fft_size]");
}

Mask::Mask(Eigen::MatrixXd v) : values(std::move(v)) {
    if ((values.array() < 0.0).any() || (values.array() > 1.0).any())
        throw std::invalid_argument("mask entries must lie in [0, 1]");
}

Spectrogram stft(const Waveform& w, const StftConfig& c) {
    c.validate();
    const Eigen::Index n = w.samples.size();
    if (n < c.fft_size) throw std::invalid_argument("signal too short");

    const Eigen::Index frames = (n - c.fft_size) / c.hop + 1;
    const int nbins = c.num_bins();
    const Eigen::VectorXd win = c.window();

    Spectrogram out;
    out.config = c;
    out.sample_rate = w.sample_rate;
    out.bins.resize(frames, nbins);

    Eigen::FFT<double> fft;
    std::vector<double> frame(c.fft_size);
    std::vector<std::complex<double>> spec;
    for (Eigen::Index l = 0; l < frames; ++l) {
        const Eigen::Index off = l * c.hop;
        for (int i = 0; i < c.fft_size; ++i) frame[i] = w.samples[off + i] * win[i];
        fft.fwd(spec, frame);
        for (int k = 0; k < nbins; ++k) out.bins(l, k) = spec[k];
    }
    return out;
}

Waveform istft(const Spectrogram& s) {
    const StftConfig& c = s.config;
    c.validate();
    if (s.bins.cols() != c.num_bins())
        throw std::invalid_argument("spectrogram bin count does not match config");

    const Eigen::Index frames = s.bins.rows();
    const Eigen::Index out_len = (frames - 1) * static_cast<Eigen::Index>(c.hop) + c.fft_size;
    const Eigen::VectorXd win = c.window();

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_len);
    Eigen::VectorXd norm = Eigen::VectorXd::Zero(out_len);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec(c.fft_size);
    std::vector<double> frame;
    for (Eigen::Index l = 0; l < frames; ++l) {
        // rebuild the full spectrum from the half-spectrum (hermitian symmetry)
        for (int k = 0; k < c.num_bins(); ++k) spec[k] = s.bins(l, k);
        for (int k = c.num_bins(); k < c.fft_size; ++k)
            spec[k] = std::conj(s.bins(l, c.fft_size - k));
        fft.inv(frame, spec);
        const Eigen::Index off = l * c.hop;
        for (int i = 0; i < c.fft_size; ++i) {
            acc[off + i] += frame[i] * win[i];
            norm[off + i] += win[i] * win[i];
        }
    }
    // COLA normalization. Edges with partial window coverage are synthesized
    // with a floored normalizer: an inconsistent (e.g. masked) spectrogram
    // would otherwise be amplified by 1/w^2 at the frame boundaries.
    const double norm_floor = 0.25;
    for (Eigen::Index i = 0; i < out_len; ++i)
        acc[i] /= std::max(norm[i], norm_floor);
    return Waveform(std::move(acc), s.sample_rate);
}

Spectrogram apply_mask(const Spectrogram& s, const Mask& m) {
    if (s.bins.rows() != m.values.rows() || s.bins.cols() != m.values.cols())
        throw std::invalid_argument("mask shape does not match spectrogram");
    Spectrogram out = s;
    out.bins = s.bins.cwiseProduct(m.values.cast<std::complex<double>>());
    return out;
}

Eigen::VectorXd fft_convolve_truncated(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
    const Eigen::Index n = x.size(), m = h.size();
    if (n == 0 || m == 0) return Eigen::VectorXd::Zero(n);
    Eigen::Index len = 1;
    while (len < n + m - 1) len <<= 1;

    std::vector<double> a(len, 0.0), b(len, 0.0);
    Eigen::VectorXd::Map(a.data(), n) = x;
    Eigen::VectorXd::Map(b.data(), m) = h;

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (Eigen::Index i = 0; i < len; ++i) fa[i] *= fb[i];
    std::vector<double> y;
    fft.inv(y, fa);
    return Eigen::VectorXd::Map(y.data(), n);
}

} // namespace css
