#ifndef CSS_AUDIO_HPP
#define CSS_AUDIO_HPP

#include <Eigen/Core>
#include <complex>
#include <stdexcept>

namespace css {

inline constexpr int kSampleRate = 16000;

// Mono sampled signal, nominal amplitude range [-1, 1].
struct Waveform {
    Eigen::VectorXd samples;
    int sample_rate = kSampleRate;

    Waveform() = default;
    Waveform(Eigen::VectorXd s, int sr = kSampleRate)
        : samples(std::move(s)), sample_rate(sr) {
        if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
    }

    Eigen::Index size() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
    double energy() const { return samples.squaredNorm(); }
    double rms() const {
        return samples.size() == 0 ? 0.0 : std::sqrt(samples.squaredNorm() / samples.size());
    }

    static Waveform zeros(Eigen::Index n, int sr = kSampleRate) {
        return Waveform(Eigen::VectorXd::Zero(n), sr);
    }
};

struct StftConfig {
    int fft_size = 512;
    int hop = 256;

    int num_bins() const { return fft_size / 2 + 1; }
    // periodic Hann; satisfies COLA at hop = fft_size/2
    Eigen::VectorXd window() const;
    void validate() const;
};

struct Spectrogram {
    // L frames x F bins
    Eigen::MatrixXcd bins;
    StftConfig config;
    int sample_rate = kSampleRate;

    Eigen::Index frames() const { return bins.rows(); }
    Eigen::Index num_bins() const { return bins.cols(); }
};

// Real-valued T-F mask, entries in [0, 1].
struct Mask {
    Eigen::MatrixXd values;

    Mask() = default;
    explicit Mask(Eigen::MatrixXd v);
};

Spectrogram stft(const Waveform& w, const StftConfig& c = {});
Waveform istft(const Spectrogram& s);
Spectrogram apply_mask(const Spectrogram& s, const Mask& m);

// Linear convolution via FFT, truncated to the length of x.
Eigen::VectorXd fft_convolve_truncated(const Eigen::VectorXd& x, const Eigen::VectorXd& h);

} // namespace css

#endif
