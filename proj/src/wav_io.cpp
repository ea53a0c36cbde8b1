#include "css/wav_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace css {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

void wr_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& f, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    f.write(reinterpret_cast<char*>(b), 2);
}

} // namespace

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open wav file: " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("not a RIFF/WAVE file: " + path.string());

    std::size_t pos = 12;
    int channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_len = 0;
    while (pos + 8 <= buf.size()) {
        const unsigned char* hdr = buf.data() + pos;
        std::uint32_t chunk_len = rd_u32(hdr + 4);
        if (pos + 8 + chunk_len > buf.size()) chunk_len = std::uint32_t(buf.size() - pos - 8);
        if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
            const unsigned char* p = hdr + 8;
            std::uint16_t format = rd_u16(p);
            channels = rd_u16(p + 2);
            rate = rd_u32(p + 4);
            bits = rd_u16(p + 14);
            if (format != 1) throw std::runtime_error("only PCM wav is supported");
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = hdr + 8;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (!data) throw std::runtime_error("wav file has no data chunk: " + path.string());
    if (channels != 1) throw std::runtime_error("only mono wav is supported");
    if (bits != 16) throw std::runtime_error("only 16-bit PCM wav is supported");
    if (rate != kSampleRate)
        throw std::runtime_error("expected 16 kHz wav, got " + std::to_string(rate) + " Hz");

    const std::size_t n = data_len / 2;
    Eigen::VectorXd samples(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::int16_t s = static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
        samples[static_cast<Eigen::Index>(i)] = s / 32768.0;
    }
    return Waveform(std::move(samples), static_cast<int>(rate));
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
    if (w.sample_rate != kSampleRate)
        throw std::runtime_error("only 16 kHz wav output is supported");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write wav file: " + path.string());

    const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
    const std::uint32_t data_bytes = n * 2;
    f.write("RIFF", 4);
    wr_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    wr_u32(f, 16);
    wr_u16(f, 1); // PCM
    wr_u16(f, 1); // mono
    wr_u32(f, kSampleRate);
    wr_u32(f, kSampleRate * 2);
    wr_u16(f, 2);
    wr_u16(f, 16);
    f.write("data", 4);
    wr_u32(f, data_bytes);
    for (std::uint32_t i = 0; i < n; ++i) {
        double v = std::clamp(w.samples[i], -1.0, 32767.0 / 32768.0);
        std::int16_t s = static_cast<std::int16_t>(std::lrint(v * 32768.0));
        unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                              static_cast<unsigned char>((s >> 8) & 0xff)};
        f.write(reinterpret_cast<char*>(b), 2);
    }
}

} // namespace css
