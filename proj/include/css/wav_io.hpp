#ifndef CSS_WAV_IO_HPP
#define CSS_WAV_IO_HPP

#include "css/audio.hpp"

#include <filesystem>

namespace css {

// RIFF PCM, 16-bit signed little-endian, mono, 16 kHz.
// Samples map to [-1, 1) by division by 32768.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

} // namespace css

#endif
