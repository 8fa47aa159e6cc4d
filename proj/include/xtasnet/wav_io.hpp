#ifndef XTASNET_WAV_IO_HPP
#define XTASNET_WAV_IO_HPP

#include <string>

#include "xtasnet/dsp.hpp"

namespace xtasnet {

// Reads a RIFF/WAVE file holding 16-bit signed PCM mono audio.
// Samples map to [-1, 1) by division by 32768. Multi-channel or
// non-PCM-16 content is rejected.
Waveform read_wav(const std::string& path);

// Writes 16-bit PCM mono; amplitudes are rounded to the nearest step
// and clipped to the representable range.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace xtasnet

#endif  // XTASNET_WAV_IO_HPP
