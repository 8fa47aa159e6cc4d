#include "xtasnet/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace xtasnet {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE file: " + path);

  int sample_rate = 0;
  int channels = 0;
  int bits = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw IoError("truncated WAV chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("malformed fmt chunk in " + path);
      const std::uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(read_u32(bytes.data() + body + 4));
      bits = read_u16(bytes.data() + body + 14);
      if (format != 1)
        throw IoError("unsupported WAV encoding (want PCM) in " + path);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = size;
    }
    pos = body + size + (size & 1);  // chunks are word aligned
  }
  if (!have_fmt || data == nullptr)
    throw IoError("missing fmt or data chunk in " + path);
  if (channels != 1)
    throw IoError("expected mono audio, got " + std::to_string(channels) +
                  " channels in " + path);
  if (bits != 16)
    throw IoError("expected 16-bit PCM, got " + std::to_string(bits) +
                  " bits in " + path);

  const std::size_t n = data_len / 2;
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(data[2 * i] | (data[2 * i + 1] << 8)));
    w.samples[static_cast<Index>(i)] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  check_finite(w, "write_wav");
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<unsigned char> b;
  b.reserve(44 + 2 * n);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put_u32(b, 36 + 2 * n);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(b, 16);
  put_u16(b, 1);  // PCM
  put_u16(b, 1);  // mono
  put_u32(b, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(b, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put_u32(b, 2 * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double v = std::lround(static_cast<double>(w.samples[i]) * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(
        std::clamp(v, -32768.0, 32767.0));
    put_u16(b, static_cast<std::uint16_t>(s));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open WAV file for writing: " + path);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("failed writing WAV file: " + path);
}

}  // namespace xtasnet
