#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "isac/textdoc.hpp"
#include "isac/waveform.hpp"

namespace isac {
namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bits_string(const std::vector<std::uint8_t>& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::optional<std::vector<std::uint8_t>> parse_bits(const std::string& s) {
  std::vector<std::uint8_t> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') return std::nullopt;
    out.push_back(c == '1');
  }
  return out;
}

void put_le(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* ext) {
  auto p = base;
  p += ext;
  return p;
}

}  // namespace

void write_waveform(const Waveform& u, const std::filesystem::path& base) {
  const auto binPath = with_suffix(base, ".bin");
  const auto hdrPath = with_suffix(base, ".hdr");
  std::ofstream bin(binPath, std::ios::binary);
  if (!bin) throw IoError("cannot write " + binPath.string());
  for (const auto& s : u.samples) {
    put_le(bin, s.real());
    put_le(bin, s.imag());
  }
  if (!bin) throw IoError("write failed: " + binPath.string());

  const auto& l = u.layout;
  std::ostringstream h;
  h << "schema_version = 1\n";
  h << "# samples: interleaved float64 (re, im), little-endian, in " << binPath.filename().string() << "\n";
  h << "[waveform]\n";
  h << "samples = " << u.samples.size() << "\n";
  h << "sample_rate = " << g17(u.sampleRate) << "\n";
  h << "duration = " << g17(u.duration()) << "\n";
  h << "band_lo = " << g17(u.band.lo) << "\n";
  h << "band_hi = " << g17(u.band.hi) << "\n";
  h << "[layout]\n";
  h << "kind = " << to_string(l.kind) << "\n";
  h << "bits_per_symbol = " << l.bitsPerSymbol << "\n";
  h << "oversampling = " << l.oversampling << "\n";
  h << "subcarriers = " << l.numSubcarriers << "\n";
  h << "symbols = " << l.numSymbols << "\n";
  h << "cp_length = " << l.cpLength << "\n";
  h << "chirp_bandwidth = " << g17(l.chirpBandwidth) << "\n";
  h << "active_subcarriers =";
  for (auto k : l.activeSubcarriers) h << " " << k;
  h << "\n";
  h << "pilot_mask = " << bits_string(l.pilotMask) << "\n";
  h << "data_bits = " << bits_string(l.dataBits) << "\n";
  std::ofstream hdr(hdrPath);
  if (!hdr) throw IoError("cannot write " + hdrPath.string());
  hdr << h.str();
}

Waveform read_waveform(const std::filesystem::path& base) {
  const auto hdrPath = with_suffix(base, ".hdr");
  const auto binPath = with_suffix(base, ".bin");
  const TextDoc doc = TextDoc::load(hdrPath.string());
  DocReader r(doc);
  r.declare("", {"schema_version"});
  r.declare("waveform", {"samples", "sample_rate", "duration", "band_lo", "band_hi"});
  r.declare("layout", {"kind", "bits_per_symbol", "oversampling", "subcarriers", "symbols", "cp_length",
                       "chirp_bandwidth", "active_subcarriers", "pilot_mask", "data_bits"});

  Waveform w;
  const auto count = r.unsigned_integer("waveform", "samples", true);
  w.sampleRate = r.number("waveform", "sample_rate", true).value_or(1.0);
  w.band.lo = r.number("waveform", "band_lo", true).value_or(0.0);
  w.band.hi = r.number("waveform", "band_hi", true).value_or(0.0);
  r.number("waveform", "duration");
  auto& l = w.layout;
  if (auto k = r.text("layout", "kind", true)) {
    if (*k == "psk") l.kind = ModulationKind::SingleCarrierPsk;
    else if (*k == "ofdm") l.kind = ModulationKind::Ofdm;
    else if (*k == "chirp") l.kind = ModulationKind::Chirp;
    else r.fail("layout", "kind", "unknown modulation kind '" + *k + "'");
  }
  l.bitsPerSymbol = static_cast<int>(r.integer("layout", "bits_per_symbol").value_or(1));
  l.oversampling = r.unsigned_integer("layout", "oversampling").value_or(1);
  l.numSubcarriers = r.unsigned_integer("layout", "subcarriers").value_or(0);
  l.numSymbols = r.unsigned_integer("layout", "symbols").value_or(0);
  l.cpLength = r.unsigned_integer("layout", "cp_length").value_or(0);
  l.chirpBandwidth = r.number("layout", "chirp_bandwidth").value_or(0.0);
  if (auto a = r.text("layout", "active_subcarriers")) {
    if (auto idx = parse_index_set(*a)) l.activeSubcarriers = *idx;
    else r.fail("layout", "active_subcarriers", "malformed index list");
  }
  for (auto [key, dest] : {std::pair{"pilot_mask", &l.pilotMask}, std::pair{"data_bits", &l.dataBits}}) {
    if (auto t = r.text("layout", key)) {
      if (auto b = parse_bits(*t)) *dest = *b;
      else r.fail("layout", key, "expected a 0/1 string");
    }
  }
  r.finish();

  std::ifstream bin(binPath, std::ios::binary);
  if (!bin) throw IoError("cannot read " + binPath.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (raw.size() != *count * 16)
    throw IoError(binPath.string() + ": expected " + std::to_string(*count * 16) + " bytes, found " +
                  std::to_string(raw.size()));
  w.samples.resize(*count);
  for (std::size_t i = 0; i < *count; ++i)
    w.samples[i] = {get_le(&raw[16 * i]), get_le(&raw[16 * i + 8])};
  return w;
}

}  // namespace isac
