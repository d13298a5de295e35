#include "cte/spectral.hpp"

#include <charconv>
#include <cmath>

#include "binary_io.hpp"
#include "cte/errors.hpp"

namespace cte {

Pruning Pruning::fraction(std::size_t denominator) {
  if (!is_power_of_two(denominator) || denominator < 4) {
    throw ValidationError("pruning fraction must be 1/2^k with 2^k >= 4, got 1/" +
                          std::to_string(denominator));
  }
  return Pruning(denominator);
}

Pruning Pruning::parse(std::string_view text) {
  if (text == "full") return full();
  if (text.size() > 2 && text.substr(0, 2) == "1/") {
    std::size_t den = 0;
    auto rest = text.substr(2);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), den);
    if (ec == std::errc() && ptr == rest.data() + rest.size()) return fraction(den);
  }
  throw ValidationError("cannot parse pruning \"" + std::string(text) +
                        "\" (expected 'full' or '1/4', '1/8', ...)");
}

std::size_t Pruning::kept(std::size_t padded_length) const {
  if (is_full()) return padded_length / 2 + 1;
  if (padded_length < denominator_) {
    throw ValidationError("padded length " + std::to_string(padded_length) +
                          " is too short for pruning 1/" + std::to_string(denominator_));
  }
  return padded_length / denominator_;
}

std::string Pruning::to_string() const {
  return is_full() ? "full" : "1/" + std::to_string(denominator_);
}

SpectralDescriptor encode_padded(const DescriptorSequence& seq, std::size_t padded_length,
                                 Pruning pruning, bool normalize_freqs) {
  const std::size_t n = seq.size();
  const std::size_t d = seq.dim();
  if (!is_power_of_two(padded_length) || padded_length < n) {
    throw ValidationError("padded length " + std::to_string(padded_length) +
                          " must be a power of two >= n = " + std::to_string(n));
  }
  SpectralDescriptor out;
  out.video_id = seq.video_id();
  out.n = n;
  out.padded = padded_length;
  out.dim = d;
  out.mode = pruning.mode();
  out.n_kept = pruning.kept(padded_length);
  out.coeffs.assign(out.n_kept * d, Complex{});

  std::vector<Complex> row(padded_length);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(row.begin(), row.end(), Complex{});
    for (std::size_t t = 0; t < n; ++t) row[t] = seq.at(t, j);
    fft_in_place(row, false);
    for (std::size_t i = 0; i < out.n_kept; ++i) out.coeffs[i * d + j] = row[i];
  }
  // Real input: DC and Nyquist are real up to rounding; make it exact.
  for (std::size_t j = 0; j < d; ++j) out.coeffs[j].imag(0.0);
  if (out.mode == SpectrumMode::kFull) {
    for (std::size_t j = 0; j < d; ++j) {
      out.coeffs[(out.n_kept - 1) * d + j].imag(0.0);
    }
  }

  if (normalize_freqs) {
    out.freq_norms.resize(out.n_kept);
    for (std::size_t i = 0; i < out.n_kept; ++i) {
      auto col = out.column(i);
      double sq = 0.0;
      for (const auto& c : col) sq += std::norm(c);
      const double norm = std::sqrt(sq);
      out.freq_norms[i] = norm;
      if (norm > 0.0) {
        for (auto& c : col) c /= norm;
      }
    }
  }
  return out;
}

SpectralDescriptor encode(const DescriptorSequence& seq, Pruning pruning,
                          bool normalize_freqs) {
  return encode_padded(seq, next_power_of_two(seq.size()), pruning, normalize_freqs);
}

std::vector<SpectralDescriptor> encode_query_multisize(const DescriptorSequence& seq,
                                                       std::span<const std::size_t> sizes,
                                                       Pruning pruning,
                                                       bool normalize_freqs) {
  for (std::size_t size : sizes) {
    if (!is_power_of_two(size) || size < seq.size()) {
      throw ValidationError("query size " + std::to_string(size) +
                            " must be a power of two >= m = " + std::to_string(seq.size()));
    }
  }
  std::vector<SpectralDescriptor> out;
  out.reserve(sizes.size());
  for (std::size_t size : sizes) {
    out.push_back(encode_padded(seq, size, pruning, normalize_freqs));
  }
  return out;
}

SpectralDescriptor expand(const SpectralDescriptor& spec, std::size_t factor) {
  if (!is_power_of_two(factor)) {
    throw ValidationError("expansion factor " + std::to_string(factor) +
                          " is not a power of two");
  }
  if (factor == 1) return spec;

  SpectralDescriptor out;
  out.video_id = spec.video_id;
  out.n = spec.n;
  out.padded = spec.padded * factor;
  out.dim = spec.dim;
  out.mode = spec.mode;
  out.n_kept = spec.mode == SpectrumMode::kFull ? out.padded / 2 + 1 : spec.n_kept * factor;
  out.coeffs.assign(out.n_kept * out.dim, Complex{});
  const double scale = spec.normalized() ? 1.0 : static_cast<double>(factor);
  if (spec.normalized()) out.freq_norms.assign(out.n_kept, 0.0);

  for (std::size_t k = 0; k < spec.n_kept; ++k) {
    const std::size_t target = k * factor;
    if (target >= out.n_kept) break;
    auto src = spec.column(k);
    auto dst = out.column(target);
    for (std::size_t j = 0; j < out.dim; ++j) dst[j] = src[j] * scale;
    if (spec.normalized()) out.freq_norms[target] = spec.freq_norms[k] * factor;
  }
  return out;
}

std::string encode_spectral_bytes(const SpectralDescriptor& spec) {
  detail::ByteWriter w;
  w.bytes("CTES");
  w.u8(kCtesVersion);
  w.str(spec.video_id);
  w.u32(static_cast<std::uint32_t>(spec.n));
  w.u32(static_cast<std::uint32_t>(spec.padded));
  w.u8(static_cast<std::uint8_t>(spec.mode));
  w.u32(static_cast<std::uint32_t>(spec.n_kept));
  w.u32(static_cast<std::uint32_t>(spec.dim));
  for (const auto& c : spec.coeffs) {
    w.f32(static_cast<float>(c.real()));
    w.f32(static_cast<float>(c.imag()));
  }
  w.u8(spec.normalized() ? 1 : 0);
  for (double v : spec.freq_norms) w.f32(static_cast<float>(v));
  return w.take();
}

SpectralDescriptor decode_spectral_bytes(std::span<const char> bytes, std::size_t* consumed) {
  detail::ByteReader r(bytes);
  r.expect_magic("CTES");
  const auto version = r.u8();
  if (version != kCtesVersion) {
    throw FormatError("unsupported CTES version " + std::to_string(version));
  }
  SpectralDescriptor s;
  s.video_id = r.str();
  s.n = r.u32();
  s.padded = r.u32();
  const auto mode = r.u8();
  if (mode > 1) throw FormatError("unknown spectrum mode " + std::to_string(mode));
  s.mode = static_cast<SpectrumMode>(mode);
  s.n_kept = r.u32();
  s.dim = r.u32();
  if (!is_power_of_two(s.padded) || s.n_kept == 0 || s.dim == 0) {
    throw FormatError("inconsistent CTES header");
  }
  s.coeffs.resize(s.n_kept * s.dim);
  for (auto& c : s.coeffs) {
    const float re = r.f32();
    const float im = r.f32();
    c = Complex(re, im);
  }
  if (r.u8() != 0) {
    s.freq_norms.resize(s.n_kept);
    for (auto& v : s.freq_norms) v = r.f32();
  }
  if (consumed) *consumed = r.position();
  return s;
}

void write_spectral(const SpectralDescriptor& spec, const std::filesystem::path& path) {
  detail::write_file(path, encode_spectral_bytes(spec));
}

SpectralDescriptor read_spectral(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_spectral_bytes(bytes);
}

}  // namespace cte
