#pragma once

// Frequency-domain representation of descriptor sequences: zero-padding to
// a power of two, per-dimension FFT, low-frequency pruning, optional
// per-frequency L2 normalization, and the size-matching helpers used when
// query and database lengths differ.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cte/fft.hpp"
#include "cte/seqdesc.hpp"

namespace cte {

enum class SpectrumMode : std::uint8_t { kFull = 0, kPruned = 1 };

/// Which frequency columns an encoding keeps: the whole Hermitian half
/// spectrum (N/2 + 1 columns) or the lowest N / denominator columns, where
/// the denominator is a power of two >= 4.
class Pruning {
 public:
  static Pruning full() { return Pruning(0); }
  static Pruning fraction(std::size_t denominator);
  // "full" or "1/<power of two >= 4>".
  static Pruning parse(std::string_view text);

  bool is_full() const noexcept { return denominator_ == 0; }
  std::size_t denominator() const noexcept { return denominator_; }
  SpectrumMode mode() const noexcept {
    return is_full() ? SpectrumMode::kFull : SpectrumMode::kPruned;
  }
  // Stored columns at padded length N; throws if N is too short to prune.
  std::size_t kept(std::size_t padded_length) const;
  std::string to_string() const;

  friend bool operator==(Pruning, Pruning) = default;

 private:
  explicit Pruning(std::size_t denominator) : denominator_(denominator) {}
  std::size_t denominator_;
};

struct SpectralDescriptor {
  std::string video_id;
  std::size_t n = 0;        // original frame count
  std::size_t padded = 0;   // N, a power of two
  std::size_t dim = 0;      // d
  SpectrumMode mode = SpectrumMode::kFull;
  std::size_t n_kept = 0;
  // Frequency-major: coeffs[i * dim + j] is dimension j of column f_i.
  std::vector<Complex> coeffs;
  // Pre-normalization column norms; empty when columns were not normalized.
  std::vector<double> freq_norms;

  bool normalized() const noexcept { return !freq_norms.empty(); }
  std::span<const Complex> column(std::size_t i) const {
    return {coeffs.data() + i * dim, dim};
  }
  std::span<Complex> column(std::size_t i) { return {coeffs.data() + i * dim, dim}; }
};

/// Pads each dimension row to N = next_power_of_two(n), transforms it and
/// keeps the columns selected by `pruning`.
SpectralDescriptor encode(const DescriptorSequence& seq, Pruning pruning,
                          bool normalize_freqs);

/// Same as encode() but padded to an explicit power-of-two length >= n.
SpectralDescriptor encode_padded(const DescriptorSequence& seq, std::size_t padded_length,
                                 Pruning pruning, bool normalize_freqs);

/// One encoding per requested padded size (each a power of two >= n).
std::vector<SpectralDescriptor> encode_query_multisize(const DescriptorSequence& seq,
                                                       std::span<const std::size_t> sizes,
                                                       Pruning pruning,
                                                       bool normalize_freqs);

/// Descriptor of the padded signal repeated `factor` times: column factor*k
/// holds f_k and every other column is zero. Unnormalized coefficients are
/// multiplied by `factor` so the result equals encoding the repeated
/// signal; normalized columns are copied as is.
SpectralDescriptor expand(const SpectralDescriptor& spec, std::size_t factor);

// CTES: "CTES", u8 version, id, u32 n, u32 N, u8 mode, u32 n_kept, u32 d,
// n_kept*d interleaved f32 (re, im) frequency-major, u8 has_norms,
// [n_kept f32 norms].
inline constexpr std::uint8_t kCtesVersion = 1;

std::string encode_spectral_bytes(const SpectralDescriptor& spec);
SpectralDescriptor decode_spectral_bytes(std::span<const char> bytes,
                                         std::size_t* consumed = nullptr);
void write_spectral(const SpectralDescriptor& spec, const std::filesystem::path& path);
SpectralDescriptor read_spectral(const std::filesystem::path& path);

}  // namespace cte
