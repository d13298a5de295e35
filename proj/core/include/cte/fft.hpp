#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cte {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

// Smallest power of two >= v (1 for v == 0).
constexpr std::size_t next_power_of_two(std::size_t v) noexcept {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

/// Radix-2 transform in place. Forward: X_k = sum_t x_t exp(-2 pi i k t / L).
/// Inverse carries the 1/L factor. Throws ValidationError unless L is a
/// power of two.
void fft_in_place(std::span<Complex> data, bool inverse);

std::vector<Complex> dft(std::span<const Complex> signal, bool inverse);

}  // namespace cte
