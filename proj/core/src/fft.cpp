#include "cte/fft.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

#include "cte/errors.hpp"

namespace cte {
namespace {

// exp(-2 pi i k / L) for k < L / 2, cached per thread and size.
const std::vector<Complex>& twiddles(std::size_t length) {
  thread_local std::unordered_map<std::size_t, std::vector<Complex>> cache;
  auto [it, inserted] = cache.try_emplace(length);
  if (inserted) {
    auto& table = it->second;
    table.resize(length / 2);
    for (std::size_t k = 0; k < length / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(length);
      table[k] = Complex(std::cos(angle), std::sin(angle));
    }
  }
  return it->second;
}

}  // namespace

void fft_in_place(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw ValidationError("transform length " + std::to_string(n) +
                          " is not a power of two");
  }
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex tw = inverse ? std::conj(w[k * step]) : w[k * step];
        const Complex u = data[base + k];
        const Complex v = data[base + k + half] * tw;
        data[base + k] = u + v;
        data[base + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

std::vector<Complex> dft(std::span<const Complex> signal, bool inverse) {
  std::vector<Complex> out(signal.begin(), signal.end());
  fft_in_place(out, inverse);
  return out;
}

}  // namespace cte
