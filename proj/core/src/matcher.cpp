#include "cte/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "cte/errors.hpp"

namespace cte {
namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * b[j];
  return s;
}

std::int64_t wrap_delta(std::int64_t raw, std::int64_t padded) {
  return raw > padded / 2 ? raw - padded : raw;
}

}  // namespace

ScoreVector score_direct(const DescriptorSequence& q, const DescriptorSequence& b,
                         std::size_t circular_length) {
  const std::size_t m = q.size();
  const std::size_t n = b.size();
  if (!is_power_of_two(circular_length) || circular_length < std::max(m, n)) {
    throw ValidationError("circular length must be a power of two >= max(m, n)");
  }
  if (q.dim() != b.dim()) throw ValidationError("descriptor dimensions differ");
  const std::size_t len = circular_length;
  ScoreVector sv{std::vector<double>(len, 0.0), 1, len};
  for (std::size_t delta = 0; delta < len; ++delta) {
    double s = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t src = (t + len - delta) % len;
      if (src < n) s += dot(q.frame(t), b.frame(src));
    }
    sv.values[delta] = s;
  }
  return sv;
}

ScoreVector spectrum_to_scores(std::span<const Complex> cross, SpectrumMode mode,
                               std::size_t padded) {
  const std::size_t kept = cross.size();
  const std::size_t len = mode == SpectrumMode::kFull ? padded : 2 * kept;
  if (kept == 0 || !is_power_of_two(len) ||
      (mode == SpectrumMode::kFull && kept != padded / 2 + 1)) {
    throw ValidationError("cross spectrum size does not match the encoding mode");
  }
  // sum_j conj(Q_j) B_j inverts to the correlation at -delta; conjugating the
  // spectrum flips it so index delta pairs q_t with b_{t - delta}.
  std::vector<Complex> spectrum(len, Complex{});
  if (mode == SpectrumMode::kFull) {
    for (std::size_t k = 0; k < kept; ++k) spectrum[k] = std::conj(cross[k]);
  } else {
    for (std::size_t k = 0; k < kept; ++k) spectrum[k] = std::conj(cross[k]);
    spectrum[kept] = Complex{};  // Nyquist
  }
  spectrum[0].imag(0.0);
  if (len > 1) spectrum[len / 2].imag(0.0);
  for (std::size_t k = 1; k < len / 2; ++k) spectrum[len - k] = std::conj(spectrum[k]);

  fft_in_place(spectrum, true);
  ScoreVector sv{std::vector<double>(len), padded / len, padded};
  for (std::size_t i = 0; i < len; ++i) sv.values[i] = spectrum[i].real();
  return sv;
}

ScoreVector score(const SpectralDescriptor& q, const SpectralDescriptor& b, double lambda,
                  bool regularize) {
  if (q.padded != b.padded || q.mode != b.mode || q.n_kept != b.n_kept) {
    throw ValidationError("cannot compare descriptors of padded length " +
                          std::to_string(q.padded) + " and " + std::to_string(b.padded) +
                          " (modes and kept columns must also agree)");
  }
  if (q.dim != b.dim) throw ValidationError("descriptor dimensions differ");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");

  std::vector<Complex> cross(q.n_kept);
  for (std::size_t i = 0; i < q.n_kept; ++i) {
    auto qc = q.column(i);
    auto bc = b.column(i);
    Complex num{};
    double den = lambda;
    for (std::size_t j = 0; j < q.dim; ++j) {
      num += std::conj(qc[j]) * bc[j];
      den += std::norm(qc[j]);
    }
    if (regularize) {
      if (den == 0.0) throw DivisionByZeroError(i);
      num /= den;
    }
    cross[i] = num;
  }
  return spectrum_to_scores(cross, q.mode, q.padded);
}

Peak find_peak(const ScoreVector& sv) {
  if (sv.values.empty()) throw ValidationError("empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sv.values.size(); ++i) {
    if (sv.values[i] > sv.values[best]) best = i;
  }
  const auto raw = static_cast<std::int64_t>(best * sv.stride);
  return {wrap_delta(raw, static_cast<std::int64_t>(sv.padded)), sv.values[best]};
}

std::vector<double> frame_similarities(const DescriptorSequence& q,
                                       const DescriptorSequence& b, std::int64_t delta) {
  const auto m = static_cast<std::int64_t>(q.size());
  const auto n = static_cast<std::int64_t>(b.size());
  std::vector<double> s(q.size(), 0.0);
  for (std::int64_t t = std::max<std::int64_t>(0, delta); t < std::min(m, n + delta); ++t) {
    s[static_cast<std::size_t>(t)] =
        dot(q.frame(static_cast<std::size_t>(t)), b.frame(static_cast<std::size_t>(t - delta)));
  }
  return s;
}

Refinement refine_boundaries(const DescriptorSequence& q, const DescriptorSequence& b,
                             std::int64_t delta, std::size_t period,
                             std::size_t search_radius) {
  if (q.dim() != b.dim()) throw ValidationError("descriptor dimensions differ");
  const auto m = static_cast<std::int64_t>(q.size());
  const auto n = static_cast<std::int64_t>(b.size());
  const auto radius = static_cast<std::int64_t>(search_radius);

  // Valid shifts with a non-empty overlap lie in [-(n - 1), m - 1].
  std::vector<std::int64_t> bases;
  if (period == 0) {
    bases.push_back(delta);
  } else {
    const auto p = static_cast<std::int64_t>(period);
    const std::int64_t lo = -(n - 1) - radius;
    std::int64_t c = delta - ((delta - lo) / p) * p;
    if (c < lo) c += p;
    for (; c <= m - 1 + radius; c += p) bases.push_back(c);
  }
  std::vector<std::int64_t> candidates;
  for (auto base : bases) {
    for (std::int64_t r = -radius; r <= radius; ++r) candidates.push_back(base + r);
  }
  // Closest to the coarse estimate first so ties keep it.
  std::stable_sort(candidates.begin(), candidates.end(), [&](auto a, auto c) {
    const auto da = std::llabs(a - delta), dc = std::llabs(c - delta);
    return da != dc ? da < dc : a < c;
  });

  bool found = false;
  std::int64_t best_shift = 0;
  double best_total = -std::numeric_limits<double>::infinity();
  for (auto c : candidates) {
    const std::int64_t lo = std::max<std::int64_t>(0, c);
    const std::int64_t hi = std::min(m, n + c);
    if (lo >= hi) continue;
    double total = 0.0;
    for (std::int64_t t = lo; t < hi; ++t) {
      total += dot(q.frame(static_cast<std::size_t>(t)), b.frame(static_cast<std::size_t>(t - c)));
    }
    if (!found || total > best_total) {
      found = true;
      best_total = total;
      best_shift = c;
    }
  }
  if (!found) throw NoOverlapError("no candidate shift overlaps the two sequences");

  const std::int64_t lo = std::max<std::int64_t>(0, best_shift);
  const std::int64_t hi = std::min(m, n + best_shift);
  const auto s = frame_similarities(q, b, best_shift);
  std::int64_t peak = lo;
  for (std::int64_t t = lo; t < hi; ++t) {
    if (s[static_cast<std::size_t>(t)] > s[static_cast<std::size_t>(peak)]) peak = t;
  }
  const double peak_value = s[static_cast<std::size_t>(peak)];
  std::int64_t start = peak;
  std::int64_t end = peak;
  if (peak_value > 0.0) {
    const double threshold = peak_value / 2.0;
    while (start > lo && s[static_cast<std::size_t>(start - 1)] >= threshold) --start;
    while (end + 1 < hi && s[static_cast<std::size_t>(end + 1)] >= threshold) ++end;
  }
  double run = 0.0;
  for (std::int64_t t = start; t <= end; ++t) run += s[static_cast<std::size_t>(t)];
  return {best_shift, start, end, run};
}

nlohmann::json to_json(const MatchCandidate& m) {
  nlohmann::json j{{"query_id", m.query_id},
                   {"db_id", m.db_id},
                   {"delta_frames", m.delta},
                   {"score", m.score},
                   {"t_start", nullptr},
                   {"t_end", nullptr},
                   {"refined_score", nullptr}};
  if (m.refined) {
    j["t_start"] = m.refined->t_start;
    j["t_end"] = m.refined->t_end;
    j["refined_score"] = m.refined->refined_score;
  }
  return j;
}

MatchCandidate match_from_json(const nlohmann::json& j) {
  try {
    MatchCandidate m;
    m.query_id = j.at("query_id").get<std::string>();
    m.db_id = j.at("db_id").get<std::string>();
    m.delta = j.at("delta_frames").get<std::int64_t>();
    m.score = j.at("score").get<double>();
    if (j.contains("refined_score") && !j["refined_score"].is_null()) {
      m.refined = Refinement{m.delta, j.at("t_start").get<std::int64_t>(),
                             j.at("t_end").get<std::int64_t>(),
                             j.at("refined_score").get<double>()};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed match record: ") + e.what());
  }
}

}  // namespace cte
