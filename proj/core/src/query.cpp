#include <algorithm>
#include <map>
#include <thread>

#include "cte/engine.hpp"
#include "cte/errors.hpp"

namespace cte {
namespace {

// Splits [0, count) into contiguous chunks, one per worker.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

struct QueryEncodings {
  std::map<std::size_t, SpectralDescriptor> spectra;
  std::map<std::size_t, LookupTable> tables;
};

std::size_t target_size(std::size_t query_len, std::size_t db_padded) {
  return std::max(next_power_of_two(query_len), db_padded);
}

}  // namespace

std::vector<MatchCandidate> query_entries(const Index& index, const DescriptorSequence& q,
                                          std::span<const std::size_t> selected,
                                          const QueryOptions& options) {
  const auto& cfg = index.config();
  const auto entries = index.entries();
  if (!entries.empty() && q.dim() != index.dim()) {
    throw ValidationError("query has d = " + std::to_string(q.dim()) + ", index has d = " +
                          std::to_string(index.dim()));
  }
  if (options.top_k == 0 || selected.empty()) return {};
  if (options.refine && !index.has_raw()) {
    throw IoError("refinement needs the raw descriptor store (directory '" +
                  index.raw_dir().string() + "')");
  }

  QueryEncodings enc;
  for (std::size_t e : selected) {
    if (e >= entries.size()) throw ValidationError("entry index out of range");
    const std::size_t size = target_size(q.size(), entries[e].padded);
    if (enc.spectra.count(size)) continue;
    auto spec = encode_padded(q, size, cfg.pruning, cfg.normalize());
    if (index.codebook()) enc.tables.emplace(size, build_table(spec, cfg.lambda, *index.codebook()));
    enc.spectra.emplace(size, std::move(spec));
  }

  std::vector<MatchCandidate> out(selected.size());
  std::vector<std::size_t> strides(selected.size(), 1);
  parallel_for(selected.size(), options.threads, [&](std::size_t s) {
    const IndexEntry& entry = entries[selected[s]];
    const std::size_t size = target_size(q.size(), entry.padded);
    const std::size_t factor = size / entry.padded;
    ScoreVector sv;
    if (entry.code) {
      sv = score_pq(enc.tables.at(size), *entry.code, factor);
    } else {
      const auto& qspec = enc.spectra.at(size);
      sv = factor == 1 ? score(qspec, *entry.spectral, cfg.lambda, cfg.regularize)
                       : score(qspec, expand(*entry.spectral, factor), cfg.lambda,
                               cfg.regularize);
    }
    const Peak peak = find_peak(sv);
    out[s] = MatchCandidate{q.video_id(), entry.video_id, peak.delta, peak.score, std::nullopt};
    strides[s] = sv.stride;
  });

  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].score > out[b].score; });
  order.resize(std::min(order.size(), options.top_k));

  if (options.refine) {
    parallel_for(order.size(), options.threads, [&](std::size_t r) {
      auto& m = out[order[r]];
      const IndexEntry& entry = entries[selected[order[r]]];
      try {
        auto ref = refine_boundaries(q, index.raw(m.db_id), m.delta, entry.padded,
                                     strides[order[r]]);
        m.delta = ref.delta;
        m.refined = ref;
      } catch (const NoOverlapError&) {
        m.refined.reset();
      }
    });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = out[a].refined ? out[a].refined->refined_score : out[a].score;
      const double sb = out[b].refined ? out[b].refined->refined_score : out[b].score;
      return sa > sb;
    });
  }

  std::vector<MatchCandidate> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.push_back(std::move(out[i]));
  return ranked;
}

std::vector<MatchCandidate> query(const Index& index, const DescriptorSequence& q,
                                  const QueryOptions& options) {
  std::vector<std::size_t> all(index.entries().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return query_entries(index, q, all, options);
}

std::vector<MatchCandidate> all_pairs_match(const Index& index, bool refine,
                                            std::size_t threads) {
  const auto entries = index.entries();
  std::vector<std::vector<MatchCandidate>> per_query(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    std::vector<std::size_t> later;
    for (std::size_t j = i + 1; j < entries.size(); ++j) later.push_back(j);
    if (later.empty()) return;
    QueryOptions opts;
    opts.top_k = later.size();
    opts.refine = refine;
    auto ranked = query_entries(index, index.raw(entries[i].video_id), later, opts);
    // Back to entry order so the output does not depend on scores.
    std::map<std::string, MatchCandidate> by_id;
    for (auto& m : ranked) by_id.emplace(m.db_id, std::move(m));
    for (std::size_t j : later) per_query[i].push_back(std::move(by_id.at(entries[j].video_id)));
  });
  std::vector<MatchCandidate> all;
  for (auto& v : per_query) {
    for (auto& m : v) all.push_back(std::move(m));
  }
  return all;
}

}  // namespace cte
