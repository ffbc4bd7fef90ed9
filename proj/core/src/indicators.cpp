#include "minishrink/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace minishrink {

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dominates: dimension mismatch");
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

std::vector<std::size_t> nondominated_indices(const std::vector<std::vector<double>>& points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j)
      if (j != i && dominates(points[j], points[i])) dominated = true;
    if (!dominated) out.push_back(i);
  }
  return out;
}

namespace {

// Dimension-sweep: slice along the last active coordinate and integrate the
// (k-1)-dimensional hypervolume of each slab's active points.
double hv_sweep(const std::vector<std::vector<double>>& pts, const std::vector<double>& ref,
                std::size_t k) {
  if (pts.empty()) return 0.0;
  if (k == 1) {
    double best = ref[0];
    for (const auto& p : pts) best = std::min(best, p[0]);
    return ref[0] - best;
  }
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pts[a][k - 1] < pts[b][k - 1]; });

  double total = 0.0;
  std::vector<std::vector<double>> active;
  for (std::size_t i = 0; i < order.size(); ++i) {
    active.push_back(pts[order[i]]);
    const double z = pts[order[i]][k - 1];
    const double z_next = (i + 1 < order.size()) ? pts[order[i + 1]][k - 1] : ref[k - 1];
    if (z_next > z) total += (z_next - z) * hv_sweep(active, ref, k - 1);
  }
  return total;
}

}  // namespace

double hypervolume(std::vector<std::vector<double>> front, std::vector<double> reference) {
  const std::size_t k = reference.size();
  std::vector<std::vector<double>> pts;
  for (auto& p : front) {
    if (p.size() != k) throw std::invalid_argument("hypervolume: dimension mismatch");
    bool degenerate = false;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::min(p[j], reference[j]);  // clip; boxes never extend past ref
      if (p[j] >= reference[j]) degenerate = true;
    }
    if (!degenerate) pts.push_back(std::move(p));
  }
  if (pts.empty()) return 0.0;
  // dominated points add nothing; filtering keeps the sweep small
  std::vector<std::vector<double>> nd;
  for (std::size_t i : nondominated_indices(pts)) nd.push_back(pts[i]);
  std::sort(nd.begin(), nd.end());
  nd.erase(std::unique(nd.begin(), nd.end()), nd.end());
  return hv_sweep(nd, reference, k);
}

std::vector<NormalizedFront> normalize_fronts(
    const std::vector<std::vector<std::vector<double>>>& fronts) {
  std::size_t k = 0;
  std::vector<std::vector<double>> combined;
  for (const auto& f : fronts)
    for (const auto& p : f) {
      if (k == 0) k = p.size();
      if (p.size() != k) throw std::invalid_argument("normalize_fronts: dimension mismatch");
      combined.push_back(p);
    }

  std::vector<double> ideal(k, 0.0), nadir(k, 0.0);
  if (!combined.empty()) {
    bool first = true;
    for (std::size_t i : nondominated_indices(combined)) {
      const auto& p = combined[i];
      for (std::size_t j = 0; j < k; ++j) {
        if (first || p[j] < ideal[j]) ideal[j] = p[j];
        if (first || p[j] > nadir[j]) nadir[j] = p[j];
      }
      first = false;
    }
  }

  std::vector<NormalizedFront> out;
  for (const auto& f : fronts) {
    NormalizedFront nf;
    nf.ideal = ideal;
    nf.nadir = nadir;
    for (const auto& p : f) {
      std::vector<double> q(k);
      for (std::size_t j = 0; j < k; ++j) {
        const double range = nadir[j] - ideal[j];
        q[j] = range > 0 ? std::clamp((p[j] - ideal[j]) / range, 0.0, 1.0) : 0.0;
      }
      nf.points.push_back(std::move(q));
    }
    out.push_back(std::move(nf));
  }
  return out;
}

std::map<std::string, PfsEntry> pfs_contribution(
    const std::map<std::string, std::vector<std::vector<double>>>& named_fronts) {
  if (named_fronts.empty()) throw std::invalid_argument("pfs_contribution: no fronts");

  // within one algorithm a point counts once; across algorithms duplicates
  // are credited to every contributor
  struct Tagged {
    const std::string* algo;
    const std::vector<double>* point;
  };
  std::map<std::string, std::vector<std::vector<double>>> unique_fronts;
  for (const auto& [algo, front] : named_fronts) {
    auto f = front;
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    unique_fronts.emplace(algo, std::move(f));
  }
  std::vector<Tagged> all;
  for (const auto& [algo, front] : unique_fronts)
    for (const auto& p : front) all.push_back({&algo, &p});

  std::map<std::string, PfsEntry> out;
  for (const auto& [algo, _] : named_fronts) out[algo] = PfsEntry{};
  int total = 0;
  for (const Tagged& t : all) {
    bool dominated = false;
    for (const Tagged& o : all) {
      if (o.point == t.point) continue;
      if (dominates(*o.point, *t.point)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) {
      ++out[*t.algo].count;
      ++total;
    }
  }
  for (auto& [_, entry] : out)
    entry.percent = total > 0 ? 100.0 * entry.count / total : 0.0;
  return out;
}

namespace {

// midranks of the pooled sample, returned per element of (a then b)
std::vector<double> midranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, std::size_t>> pooled(n);
  for (std::size_t i = 0; i < a.size(); ++i) pooled[i] = {a[i], i};
  for (std::size_t i = 0; i < b.size(); ++i) pooled[a.size() + i] = {b[i], a.size() + i};
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[pooled[t].second] = mid;
    i = j + 1;
  }
  return ranks;
}

double phi_tail_two_sided(double z) {
  // 2 * (1 - Phi(z)) for z >= 0
  return std::erfc(z / std::numbers::sqrt2_v<double>);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  const std::vector<double> ranks = midranks(a, b);

  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
  const double u_a = rank_sum_a - static_cast<double>(na) * (na + 1) / 2.0;
  const double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;

  MannWhitneyResult result;
  result.u = u_a;

  if (std::max(na, nb) <= 8) {
    // exact permutation distribution over the observed midranks
    const double obs_dev = std::abs(u_a - mean_u);
    std::vector<double> sorted_ranks = ranks;
    std::sort(sorted_ranks.begin(), sorted_ranks.end());
    long long hits = 0, combos = 0;
    // walk every na-subset of the pooled ranks, tracking the rank sum
    auto recurse = [&](auto&& self, std::size_t start, std::size_t depth, double sum) -> void {
      if (depth == na) {
        ++combos;
        const double u_s = sum - static_cast<double>(na) * (na + 1) / 2.0;
        if (std::abs(u_s - mean_u) >= obs_dev - 1e-12) ++hits;
        return;
      }
      for (std::size_t i = start; i + (na - depth) <= n; ++i)
        self(self, i + 1, depth + 1, sum + sorted_ranks[i]);
    };
    recurse(recurse, 0, 0, 0.0);
    result.p_two_sided = static_cast<double>(hits) / static_cast<double>(combos);
    return result;
  }

  // normal approximation with tie and continuity corrections
  double tie_term = 0.0;
  {
    std::vector<double> sorted_ranks = ranks;
    std::sort(sorted_ranks.begin(), sorted_ranks.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted_ranks[j + 1] == sorted_ranks[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double var_u = (mean_u / 6.0) * (static_cast<double>(n + 1) -
                                         tie_term / (static_cast<double>(n) * (n - 1)));
  if (var_u <= 0) {
    result.p_two_sided = 1.0;
    return result;
  }
  const double z = std::max(0.0, std::abs(u_a - mean_u) - 0.5) / std::sqrt(var_u);
  result.p_two_sided = std::clamp(phi_tail_two_sided(z), 0.0, 1.0);
  return result;
}

const char* to_string(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::negligible: return "negligible";
    case EffectMagnitude::small: return "small";
    case EffectMagnitude::medium: return "medium";
    case EffectMagnitude::large: return "large";
  }
  return "?";
}

CliffsDeltaResult cliffs_delta(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta: empty sample");
  long long greater = 0, less = 0;
  for (double x : a)
    for (double y : b) {
      if (x > y) ++greater;
      if (x < y) ++less;
    }
  CliffsDeltaResult r;
  r.delta = static_cast<double>(greater - less) /
            (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  const double mag = std::abs(r.delta);
  if (mag < 0.147) {
    r.magnitude = EffectMagnitude::negligible;
  } else if (mag < 0.33) {
    r.magnitude = EffectMagnitude::small;
  } else if (mag < 0.474) {
    r.magnitude = EffectMagnitude::medium;
  } else {
    r.magnitude = EffectMagnitude::large;
  }
  return r;
}

}  // namespace minishrink
