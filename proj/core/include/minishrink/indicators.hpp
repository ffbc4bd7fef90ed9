#pragma once

// Quality indicators and statistics for comparing search outputs: Pareto
// dominance, exact hypervolume (k <= 4), front normalization, Pareto-front-size
// contribution, Mann-Whitney U, and Cliff's delta effect size.

#include <map>
#include <span>
#include <string>
#include <vector>

namespace minishrink {

// strict Pareto domination, minimization
bool dominates(std::span<const double> a, std::span<const double> b);

// indices of points no other point dominates (duplicates all survive)
std::vector<std::size_t> nondominated_indices(const std::vector<std::vector<double>>& points);

// Lebesgue measure of the union of boxes [point, reference], exact recursive
// dimension-sweep; points are clipped to the reference first.
double hypervolume(std::vector<std::vector<double>> front, std::vector<double> reference);

struct NormalizedFront {
  std::vector<std::vector<double>> points;  // in [0,1]^k
  std::vector<double> ideal;
  std::vector<double> nadir;
};

// Ideal/nadir come from the non-dominated set of all fronts combined; each
// front is mapped by (v - ideal) / (nadir - ideal), zero-range dimensions to 0,
// and clipped into [0,1]. Hypervolume is then taken against (1,...,1).
std::vector<NormalizedFront> normalize_fronts(
    const std::vector<std::vector<std::vector<double>>>& fronts);

struct PfsEntry {
  int count = 0;
  double percent = 0.0;
};

// Contribution of each named front to the combined non-dominated reference
// front. Duplicate points across algorithms are credited to every contributor.
std::map<std::string, PfsEntry> pfs_contribution(
    const std::map<std::string, std::vector<std::vector<double>>>& named_fronts);

struct MannWhitneyResult {
  double u = 0.0;          // U statistic of the first sample
  double p_two_sided = 1.0;
};

// Midranks for ties; exact p by enumeration when max(n_a, n_b) <= 8, else
// normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

enum class EffectMagnitude { negligible, small, medium, large };
const char* to_string(EffectMagnitude m);

struct CliffsDeltaResult {
  double delta = 0.0;  // in [-1, 1]
  EffectMagnitude magnitude = EffectMagnitude::negligible;
};

// (#{a>b} - #{a<b}) / (n_a * n_b); magnitude cutoffs 0.147 / 0.33 / 0.474
CliffsDeltaResult cliffs_delta(std::span<const double> a, std::span<const double> b);

}  // namespace minishrink
