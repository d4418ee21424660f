// Self-contained nonparametric statistics: midranks, Spearman correlation,
// Wilcoxon signed-rank, Mann-Whitney rank-sum, Kruskal-Wallis, one-sample
// Kolmogorov-Smirnov, percentile bootstrap, Bonferroni thresholding and
// quartile assignment.
//
// Conventions (fixed so results are bit-for-bit reproducible):
//  - ties always get midranks (average ranks);
//  - signed-rank drops zero differences (Wilcoxon convention) and reports
//    p = 1 when nothing is left;
//  - exact p-values are computed from the permutation distribution for
//    small samples (signed-rank: n <= 20 pairs; rank-sum: pooled n <= 24),
//    a normal approximation with tie and continuity corrections otherwise;
//  - two-sided p = min(1, 2 * min(P(T <= t), P(T >= t)));
//  - chi-square and Student-t tails go through the regularized incomplete
//    gamma / beta functions below.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ctseg/core.hpp"
#include "ctseg/rng.hpp"

namespace ctseg::stats {

// After Bonferroni correction the decision threshold is a fixed cutoff,
// not a p-value multiplication.
inline constexpr double kBonferroniAlpha = 0.0001;

inline bool bonferroni_significant(double p) { return p < kBonferroniAlpha; }

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<std::size_t> n;  // sample sizes, test-specific layout
  std::string method_note;
};

// ---------------------------------------------------------------------------
// Special functions (regularized incomplete gamma and beta)
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kMaxIter = 500;
inline constexpr double kEps = 1e-15;
inline constexpr double kFpMin = 1e-300;

// Regularized lower incomplete gamma P(a, x) by series expansion.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (Lentz).
inline double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0) || x < 0) throw Error("gamma_p: requires a > 0 and x >= 0");
  if (x == 0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) throw Error("gamma_q: requires a > 0 and x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Regularized incomplete beta I_x(a, b).
inline double beta_i(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw Error("beta_i: requires a, b > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cf(a, b, x) / a;
  return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (x <= 0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

// Two-sided tail probability of Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (df <= 0) throw Error("student_t_two_sided_p: df must be positive");
  return beta_i(df / 2.0, 0.5, df / (df + t * t));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

// Average ranks for ties; ranks are 1-based and sum to n(n+1)/2.
inline std::vector<double> midranks(std::span<const double> x) {
  if (x.empty()) throw Error("midranks: input is empty");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double v : x) {
    if (std::isnan(v)) throw Error("midranks: NaN in input");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

// Sum over tie groups of (t^3 - t), used by the rank-test variance
// corrections.
inline double tie_term(std::span<const double> ranks) {
  std::map<double, std::size_t> counts;
  for (double r : ranks) ++counts[r];
  double t = 0.0;
  for (const auto& [rank, c] : counts) {
    (void)rank;
    const double tc = static_cast<double>(c);
    t += tc * tc * tc - tc;
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::string method_note;
};

// Pearson correlation of midranks. p-value from the t approximation
// t = r * sqrt((n-2) / (1-r^2)) with n-2 degrees of freedom, two-sided.
inline SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error("spearman: need at least 3 pairs");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0)
    throw Error("spearman: undefined, one input has zero rank variance (all values tied)");
  SpearmanResult out;
  out.n = n;
  out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(out.rho) >= 1.0 - 1e-14) {
    out.rho = out.rho > 0 ? 1.0 : -1.0;
    out.p_value = 0.0;
    out.method_note = "exact monotone";
  } else {
    const double df = static_cast<double>(n - 2);
    const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
    out.p_value = student_t_two_sided_p(t, df);
    out.method_note = "t approximation, df = n - 2";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank
// ---------------------------------------------------------------------------

namespace detail {

// Exact permutation distribution of the signed-rank statistic: subset-sum
// counts over the (doubled, hence integral) midranks of |d|.
inline double signed_rank_exact_p(const std::vector<int>& ranks2, long long w2) {
  long long total = 0;
  for (int r : ranks2) total += r;
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(total) + 1, 0);
  ways[0] = 1;
  for (int r : ranks2) {
    for (long long s = total; s >= r; --s)
      ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
  }
  const double denom = std::ldexp(1.0, static_cast<int>(ranks2.size()));
  double p_le = 0, p_ge = 0;
  for (long long s = 0; s <= total; ++s) {
    const double frac = static_cast<double>(ways[static_cast<std::size_t>(s)]) / denom;
    if (s <= w2) p_le += frac;
    if (s >= w2) p_ge += frac;
  }
  return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

}  // namespace detail

// Paired signed-rank test on differences d. Zeros are dropped; with nothing
// left the test carries no evidence and p = 1. Exact two-sided p by
// enumeration for up to `exact_cutoff` nonzero pairs, otherwise a normal
// approximation with tie and continuity corrections.
inline TestResult wilcoxon_signed_rank(std::span<const double> d,
                                       std::size_t exact_cutoff = 20) {
  if (d.empty()) throw Error("wilcoxon_signed_rank: input is empty");
  std::vector<double> nz;
  nz.reserve(d.size());
  for (double v : d) {
    if (std::isnan(v)) throw Error("wilcoxon_signed_rank: NaN in input");
    if (v != 0.0) nz.push_back(v);
  }
  TestResult out;
  out.n = {d.size(), nz.size()};
  if (nz.empty()) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    out.method_note = "all differences zero (zeros dropped), no evidence";
    return out;
  }
  const std::size_t n = nz.size();
  std::vector<double> absd(n);
  for (std::size_t i = 0; i < n; ++i) absd[i] = std::abs(nz[i]);
  const auto ranks = midranks(absd);
  double w_plus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nz[i] > 0) w_plus += ranks[i];
  }
  out.statistic = w_plus;
  if (n <= exact_cutoff) {
    std::vector<int> ranks2(n);
    for (std::size_t i = 0; i < n; ++i)
      ranks2[i] = static_cast<int>(std::llround(2.0 * ranks[i]));
    out.p_value =
        detail::signed_rank_exact_p(ranks2, std::llround(2.0 * w_plus));
    out.method_note = "exact enumeration (zeros dropped)";
  } else {
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var =
        nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - detail::tie_term(ranks) / 48.0;
    if (var <= 0) {
      out.p_value = 1.0;
      out.method_note = "degenerate variance";
      return out;
    }
    double num = w_plus - mu;
    if (num > 0.5) num -= 0.5;
    else if (num < -0.5) num += 0.5;
    else num = 0.0;
    out.p_value = normal_two_sided_p(num / std::sqrt(var));
    out.method_note = "normal approximation, tie and continuity corrected (zeros dropped)";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U (Wilcoxon rank-sum)
// ---------------------------------------------------------------------------

namespace detail {

// Distribution of the doubled rank-sum of the first group over all
// C(N, nx) assignments, conditional on the observed (tied) ranks.
// ways[k][s] = number of k-subsets of ranks2 summing to s.
inline double mann_whitney_exact_p(const std::vector<int>& ranks2, std::size_t nx,
                                   long long u2_obs) {
  const std::size_t n_total = ranks2.size();
  long long total = 0;
  for (int r : ranks2) total += r;
  std::vector<std::vector<double>> ways(
      nx + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (int r : ranks2) {
    for (std::size_t k = std::min(nx, static_cast<std::size_t>(n_total)); k >= 1; --k) {
      for (long long s = total; s >= r; --s) {
        ways[k][static_cast<std::size_t>(s)] +=
            ways[k - 1][static_cast<std::size_t>(s - r)];
      }
    }
  }
  double denom = 0;
  for (long long s = 0; s <= total; ++s) denom += ways[nx][static_cast<std::size_t>(s)];
  // U2 = rank2 sum - nx(nx+1); both are integers on the doubled scale.
  const long long shift = static_cast<long long>(nx) * (static_cast<long long>(nx) + 1);
  double p_le = 0, p_ge = 0;
  for (long long s = 0; s <= total; ++s) {
    const double w = ways[nx][static_cast<std::size_t>(s)];
    if (w == 0) continue;
    const long long u2 = s - shift;
    if (u2 <= u2_obs) p_le += w;
    if (u2 >= u2_obs) p_ge += w;
  }
  return std::min(1.0, 2.0 * std::min(p_le / denom, p_ge / denom));
}

struct MannWhitneyParts {
  double u_x = 0;        // U statistic of the first sample
  double mu = 0;         // nm/2
  double sigma = 0;      // tie-corrected standard deviation
};

inline MannWhitneyParts mann_whitney_parts(std::span<const double> x,
                                           std::span<const double> y,
                                           std::vector<double>* joint_ranks = nullptr) {
  const std::size_t nx = x.size(), ny = y.size();
  std::vector<double> pooled;
  pooled.reserve(nx + ny);
  pooled.insert(pooled.end(), x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  double rank_sum_x = 0;
  for (std::size_t i = 0; i < nx; ++i) rank_sum_x += ranks[i];
  MannWhitneyParts parts;
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny);
  const double dn = dnx + dny;
  parts.u_x = rank_sum_x - dnx * (dnx + 1.0) / 2.0;
  parts.mu = dnx * dny / 2.0;
  const double tie = tie_term(ranks);
  parts.sigma = std::sqrt(dnx * dny / 12.0 * ((dn + 1.0) - tie / (dn * (dn - 1.0))));
  if (joint_ranks) *joint_ranks = ranks;
  return parts;
}

}  // namespace detail

// Tie-corrected z score of the Mann-Whitney U without continuity
// correction; squared, it matches the two-group Kruskal-Wallis H.
inline double mann_whitney_z_uncorrected(std::span<const double> x,
                                         std::span<const double> y) {
  const auto parts = detail::mann_whitney_parts(x, y);
  if (parts.sigma == 0) return 0.0;
  return (parts.u_x - parts.mu) / parts.sigma;
}

// Two-sided Mann-Whitney U test from joint midranks. Exact permutation p
// when the pooled sample is small (N <= exact_cutoff), otherwise normal
// approximation with tie and continuity corrections.
inline TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 std::size_t exact_cutoff = 24) {
  if (x.empty() || y.empty()) throw Error("mann_whitney_u: both samples must be nonempty");
  std::vector<double> ranks;
  const auto parts = detail::mann_whitney_parts(x, y, &ranks);
  TestResult out;
  out.statistic = parts.u_x;
  out.n = {x.size(), y.size()};
  const std::size_t n_total = x.size() + y.size();
  if (parts.sigma == 0) {
    out.p_value = 1.0;
    out.method_note = "degenerate variance (all values tied)";
    return out;
  }
  if (n_total <= exact_cutoff) {
    std::vector<int> ranks2(n_total);
    for (std::size_t i = 0; i < n_total; ++i)
      ranks2[i] = static_cast<int>(std::llround(2.0 * ranks[i]));
    out.p_value = detail::mann_whitney_exact_p(
        ranks2, x.size(), std::llround(2.0 * parts.u_x));
    out.method_note = "exact permutation distribution";
  } else {
    double num = parts.u_x - parts.mu;
    if (num > 0.5) num -= 0.5;
    else if (num < -0.5) num += 0.5;
    else num = 0.0;
    out.p_value = normal_two_sided_p(num / parts.sigma);
    out.method_note = "normal approximation, tie and continuity corrected";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis
// ---------------------------------------------------------------------------

// H with tie correction; p from the chi-square survival function with
// k-1 degrees of freedom. All values identical gives H = 0, p = 1.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error("kruskal_wallis: need at least 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw Error("kruskal_wallis: every group must be nonempty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const auto ranks = midranks(pooled);
  const double n = static_cast<double>(pooled.size());
  double h = 0;
  std::size_t offset = 0;
  TestResult out;
  for (const auto& g : groups) {
    double rank_sum = 0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    offset += g.size();
    h += rank_sum * rank_sum / static_cast<double>(g.size());
    out.n.push_back(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
  const double tie_corr = 1.0 - detail::tie_term(ranks) / (n * n * n - n);
  if (tie_corr <= 0) {
    // All pooled values identical.
    out.statistic = 0.0;
    out.p_value = 1.0;
    out.method_note = "degenerate (all values tied)";
    return out;
  }
  out.statistic = h / tie_corr;
  out.p_value = chi_square_sf(out.statistic, static_cast<double>(groups.size() - 1));
  out.method_note = "chi-square approximation, tie corrected, df = k - 1";
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov normality check
// ---------------------------------------------------------------------------

// One-sample KS statistic against a normal with the sample's own mean and
// SD. The p-value uses the asymptotic Kolmogorov distribution; estimating
// the parameters from the data makes it conservative (Lilliefors caveat).
inline TestResult ks_normality(std::span<const double> x) {
  if (x.size() < 5) throw Error("ks_normality: need at least 5 observations");
  const std::size_t n = x.size();
  std::vector<double> sorted(x.begin(), x.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw Error("ks_normality: NaN in input");
  }
  std::sort(sorted.begin(), sorted.end());
  const double dn = static_cast<double>(n);
  double mean = 0;
  for (double v : sorted) mean += v;
  mean /= dn;
  double ss = 0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (dn - 1.0));
  if (sd == 0) throw Error("ks_normality: zero variance");
  double d_stat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    const double upper = static_cast<double>(i + 1) / dn - f;
    const double lower = f - static_cast<double>(i) / dn;
    d_stat = std::max({d_stat, upper, lower});
  }
  const double lambda = (std::sqrt(dn) + 0.12 + 0.11 / std::sqrt(dn)) * d_stat;
  double p = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) *
                        std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16) break;
  }
  TestResult out;
  out.statistic = d_stat;
  out.p_value = std::clamp(p, 0.0, 1.0);
  out.n = {n};
  out.method_note =
      "asymptotic Kolmogorov p; mean and SD estimated from the sample, so "
      "the p-value is conservative (Lilliefors caveat)";
  return out;
}

// ---------------------------------------------------------------------------
// Percentile bootstrap
// ---------------------------------------------------------------------------

// q-th percentile (q in [0,1]) of a sorted vector, linear interpolation
// between order statistics at position q * (n - 1).
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error("percentile_sorted: empty input");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct Ci {
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap CI for the mean. Iteration i draws n indices from
// Rng::stream(seed, i) via bounded(n), in order; the CI takes the
// (1 +/- level)/2 percentiles of the resampled means.
inline Ci bootstrap_percentile_ci(std::span<const double> x, int iterations = 10000,
                                  double level = 0.95, std::uint64_t seed = 0) {
  if (x.empty()) throw Error("bootstrap_percentile_ci: empty input");
  if (iterations < 1) throw Error("bootstrap_percentile_ci: iterations must be >= 1");
  const std::size_t n = x.size();
  std::vector<double> means(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(it));
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += x[rng.bounded(n)];
    means[static_cast<std::size_t>(it)] = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  return {percentile_sorted(means, alpha), percentile_sorted(means, 1.0 - alpha)};
}

// ---------------------------------------------------------------------------
// Quartiles
// ---------------------------------------------------------------------------

struct QuartileScheme {
  std::array<double, 3> boundaries{};  // Q1/Q2, Q2/Q3, Q3/Q4 cut points
};

// Boundaries at the 25/50/75 percentiles. Values below the first boundary
// fall in Q1; each boundary belongs to the quartile above it.
inline QuartileScheme quartile_split(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t distinct =
      static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (distinct < 4) throw Error("quartile_split: need at least 4 distinct values");
  sorted.assign(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  QuartileScheme scheme;
  scheme.boundaries[0] = percentile_sorted(sorted, 0.25);
  scheme.boundaries[1] = percentile_sorted(sorted, 0.50);
  scheme.boundaries[2] = percentile_sorted(sorted, 0.75);
  if (!(scheme.boundaries[0] < scheme.boundaries[1] &&
        scheme.boundaries[1] < scheme.boundaries[2])) {
    throw Error("quartile_split: degenerate boundaries (too many ties near a quartile)");
  }
  return scheme;
}

// Quartile index 0..3 for a value.
inline int quartile_of(const QuartileScheme& s, double v) {
  if (v < s.boundaries[0]) return 0;
  if (v < s.boundaries[1]) return 1;
  if (v < s.boundaries[2]) return 2;
  return 3;
}

}  // namespace ctseg::stats
