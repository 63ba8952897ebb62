#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

namespace advicl::oracle {

inline std::vector<std::string> lower_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Full-table LCS dynamic programme.
inline std::size_t lcs_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

// Longest subsequence of `a` that is also a subsequence of `b`, by enumerating
// every subset of `a` (|a| <= 12).
inline std::size_t lcs_enumerate(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

inline double rouge_f1(std::size_t lcs, std::size_t cand, std::size_t ref) {
  if (cand == 0 || ref == 0 || lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(cand);
  const double r = static_cast<double>(lcs) / static_cast<double>(ref);
  return 2.0 * p * r / (p + r);
}

// Term-by-term D*, loss and JSD on a finite support.
inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

inline double ideal_loss(const std::vector<double>& pd, const std::vector<double>& pg) {
  double j = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double s = pd[i] + pg[i];
    if (s == 0.0) continue;
    j += xlogy(pd[i], pd[i] / s) + xlogy(pg[i], pg[i] / s);
  }
  return j;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) k += p[i] * std::log(p[i] / q[i]);
  }
  return k;
}

inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

}  // namespace advicl::oracle
