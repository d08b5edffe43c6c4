#pragma once

#include <cstddef>
#include <vector>

namespace oracle {

inline double energy(const std::vector<double>& s, unsigned long mask, double alpha) {
  double e = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    const bool on = (mask >> t) & 1UL;
    e += on ? s[t] : 1.0 - s[t];
    if (t + 1 < s.size() && on != static_cast<bool>((mask >> (t + 1)) & 1UL)) e -= alpha;
  }
  return e;
}

struct ExhaustiveTrim {
  double best_energy = 0.0;
  std::vector<unsigned long> optimal_masks;
};

// Enumerates all 2^T binary labelings; bit t of a mask is the label of frame t.
inline ExhaustiveTrim exhaustive_trim(const std::vector<double>& s, double alpha) {
  ExhaustiveTrim out;
  const unsigned long n = 1UL << s.size();
  for (unsigned long m = 0; m < n; ++m) {
    const double e = energy(s, m, alpha);
    if (m == 0 || e > out.best_energy) {
      out.best_energy = e;
      out.optimal_masks = {m};
    } else if (e == out.best_energy) {
      out.optimal_masks.push_back(m);
    }
  }
  return out;
}

inline unsigned long to_mask(const std::vector<int>& labels) {
  unsigned long m = 0;
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (labels[t]) m |= 1UL << t;
  return m;
}

inline int label_changes(const std::vector<int>& labels) {
  int c = 0;
  for (std::size_t t = 1; t < labels.size(); ++t) c += labels[t] != labels[t - 1];
  return c;
}

}  // namespace oracle
