#pragma once

#include <vector>

namespace detphoton::fock {

inline constexpr int kDefaultMaxNumber = 64;
inline constexpr double kTailBound = 1e-12;

/// Diagonal number distribution truncated at n_max.
struct PhotonNumberDist {
  std::vector<double> probs;  // index n = 0..n_max

  int n_max() const { return static_cast<int>(probs.size()) - 1; }
  double total() const;
  double mean() const;
};

/// Thermal marginal of the two-mode squeezed state, n^k / (1 + n)^(k + 1).
/// Throws TruncationError if the dropped tail exceeds kTailBound.
PhotonNumberDist tms_distribution(double n_mean, int n_max = kDefaultMaxNumber);

/// Atomic number distribution after at least one D1 click. With
/// bg_signal > 0 a D1 background click can also herald, which leaves weight
/// on n = 0.
PhotonNumberDist conditional_distribution(double n_mean, double eta_s,
                                          int n_max = kDefaultMaxNumber,
                                          double bg_signal = 0.0);

/// Binomial thinning: every quantum survives independently with probability eta.
PhotonNumberDist apply_loss(const PhotonNumberDist& dist, double eta);

struct DetectionProbs {
  double click_one = 0.0;    // P(>= 1 click at D2), equal to D3 by symmetry
  double click_either = 0.0; // P(>= 1 click at D2 or D3)
  double coincidence = 0.0;  // P(>= 1 click at both)
};

/// Each quantum goes to D2 with probability eta/2, to D3 with eta/2, and is
/// lost otherwise. Summed exactly over the truncated distribution.
DetectionProbs detection_probs(const PhotonNumberDist& dist, double eta_total);

/// Smallest n_max >= floor whose thermal tail at n_mean, divided by
/// `normalization` (the herald probability for conditional states), is within kTailBound.
int required_max_number(double n_mean, int floor = kDefaultMaxNumber, double normalization = 1.0);

}  // namespace detphoton::fock
