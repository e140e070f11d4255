#pragma once

#include <cstdint>
#include <vector>

namespace vidq {

using FeatureVector = std::vector<double>;

struct FcmOptions {
  int num_clusters = 8;
  double fuzzifier = 2.0;  // m > 1
  double tol = 1e-6;       // stop when the objective changes by less
  int max_iter = 300;
  std::uint64_t rng_seed = 0;
};

struct FcmResult {
  // membership[i][j]: degree to which feature i belongs to cluster j.
  std::vector<std::vector<double>> membership;
  std::vector<FeatureVector> centers;
  double objective = 0.0;
  int iterations = 0;
  // Objective after each membership update; non-increasing.
  std::vector<double> objective_history;
};

/// Fuzzy C-Means with alternating membership / center updates. Centers are
/// seeded with distinct features drawn uniformly at random. A feature that
/// coincides with one or more centers gets its membership split evenly
/// across those centers and zero elsewhere.
FcmResult fcm_cluster(const std::vector<FeatureVector>& features,
                      const FcmOptions& opts);

/// Membership row for one feature given fixed centers.
std::vector<double> fcm_memberships(const FeatureVector& x,
                                    const std::vector<FeatureVector>& centers,
                                    double fuzzifier);

/// Sum over i, j of u_ij^m * ||x_i - v_j||^2.
double fcm_objective(const std::vector<FeatureVector>& features,
                     const std::vector<std::vector<double>>& membership,
                     const std::vector<FeatureVector>& centers, double fuzzifier);

/// Argmax membership per feature; ties go to the lowest cluster index.
std::vector<int> harden(const FcmResult& result);

}  // namespace vidq
