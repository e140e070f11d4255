#include "vidq/fcm.hpp"

#include <cmath>
#include <numeric>

#include "vidq/errors.hpp"
#include "vidq/rng.hpp"

namespace vidq {

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

std::vector<FeatureVector> seed_centers(const std::vector<FeatureVector>& x,
                                        int c, std::uint64_t seed) {
  auto rng = CounterRng::stream(seed, "fcm-init");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  // Prefer features with distinct values; fall back to repeats only when
  // there are fewer distinct values than clusters.
  std::vector<FeatureVector> centers;
  std::vector<std::size_t> repeats;
  for (auto i : order) {
    if (int(centers.size()) == c) break;
    bool dup = false;
    for (const auto& v : centers) {
      if (v == x[i]) {
        dup = true;
        break;
      }
    }
    if (dup) {
      repeats.push_back(i);
    } else {
      centers.push_back(x[i]);
    }
  }
  for (std::size_t r = 0; int(centers.size()) < c; ++r) centers.push_back(x[repeats[r]]);
  return centers;
}

std::vector<FeatureVector> update_centers(const std::vector<FeatureVector>& x,
                                          const std::vector<std::vector<double>>& u,
                                          const std::vector<FeatureVector>& previous,
                                          double m) {
  const std::size_t c = previous.size();
  const std::size_t dim = x.front().size();
  std::vector<FeatureVector> centers(c, FeatureVector(dim, 0.0));
  std::vector<double> weight(c, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double w = std::pow(u[i][j], m);
      if (w == 0.0) continue;
      weight[j] += w;
      for (std::size_t k = 0; k < dim; ++k) centers[j][k] += w * x[i][k];
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    if (weight[j] > 0.0) {
      for (auto& v : centers[j]) v /= weight[j];
    } else {
      centers[j] = previous[j];
    }
  }
  return centers;
}

}  // namespace

std::vector<double> fcm_memberships(const FeatureVector& x,
                                    const std::vector<FeatureVector>& centers,
                                    double fuzzifier) {
  const std::size_t c = centers.size();
  std::vector<double> d2(c);
  std::size_t zeros = 0;
  for (std::size_t j = 0; j < c; ++j) {
    d2[j] = squared_distance(x, centers[j]);
    zeros += d2[j] == 0.0;
  }
  std::vector<double> u(c, 0.0);
  if (zeros > 0) {
    for (std::size_t j = 0; j < c; ++j) {
      if (d2[j] == 0.0) u[j] = 1.0 / double(zeros);
    }
    return u;
  }
  const double power = 1.0 / (fuzzifier - 1.0);
  for (std::size_t j = 0; j < c; ++j) {
    double denom = 0.0;
    for (std::size_t l = 0; l < c; ++l) denom += std::pow(d2[j] / d2[l], power);
    u[j] = 1.0 / denom;
  }
  return u;
}

double fcm_objective(const std::vector<FeatureVector>& features,
                     const std::vector<std::vector<double>>& membership,
                     const std::vector<FeatureVector>& centers, double fuzzifier) {
  double j = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      j += std::pow(membership[i][c], fuzzifier) *
           squared_distance(features[i], centers[c]);
    }
  }
  return j;
}

FcmResult fcm_cluster(const std::vector<FeatureVector>& features,
                      const FcmOptions& opts) {
  if (features.empty()) throw InvalidConfig("fcm needs at least one feature");
  if (opts.num_clusters < 1) throw InvalidConfig("num_clusters must be >= 1");
  if (std::size_t(opts.num_clusters) > features.size()) {
    throw InvalidConfig("num_clusters exceeds the number of features");
  }
  if (!(opts.fuzzifier > 1.0)) throw InvalidConfig("fuzzifier must be > 1");
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw InvalidConfig("features differ in dimension");
  }

  FcmResult r;
  r.centers = seed_centers(features, opts.num_clusters, opts.rng_seed);
  r.membership.resize(features.size());
  for (int it = 0; it < std::max(1, opts.max_iter); ++it) {
    for (std::size_t i = 0; i < features.size(); ++i) {
      r.membership[i] = fcm_memberships(features[i], r.centers, opts.fuzzifier);
    }
    r.objective = fcm_objective(features, r.membership, r.centers, opts.fuzzifier);
    r.objective_history.push_back(r.objective);
    r.iterations = it + 1;
    const auto n = r.objective_history.size();
    if (n > 1 && std::abs(r.objective_history[n - 2] - r.objective) < opts.tol) break;
    if (it + 1 == opts.max_iter) break;
    r.centers = update_centers(features, r.membership, r.centers, opts.fuzzifier);
  }
  return r;
}

std::vector<int> harden(const FcmResult& result) {
  std::vector<int> labels;
  labels.reserve(result.membership.size());
  for (const auto& row : result.membership) {
    int best = 0;
    for (int j = 1; j < int(row.size()); ++j) {
      if (row[std::size_t(j)] > row[std::size_t(best)]) best = j;
    }
    labels.push_back(best);
  }
  return labels;
}

}  // namespace vidq
