#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roomenv/core.hpp"
#include "roomenv/envelope.hpp"
#include "roomenv/random.hpp"

namespace roomenv {

struct NormalMap {
  Pointmap normals;  // unit vectors, NaN where invalid
  Mask valid;
};

// Plane fit over each valid pixel's 3x3 window (smallest-eigenvalue
// eigenvector of the window covariance). Requires at least 6 valid
// neighbours; normals face the camera at the origin of the pointmap frame.
NormalMap estimate_normals(const Pointmap& points_cam, const Mask& valid);

// Equal-weight von Mises-Fisher kernel density on S^2. Repeated centres are
// stored once with a multiplicity, which leaves the density unchanged.
class VmfKde {
 public:
  VmfKde(std::span<const Vec3> centers, double kappa);

  /// Throws Error(NonUnitInput) unless |x| = 1 within 1e-6.
  double density(const Vec3& x) const;

  double kappa() const { return kappa_; }
  /// log C3(kappa) = log(kappa / (4 pi sinh kappa)).
  double log_norm_const() const { return log_norm_const_; }
  std::size_t kernel_count() const { return total_; }
  const std::vector<Vec3>& unique_centers() const { return centers_; }

 private:
  std::vector<Vec3> centers_;
  std::vector<double> weights_;
  std::size_t total_ = 0;
  double kappa_;
  double log_norm_const_;
  double peak_;  // C3(kappa) * e^kappa, evaluated stably
};

/// Uniformly distributed unit vector.
Vec3 uniform_unit_vector(Rng& rng);

/// Cube-map (32x32 bins per face) mode of the normals, returned as the
/// normalised mean of the members of the fullest bin (lowest bin on ties).
Vec3 dominant_direction(std::span<const Vec3> normals);

struct NormalStatsParams {
  std::uint64_t seed = 0;
  std::size_t n_kernels = 5000;
  std::size_t n_eval = 5000;
  double kappa = 15.0;
  int threads = 1;
};

struct NormalStatsInput {
  Pointmap points_cam;  // predicted layout pointmap, canonical camera frame
  Mask valid;
  VisibilityMap visibility;
};

struct NormalStatsImage {
  bool used = false;
  double ours = 0.0;
  double baseline_uniform = 0.0;
  double baseline_dominant = 0.0;
};

struct NormalStatsResult {
  double ours_avg = 0.0;
  double baseline_uniform_avg = 0.0;
  double baseline_dominant_avg = 0.0;
  std::size_t images_used = 0;
  std::size_t images_skipped = 0;
  std::vector<NormalStatsImage> per_image;
};

// Per image: KDE over n_kernels normals drawn from the Seen region (without
// replacement when enough exist), mean density of n_eval Unseen-region
// normals, of n_eval uniform directions, and of the dominant Seen direction.
// The random stream of image i depends only on (seed, i). Images lacking
// seen or unseen normals are skipped; Error(NoValidRegions) if all are.
NormalStatsResult normal_likelihood_analysis(std::span<const NormalStatsInput> inputs,
                                             const NormalStatsParams& params);

std::string normal_stats_json(const NormalStatsResult& result);

}  // namespace roomenv
