#include "roomenv/normalstats.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "json.hpp"
#include "roomenv/parallel.hpp"

namespace roomenv {

NormalMap estimate_normals(const Pointmap& points_cam, const Mask& valid) {
  const int w = points_cam.width;
  const int h = points_cam.height;
  if (!valid.same_shape(w, h)) throw Error(Errc::ShapeMismatch, "pointmap and mask differ in size");
  NormalMap out{nan_pointmap(w, h), Mask(w, h, 0)};
  auto usable = [&](int u, int v) {
    if (u < 0 || v < 0 || u >= w || v >= h) return false;
    const std::size_t i = points_cam.index(u, v);
    return valid.data[i] && point_at(points_cam, i).allFinite();
  };
  std::array<Vec3, 9> window;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!usable(u, v)) continue;
      int count = 0;
      int neighbours = 0;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          if (!usable(u + du, v + dv)) continue;
          window[static_cast<std::size_t>(count++)] = point_at(points_cam, points_cam.index(u + du, v + dv));
          if (du != 0 || dv != 0) ++neighbours;
        }
      }
      if (neighbours < 6) continue;
      Vec3 mean = Vec3::Zero();
      for (int k = 0; k < count; ++k) mean += window[static_cast<std::size_t>(k)];
      mean /= count;
      Mat3 cov = Mat3::Zero();
      for (int k = 0; k < count; ++k) {
        const Vec3 d = window[static_cast<std::size_t>(k)] - mean;
        cov += d * d.transpose();
      }
      const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
      Vec3 n = solver.eigenvectors().col(0).normalized();
      const Vec3 centre = point_at(points_cam, points_cam.index(u, v));
      if (n.dot(centre) > 0.0) n = -n;
      const std::size_t i = points_cam.index(u, v);
      set_point(out.normals, i, n);
      out.valid.data[i] = 1;
    }
  }
  return out;
}

VmfKde::VmfKde(std::span<const Vec3> centers, double kappa) : kappa_(kappa) {
  if (centers.empty()) throw Error(Errc::EmptySet, "vMF density needs at least one kernel centre");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(Errc::InvalidArgument, "kappa must be positive");
  for (const Vec3& c : centers) {
    if (!(std::abs(c.norm() - 1.0) <= 1e-6)) throw Error(Errc::NonUnitInput, "kernel centre is not a unit vector");
  }
  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    const Vec3& x = centers[a];
    const Vec3& y = centers[b];
    return std::tie(x[0], x[1], x[2]) < std::tie(y[0], y[1], y[2]);
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Vec3& c = centers[order[k]];
    if (!centers_.empty() && centers_.back() == c) {
      weights_.back() += 1.0;
    } else {
      centers_.push_back(c);
      weights_.push_back(1.0);
    }
  }
  total_ = centers.size();
  // C3(k) e^{k m} = k e^{k (m - 1)} / (2 pi (1 - e^{-2k})).
  const double one_minus = -std::expm1(-2.0 * kappa);
  peak_ = kappa / (2.0 * std::numbers::pi * one_minus);
  const double log_sinh = kappa + std::log(one_minus) - std::numbers::ln2;
  log_norm_const_ = std::log(kappa) - std::log(4.0 * std::numbers::pi) - log_sinh;
}

double VmfKde::density(const Vec3& x) const {
  if (!(std::abs(x.norm() - 1.0) <= 1e-6)) throw Error(Errc::NonUnitInput, "query direction is not a unit vector");
  double sum = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) sum += weights_[k] * std::exp(kappa_ * (centers_[k].dot(x) - 1.0));
  return peak_ * sum / static_cast<double>(total_);
}

Vec3 uniform_unit_vector(Rng& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

Vec3 dominant_direction(std::span<const Vec3> normals) {
  if (normals.empty()) throw Error(Errc::EmptySet, "dominant direction of an empty normal set");
  constexpr int kBins = 32;
  auto bin_of = [](const Vec3& n) {
    int axis;
    n.cwiseAbs().maxCoeff(&axis);
    const int face = 2 * axis + (n[axis] < 0.0 ? 1 : 0);
    const double major = std::abs(n[axis]);
    const double a = n[(axis + 1) % 3] / major;
    const double b = n[(axis + 2) % 3] / major;
    const int i = std::clamp(static_cast<int>(std::floor((a + 1.0) * 0.5 * kBins)), 0, kBins - 1);
    const int j = std::clamp(static_cast<int>(std::floor((b + 1.0) * 0.5 * kBins)), 0, kBins - 1);
    return (face * kBins + j) * kBins + i;
  };
  std::vector<std::size_t> counts(6 * kBins * kBins, 0);
  std::vector<int> bins(normals.size());
  for (std::size_t k = 0; k < normals.size(); ++k) {
    bins[k] = bin_of(normals[k]);
    ++counts[static_cast<std::size_t>(bins[k])];
  }
  const auto mode = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < normals.size(); ++k) {
    if (bins[k] == mode) sum += normals[k];
  }
  return sum.normalized();
}

namespace {

// k indices into [0, n): distinct when n >= k, drawn with replacement otherwise.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> out;
  if (n >= k) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(static_cast<std::size_t>(rng.below(n)));
  return out;
}

}  // namespace

NormalStatsResult normal_likelihood_analysis(std::span<const NormalStatsInput> inputs,
                                             const NormalStatsParams& params) {
  if (params.n_kernels == 0 || params.n_eval == 0) {
    throw Error(Errc::InvalidArgument, "n_kernels and n_eval must be positive");
  }
  NormalStatsResult result;
  for (const auto& in : inputs) {
    const int w = in.points_cam.width;
    const int h = in.points_cam.height;
    if (!in.valid.same_shape(w, h) || !in.visibility.same_shape(w, h)) {
      throw Error(Errc::ShapeMismatch, "pointmap, mask and visibility map differ in size");
    }
  }
  result.per_image.resize(inputs.size());
  parallel_for(inputs.size(), params.threads, [&](std::size_t idx) {
    const NormalStatsInput& in = inputs[idx];
    const NormalMap nm = estimate_normals(in.points_cam, in.valid);
    std::vector<Vec3> seen, unseen;
    for (std::size_t i = 0; i < nm.valid.pixel_count(); ++i) {
      if (!nm.valid.data[i]) continue;
      if (in.visibility.data[i] == Visibility::Seen) seen.push_back(point_at(nm.normals, i));
      if (in.visibility.data[i] == Visibility::Unseen) unseen.push_back(point_at(nm.normals, i));
    }
    NormalStatsImage& out = result.per_image[idx];
    if (seen.empty() || unseen.empty()) return;

    Rng rng(params.seed, idx);
    std::vector<Vec3> centers;
    for (std::size_t k : sample_indices(rng, seen.size(), params.n_kernels)) centers.push_back(seen[k]);
    const VmfKde kde(centers, params.kappa);

    double ours = 0.0;
    for (std::size_t k : sample_indices(rng, unseen.size(), params.n_eval)) ours += kde.density(unseen[k]);
    double uniform = 0.0;
    for (std::size_t k = 0; k < params.n_eval; ++k) uniform += kde.density(uniform_unit_vector(rng));

    out.used = true;
    out.ours = ours / static_cast<double>(params.n_eval);
    out.baseline_uniform = uniform / static_cast<double>(params.n_eval);
    out.baseline_dominant = kde.density(dominant_direction(seen));
  });

  for (const auto& img : result.per_image) {
    if (!img.used) {
      ++result.images_skipped;
      continue;
    }
    ++result.images_used;
    result.ours_avg += img.ours;
    result.baseline_uniform_avg += img.baseline_uniform;
    result.baseline_dominant_avg += img.baseline_dominant;
  }
  if (result.images_used == 0) {
    throw Error(Errc::NoValidRegions, "no image has both seen and unseen layout normals");
  }
  const double n = static_cast<double>(result.images_used);
  result.ours_avg /= n;
  result.baseline_uniform_avg /= n;
  result.baseline_dominant_avg /= n;
  return result;
}

std::string normal_stats_json(const NormalStatsResult& r) {
  nlohmann::ordered_json j;
  j["ours_avg"] = r.ours_avg;
  j["baseline_uniform_avg"] = r.baseline_uniform_avg;
  j["baseline_dominant_avg"] = r.baseline_dominant_avg;
  j["images_used"] = r.images_used;
  j["images_skipped"] = r.images_skipped;
  return j.dump(2) + "\n";
}

}  // namespace roomenv
