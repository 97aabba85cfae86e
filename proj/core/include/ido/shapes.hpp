#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ido/point_cloud.hpp"

namespace ido {

/// Names accepted by sample_shape().
std::vector<std::string> shape_names();

/// Dense surface sample of a procedural shape. "bunny" is a union of
/// ellipsoids (body, head, two unequal ears, tail, one foot) with no
/// rotational or mirror symmetry; "sphere" is a unit sphere.
PointCloud sample_shape(const std::string& name, std::size_t dense_points, std::uint64_t seed);

/// Procedural model ready for training: dense sample, voxel-average
/// downsampled to about `target_points`, then normalized to unit scale.
PointCloud synthetic_model(const std::string& name, std::size_t target_points, std::uint64_t seed);

}  // namespace ido
