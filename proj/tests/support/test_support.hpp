#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <random>
#include <string>

namespace recavg::testing {

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double radius = 2.0) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Eigen::Vector3d random_vec3(std::mt19937_64& rng, double radius = 2.0) {
  return random_vector(rng, 3, radius);
}

// Fresh, empty directory below the current working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace recavg::testing
