#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace recavg::runner {

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes signal.svg (c versus t) and trajectory_xy/xz/yz.svg from the
/// representation CSVs found in `dir`. Output bytes depend only on the CSVs.
std::vector<std::filesystem::path> plot(const std::filesystem::path& dir);

}  // namespace recavg::runner
