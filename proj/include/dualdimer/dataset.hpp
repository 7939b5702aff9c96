#pragma once

#include <filesystem>
#include <vector>

namespace dualdimer {

  /// One temperature sample T(t, x, y).
  struct DataPoint {
    double t = 0;
    double x = 0;
    double y = 0;
    double value = 0;

    bool operator==(DataPoint const&) const = default;
  };

  using Dataset = std::vector<DataPoint>;

  /// Writes "t,x,y,T" then one row per point, with round-trip precision.
  void write_dataset_csv(std::filesystem::path const& path, Dataset const& rows);

  /// Reads a file written by write_dataset_csv (columns t,x,y,T; header required).
  Dataset read_dataset_csv(std::filesystem::path const& path);

}  // namespace dualdimer
