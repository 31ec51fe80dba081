#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace deficit {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Static line chart. Non-finite points are skipped.
struct LineChart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  int width = 640;
  int height = 400;

  std::string render() const;
  void write(const std::filesystem::path& p) const;
};

}  // namespace deficit
