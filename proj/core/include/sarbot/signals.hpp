#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace sarbot::signals {

inline constexpr std::size_t kGridRows = 8;
inline constexpr std::size_t kGridCols = 12;
inline constexpr std::size_t kDiffCols = kGridCols / 2;
inline constexpr std::size_t kFilterCount = 5;
inline constexpr std::size_t kDifferenceCount = kGridRows * kDiffCols;
inline constexpr std::size_t kPredictorCount = kDifferenceCount * kFilterCount;

// 8x12 camera intensities in GSV, row 0 nearest to the robot, column 0 on
// the robot's left.
struct IntensityGrid {
  std::array<double, kGridRows * kGridCols> values{};

  double& at(std::size_t row, std::size_t col) { return values[row * kGridCols + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * kGridCols + col]; }

  // Throws ConfigError if any entry is outside [0, 256).
  void validate() const;
  IntensityGrid mirrored() const;
};

// C(i, j) = I(i, j) - I(i, 11 - j) for j in 0..5.
struct DifferenceGrid {
  std::array<double, kDifferenceCount> values{};

  double& at(std::size_t row, std::size_t col) { return values[row * kDiffCols + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * kDiffCols + col]; }
};

struct PredictorFrame {
  std::array<double, kPredictorCount> values{};
};

DifferenceGrid difference_signals(const IntensityGrid& grid);

// k = (row * 6 + col) * 5 + filter, all zero based.
constexpr std::size_t predictor_index(std::size_t row, std::size_t col, std::size_t filter) {
  return (row * kDiffCols + col) * kFilterCount + filter;
}

struct PredictorLane {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t filter = 0;
};

constexpr PredictorLane predictor_lane(std::size_t k) {
  return {k / (kDiffCols * kFilterCount), (k / kFilterCount) % kDiffCols, k % kFilterCount};
}

using FilterTaps = std::array<std::vector<double>, kFilterCount>;

// Length-3 boxcars starting at delays 0, 3, 6, 9 and 12 ticks.
FilterTaps default_filter_taps();

// Five FIR filters applied to each of the 48 difference signals. A single
// ring buffer of past difference grids is shared by all lanes.
class FilterArray {
 public:
  // Each filter needs at least one tap and coefficients summing to 1.
  explicit FilterArray(FilterTaps taps = default_filter_taps());

  PredictorFrame step(const DifferenceGrid& differences);
  void reset();

  const FilterTaps& taps() const { return taps_; }
  std::size_t history_length() const { return history_.size(); }

 private:
  FilterTaps taps_;
  std::vector<DifferenceGrid> history_;
  std::size_t head_ = 0;
};

}  // namespace sarbot::signals
