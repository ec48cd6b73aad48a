#include "sarbot/signals.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sarbot::signals {

void IntensityGrid::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v < 256.0)) {
      throw ConfigError(fmt::format("intensity grid cell ({}, {}) = {} is outside [0, 256)",
                                    i / kGridCols, i % kGridCols, v));
    }
  }
}

IntensityGrid IntensityGrid::mirrored() const {
  IntensityGrid out;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) out.at(r, c) = at(r, kGridCols - 1 - c);
  }
  return out;
}

DifferenceGrid difference_signals(const IntensityGrid& grid) {
  DifferenceGrid out;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kDiffCols; ++c) {
      out.at(r, c) = grid.at(r, c) - grid.at(r, kGridCols - 1 - c);
    }
  }
  return out;
}

FilterTaps default_filter_taps() {
  FilterTaps taps;
  for (std::size_t h = 0; h < kFilterCount; ++h) {
    std::vector<double> t(3 * h + 3, 0.0);
    for (std::size_t d = 3 * h; d < 3 * h + 3; ++d) t[d] = 1.0 / 3.0;
    taps[h] = std::move(t);
  }
  return taps;
}

FilterArray::FilterArray(FilterTaps taps) : taps_(std::move(taps)) {
  std::size_t longest = 0;
  for (std::size_t h = 0; h < kFilterCount; ++h) {
    const auto& t = taps_[h];
    if (t.empty()) throw ConfigError(fmt::format("filter {} has no taps", h + 1));
    if (!std::all_of(t.begin(), t.end(), [](double c) { return std::isfinite(c); })) {
      throw ConfigError(fmt::format("filter {} has a non-finite tap", h + 1));
    }
    const double gain = std::accumulate(t.begin(), t.end(), 0.0);
    if (std::abs(gain - 1.0) > 1e-9) {
      throw ConfigError(fmt::format("filter {} has DC gain {} (taps must sum to 1)", h + 1, gain));
    }
    longest = std::max(longest, t.size());
  }
  history_.assign(longest, DifferenceGrid{});
}

void FilterArray::reset() {
  std::fill(history_.begin(), history_.end(), DifferenceGrid{});
  head_ = 0;
}

PredictorFrame FilterArray::step(const DifferenceGrid& differences) {
  const std::size_t n = history_.size();
  head_ = (head_ + n - 1) % n;
  history_[head_] = differences;

  PredictorFrame frame;
  for (std::size_t h = 0; h < kFilterCount; ++h) {
    const auto& t = taps_[h];
    for (std::size_t delay = 0; delay < t.size(); ++delay) {
      const double coeff = t[delay];
      if (coeff == 0.0) continue;
      const DifferenceGrid& past = history_[(head_ + delay) % n];
      for (std::size_t s = 0; s < kDifferenceCount; ++s) {
        frame.values[s * kFilterCount + h] += coeff * past.values[s];
      }
    }
  }
  return frame;
}

}  // namespace sarbot::signals
