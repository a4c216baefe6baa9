#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nacifs/conformal.hpp"

namespace nacifs {

/// Monte Carlo hit table of a harmonic measure on the cylinders of length
/// `assign_depth` of the shifted system starting at generation `offset`.
/// Counts are stored in word-index order; shorter words aggregate.
struct MeasureEstimate {
  int offset = 0;
  int assign_depth = 0;
  Alphabet alphabet;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  std::int64_t total_steps = 0;
  /// Optional per-walker index of the hit cylinder (same order as walkers).
  std::vector<std::uint32_t> endpoints;

  std::int64_t count(const Word& word) const;
  double value(const Word& word) const;
  /// Binomial standard error sqrt(p (1 - p) / total).
  double std_error(const Word& word) const;
  /// Variance of log value(word) under the delta method, (1 - p) / (total p).
  double log_variance(const Word& word) const;

  /// Counts of all words of the given length (<= assign_depth).
  std::vector<std::int64_t> level_counts(int level) const;
  MeasureEstimate coarsen(int level) const;
};

/// CSV with header offset,word,count,value,stderr; one row per length-n word.
void write_measure_csv(const MeasureEstimate& est, const std::filesystem::path& path);
MeasureEstimate read_measure_csv(const std::filesystem::path& path);

}  // namespace nacifs
