#pragma once

// Chain models from discretized time series.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <vector>

#include "voidp/chain_model.hpp"

namespace voidp {

enum class BinMode { FixedWidth, Quantile };

struct BinSpec {
  int count = 10;
  BinMode mode = BinMode::FixedWidth;
  /// Fixed-width only. Defaults: origin = data minimum, width = range / count.
  std::optional<double> origin;
  std::optional<double> width;
};

/// Bin edges (count + 1, increasing) and centers (count).
struct Bins {
  std::vector<double> edges;
  std::vector<double> centers;

  int count() const noexcept { return static_cast<int>(centers.size()); }
  /// Throws ValidationError if the value lies outside [edges.front(), edges.back()].
  State bin_of(double value) const;
};

struct SeriesDataset {
  /// Equal-length sequences sampled at uniform time steps.
  std::vector<std::vector<double>> sequences;
  BinSpec bins;
  /// Optional tying: tying[t-1] is the bucket of the transition t -> t+1.
  /// Transitions in one bucket share parameters. Empty means no tying.
  std::vector<int> tying;
};

/// Reads one sequence per CSV row. Empty cells and NA/NaN are missing and
/// filled by linear interpolation (constant extension at the ends). Throws
/// IoError if unreadable and ValidationError for ragged or all-missing rows.
std::vector<std::vector<double>> read_series_csv(std::istream& in);
std::vector<std::vector<double>> read_series_csv(const std::filesystem::path& path);

Bins make_bins(const std::vector<std::vector<double>>& sequences, const BinSpec& spec);

/// Pseudocount estimate from state sequences over `states` states per step.
/// T_t(x, x') = (count + alpha) / (row count + alpha * d), pooled per tying bucket.
ChainModel learn_chain(const std::vector<std::vector<State>>& sequences, int states, double alpha,
                       const std::vector<int>& tying = {});

struct LearnedChain {
  ChainModel model;
  Bins bins;
};

/// Bins the dataset and estimates the chain; state values are the bin centers.
LearnedChain learn_chain(const SeriesDataset& data, double alpha);

/// Contiguous tying buckets: transitions 1..steps-1 split into `buckets` runs
/// of near-equal length.
std::vector<int> block_tying(int steps, int buckets);

/// Synthetic daily temperature profiles (kelvin): a sinusoid peaking in the
/// afternoon plus AR(1) noise, one row per day.
std::vector<std::vector<double>> synthetic_diurnal(int days, int steps, std::uint64_t seed);

}  // namespace voidp
