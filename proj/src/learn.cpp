#include "voidp/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "voidp/error.hpp"

namespace voidp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::optional<double> parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = trim(raw);
  std::string lower = cell;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower.empty() || lower == "na" || lower == "nan") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(row) + ", column " + std::to_string(col) + ": not a number: '" +
                          cell + "'");
  }
}

std::vector<double> interpolate(const std::vector<std::optional<double>>& cells, std::size_t row) {
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) known.push_back(i);
  }
  if (known.empty()) throw ValidationError("row " + std::to_string(row) + " has no values");
  std::vector<double> out(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto hi = std::lower_bound(known.begin(), known.end(), i);
    if (hi == known.end()) {
      out[i] = *cells[known.back()];
    } else if (*hi == i || hi == known.begin()) {
      out[i] = *cells[*hi];
    } else {
      const std::size_t l = *(hi - 1), h = *hi;
      const double w = static_cast<double>(i - l) / static_cast<double>(h - l);
      out[i] = (1.0 - w) * *cells[l] + w * *cells[h];
    }
  }
  return out;
}

}  // namespace

State Bins::bin_of(double value) const {
  if (!(value >= edges.front() && value <= edges.back())) {
    throw ValidationError("value " + std::to_string(value) + " outside bin range [" + std::to_string(edges.front()) +
                          ", " + std::to_string(edges.back()) + "]");
  }
  const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
  return static_cast<State>(it - (edges.begin() + 1));
}

std::vector<std::vector<double>> read_series_csv(std::istream& in) {
  std::vector<std::vector<double>> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::optional<double>> cells;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) cells.push_back(parse_cell(cell, row, ++col));
    if (!line.empty() && line.back() == ',') cells.push_back(std::nullopt);
    if (!out.empty() && cells.size() != out.front().size()) {
      throw ValidationError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(out.front().size()));
    }
    out.push_back(interpolate(cells, row));
  }
  return out;
}

std::vector<std::vector<double>> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return read_series_csv(in);
}

Bins make_bins(const std::vector<std::vector<double>>& sequences, const BinSpec& spec) {
  if (spec.count < 2) throw ValidationError("bin count must be >= 2");
  std::vector<double> all;
  for (const auto& s : sequences) all.insert(all.end(), s.begin(), s.end());
  if (all.empty()) throw ValidationError("empty dataset");
  std::sort(all.begin(), all.end());
  Bins bins;
  const auto count = static_cast<std::size_t>(spec.count);
  if (spec.mode == BinMode::Quantile) {
    bins.edges.push_back(all.front());
    for (std::size_t i = 1; i < count; ++i) {
      const double pos = static_cast<double>(i) * static_cast<double>(all.size() - 1) / static_cast<double>(count);
      const auto lo = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(lo);
      const double q = lo + 1 < all.size() ? (1 - frac) * all[lo] + frac * all[lo + 1] : all[lo];
      bins.edges.push_back(std::max(q, bins.edges.back()));
    }
    bins.edges.push_back(all.back());
  } else {
    const double origin = spec.origin.value_or(all.front());
    double width = spec.width.value_or((all.back() - origin) / static_cast<double>(count));
    if (!(width > 0.0)) width = 1.0;
    for (std::size_t i = 0; i <= count; ++i) bins.edges.push_back(origin + width * static_cast<double>(i));
  }
  for (std::size_t i = 0; i < count; ++i) bins.centers.push_back(0.5 * (bins.edges[i] + bins.edges[i + 1]));
  return bins;
}

ChainModel learn_chain(const std::vector<std::vector<State>>& sequences, int states, double alpha,
                       const std::vector<int>& tying) {
  if (sequences.empty()) throw ValidationError("empty dataset");
  if (states < 1) throw ValidationError("state count must be >= 1");
  if (!(alpha >= 0.0)) throw ValidationError("pseudocount must be >= 0");
  const std::size_t n = sequences.front().size();
  if (n == 0) throw ValidationError("empty sequences");
  for (const auto& s : sequences) {
    if (s.size() != n) throw ValidationError("sequences have different lengths");
    for (State x : s) {
      if (x < 0 || x >= states) throw ValidationError("state " + std::to_string(x) + " out of range");
    }
  }
  if (!tying.empty() && tying.size() != n - 1) {
    throw ValidationError("tying map needs " + std::to_string(n - 1) + " entries, got " + std::to_string(tying.size()));
  }
  const auto d = static_cast<std::size_t>(states);
  auto bucket = [&](std::size_t t) { return tying.empty() ? static_cast<int>(t) : tying[t]; };
  const int buckets = tying.empty() ? static_cast<int>(n) : *std::max_element(tying.begin(), tying.end()) + 1;
  if (!tying.empty() && *std::min_element(tying.begin(), tying.end()) < 0) throw ValidationError("negative tying bucket");

  std::vector<Matrix> counts(static_cast<std::size_t>(std::max(buckets, 1)), Matrix(d, d));
  std::vector<double> first(d, 0.0);
  for (const auto& s : sequences) {
    first[static_cast<std::size_t>(s[0])] += 1.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      counts[static_cast<std::size_t>(bucket(t))](static_cast<std::size_t>(s[t]), static_cast<std::size_t>(s[t + 1])) += 1.0;
    }
  }
  auto normalize = [&](std::span<const double> row, std::span<double> out) {
    double total = 0.0;
    for (double c : row) total += c;
    const double denom = total + alpha * static_cast<double>(d);
    for (std::size_t x = 0; x < d; ++x) out[x] = denom > 0.0 ? (row[x] + alpha) / denom : 1.0 / static_cast<double>(d);
  };
  ChainModel m;
  m.prior.resize(d);
  normalize(first, m.prior);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const Matrix& c = counts[static_cast<std::size_t>(bucket(t))];
    Matrix tr(d, d);
    for (std::size_t x = 0; x < d; ++x) normalize(c.row(x), tr.row(x));
    m.transitions.push_back(std::move(tr));
  }
  return m;
}

LearnedChain learn_chain(const SeriesDataset& data, double alpha) {
  if (data.sequences.empty()) throw ValidationError("empty dataset");
  LearnedChain out;
  out.bins = make_bins(data.sequences, data.bins);
  std::vector<std::vector<State>> states;
  for (const auto& s : data.sequences) {
    std::vector<State> row;
    for (double v : s) row.push_back(out.bins.bin_of(v));
    states.push_back(std::move(row));
  }
  out.model = learn_chain(states, out.bins.count(), alpha, data.tying);
  out.model.state_values.assign(data.sequences.front().size(), out.bins.centers);
  return out;
}

std::vector<int> block_tying(int steps, int buckets) {
  if (steps < 1 || buckets < 1) throw ValidationError("steps and buckets must be >= 1");
  std::vector<int> out;
  for (int t = 0; t + 1 < steps; ++t) out.push_back(std::min(buckets - 1, t * buckets / std::max(steps - 1, 1)));
  return out;
}

std::vector<std::vector<double>> synthetic_diurnal(int days, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (int day = 0; day < days; ++day) {
    const double base = 293.0 + 1.5 * noise(rng);
    double ar = 0.0;
    std::vector<double> row;
    for (int t = 0; t < steps; ++t) {
      ar = 0.8 * ar + 0.9 * noise(rng);
      const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t) - 9.0) / static_cast<double>(steps);
      row.push_back(base + 4.0 * std::sin(phase) + ar);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace voidp
