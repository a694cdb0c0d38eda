#pragma once

#include <random>
#include <vector>

#include "voidp/chain_model.hpp"
#include "voidp/cost_model.hpp"
#include "voidp/rewards.hpp"

namespace voidp::testing {

inline ChainModel sym3() {
  return ChainModel::stationary({0.5, 0.5}, Matrix{{0.75, 0.25}, {0.25, 0.75}}, 3);
}

inline std::vector<double> random_simplex(int d, std::mt19937_64& rng, double zero_rate = 0.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution zero(zero_rate);
  std::vector<double> p(static_cast<std::size_t>(d));
  double sum = 0.0;
  for (auto& v : p) {
    v = zero(rng) ? 0.0 : u(rng);
    sum += v;
  }
  if (sum == 0.0) {
    p[0] = 1.0;
    sum = 1.0;
  }
  for (auto& v : p) v /= sum;
  return p;
}

/// Random chain with domains in [1, max_d] (mostly max_d) and state values.
inline ChainModel random_chain(int n, int max_d, std::mt19937_64& rng, double zero_rate = 0.1) {
  std::uniform_int_distribution<int> dist_d(1, max_d);
  std::bernoulli_distribution full(0.7);
  std::vector<int> d(static_cast<std::size_t>(n));
  for (auto& v : d) v = full(rng) ? max_d : dist_d(rng);
  ChainModel m;
  m.prior = random_simplex(d[0], rng, zero_rate);
  for (int i = 0; i + 1 < n; ++i) {
    Matrix t(static_cast<std::size_t>(d[i]), static_cast<std::size_t>(d[i + 1]));
    for (int r = 0; r < d[i]; ++r) {
      const auto row = random_simplex(d[i + 1], rng, zero_rate);
      for (int c = 0; c < d[i + 1]; ++c) t(r, c) = row[static_cast<std::size_t>(c)];
    }
    m.transitions.push_back(std::move(t));
  }
  std::uniform_real_distribution<double> val(-2.0, 3.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> values(static_cast<std::size_t>(d[i]));
    for (auto& v : values) v = val(rng);
    m.state_values.push_back(std::move(values));
  }
  return m;
}

inline LocalReward random_reward(int variant, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  switch (variant % 7) {
    case 0: return ResidualEntropy{};
    case 1: return JointEntropy{};
    case 2: {
      const int actions = 1 + static_cast<int>(rng() % 3);
      DecisionVoi voi;
      voi.utility = Matrix(static_cast<std::size_t>(actions), static_cast<std::size_t>(d));
      for (int a = 0; a < actions; ++a) {
        voi.actions.push_back("a" + std::to_string(a));
        for (int x = 0; x < d; ++x) voi.utility(a, x) = u(rng);
      }
      return voi;
    }
    case 3: return Margin{};
    case 4: return WeightedVariance{0.5 + std::abs(u(rng))};
    case 5: return Hotspot{{static_cast<State>(rng() % static_cast<unsigned>(d))}};
    default: return Expectation{};
  }
}

/// Same variant for every variable (JointEntropy only makes sense chain-wide),
/// with per-variable parameters.
inline RewardSpec random_spec(int variant, const ChainModel& model, std::mt19937_64& rng) {
  RewardSpec spec;
  for (Index j = 1; j <= model.size(); ++j) spec.rewards.push_back(random_reward(variant, model.states(j), rng));
  return spec;
}

inline CostModel random_costs(int n, int budget, std::mt19937_64& rng, bool state_dependent = false,
                              const ChainModel* model = nullptr) {
  std::uniform_real_distribution<double> pen(0.0, 0.3);
  std::uniform_int_distribution<int> cost(1, 2);
  CostModel c;
  c.budget = budget;
  for (Index j = 1; j <= n; ++j) {
    const int d = state_dependent && model ? model->states(j) : 1;
    std::vector<double> p(static_cast<std::size_t>(d));
    std::vector<int> b(static_cast<std::size_t>(d));
    for (int x = 0; x < d; ++x) {
      p[static_cast<std::size_t>(x)] = pen(rng);
      b[static_cast<std::size_t>(x)] = cost(rng);
    }
    c.penalties.push_back(std::move(p));
    c.costs.push_back(std::move(b));
  }
  return c;
}

}  // namespace voidp::testing
