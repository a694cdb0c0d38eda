#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "voidp/error.hpp"
#include "voidp/oracles.hpp"
#include "voidp/subset_dp.hpp"

using namespace voidp;
using voidp::testing::sym3;

namespace {
const double kHb075 = 0.8112781244591328;
const double kHb0625 = 0.9544340029249649;

int spent(const std::vector<Index>& a, const CostModel& c) {
  int s = 0;
  for (Index j : a) s += c.cost(j);
  return s;
}
}  // namespace

TEST_CASE("SYM3 subsets") {
  const auto m = sym3();
  const auto spec = RewardSpec::uniform(ResidualEntropy{}, 3);

  const auto r0 = select_subset(m, spec, CostModel::uniform(3, 0), Mode::Smoothing);
  CHECK(r0.selected.empty());
  CHECK(r0.value == doctest::Approx(-3.0));

  const auto r1 = select_subset(m, spec, CostModel::uniform(3, 1), Mode::Smoothing);
  CHECK(r1.selected == std::vector<Index>{2});
  CHECK(r1.value == doctest::Approx(-2 * kHb075));
  CHECK(r1.tables.value(0, 4, 1) == r1.value);
  const std::vector<Index> edge{1};
  CHECK(total_objective(m, spec, CostModel::uniform(3, 1), edge, Mode::Smoothing) == doctest::Approx(-(kHb075 + kHb0625)));

  const auto r3 = select_subset(m, spec, CostModel::uniform(3, 3), Mode::Smoothing);
  CHECK(r3.selected == std::vector<Index>{1, 2, 3});
  CHECK(std::abs(r3.value) < 1e-12);
}

TEST_CASE("state-dependent costs are rejected") {
  auto costs = CostModel::uniform(3, 2);
  costs.costs[1] = {1, 2};
  CHECK_THROWS_AS(select_subset(sym3(), RewardSpec::uniform(ResidualEntropy{}, 3), costs, Mode::Smoothing),
                  ValidationError);
  auto zero = CostModel::uniform(3, 2);
  zero.costs[0] = {0};
  CHECK_THROWS_AS(select_subset(sym3(), RewardSpec::uniform(ResidualEntropy{}, 3), zero, Mode::Smoothing),
                  ValidationError);
}

TEST_CASE("subset recursion matches exhaustive enumeration") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 140; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    const auto costs = voidp::testing::random_costs(n, static_cast<int>(rng() % 5), rng);
    const auto joint = joint_from_chain(m);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      const auto r = select_subset(m, spec, costs, mode);
      const auto o = oracle_best_subset(joint, spec, costs, mode);
      CHECK(std::abs(r.value - o.value) < 1e-9);
      CHECK(spent(r.selected, costs) <= costs.budget);
      CHECK(std::abs(total_objective(m, spec, costs, r.selected, mode) - r.value) < 1e-9);
      CHECK(r.eval_count <= static_cast<std::uint64_t>(std::max(costs.budget, 1)) * (n + 2) * (n + 2) * (n + 2));
      const auto g = greedy_subset(m, spec, costs, mode);
      CHECK(r.value >= g.value - 1e-9);
    }
  }
}

TEST_CASE("budget monotonicity and uniform dominance") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 10);
    const auto m = voidp::testing::random_chain(n, 3, rng);
    const auto spec = voidp::testing::random_spec(trial, m, rng);
    for (Mode mode : {Mode::Filtering, Mode::Smoothing}) {
      double previous = -1e300;
      for (int b = 0; b <= n; ++b) {
        const auto costs = CostModel::uniform(n, b, 0.05);
        const auto r = select_subset(m, spec, costs, mode);
        CHECK(r.value >= previous - 1e-9);
        previous = r.value;
        const auto u = uniform_spacing(n, b);
        CHECK(r.value >= total_objective(m, spec, costs, u, mode) - 1e-9);
      }
    }
  }
}
