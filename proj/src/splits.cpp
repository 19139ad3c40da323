#include "invlab/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "invlab/rng.hpp"

namespace invlab {

namespace {

constexpr int kConditions = 6;

int condition_of(int ls, int lm) { return ls * 2 + lm; }

// Largest-remainder apportionment of `total` across weights.
std::vector<int> largest_remainder(const std::vector<double>& quota, int total) {
  const std::size_t n = quota.size();
  std::vector<int> out(n);
  std::vector<std::pair<double, std::size_t>> rem(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::floor(quota[i]));
    assigned += out[i];
    rem[i] = {quota[i] - out[i], i};
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) out[rem[static_cast<std::size_t>(k)].second] += 1;
  return out;
}

}  // namespace

std::vector<SplitPlan> make_splits(const std::vector<int>& l_s, const std::vector<int>& l_m,
                                   int reps, int folds, double val_fraction, std::uint64_t seed) {
  if (l_s.size() != l_m.size() || l_s.empty())
    throw std::invalid_argument("make_splits: label arrays empty or mismatched");
  if (reps < 1 || folds < 2) throw std::invalid_argument("make_splits: need reps >= 1, folds >= 2");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("make_splits: val_fraction must be in (0,1)");
  const int n = static_cast<int>(l_s.size());

  std::vector<std::vector<int>> by_condition(kConditions);
  for (int i = 0; i < n; ++i)
    by_condition[static_cast<std::size_t>(condition_of(l_s[static_cast<std::size_t>(i)],
                                                       l_m[static_cast<std::size_t>(i)]))]
        .push_back(i);
  for (int c = 0; c < kConditions; ++c) {
    if (static_cast<int>(by_condition[static_cast<std::size_t>(c)].size()) < folds * 2)
      throw std::invalid_argument("make_splits: condition (l_s=" + std::to_string(c / 2) +
                                  ", l_m=" + std::to_string(c % 2) + ") has only " +
                                  std::to_string(by_condition[static_cast<std::size_t>(c)].size()) +
                                  " trials, need >= " + std::to_string(folds * 2));
  }

  std::vector<SplitPlan> plans;
  plans.reserve(static_cast<std::size_t>(reps) * folds);

  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(seed * 1000 + static_cast<std::uint64_t>(r));
    std::vector<std::vector<int>> shuffled = by_condition;
    for (auto& v : shuffled) std::shuffle(v.begin(), v.end(), rng);

    // per-condition fold boundaries: sizes differ by at most one
    std::vector<std::vector<std::pair<int, int>>> chunk(kConditions);
    for (int c = 0; c < kConditions; ++c) {
      const int nc = static_cast<int>(shuffled[static_cast<std::size_t>(c)].size());
      const int base = nc / folds, rem = nc % folds;
      int pos = 0;
      for (int f = 0; f < folds; ++f) {
        const int len = base + (f < rem ? 1 : 0);
        chunk[static_cast<std::size_t>(c)].push_back({pos, pos + len});
        pos += len;
      }
    }

    for (int f = 0; f < folds; ++f) {
      SplitPlan plan;
      plan.rep = r;
      plan.fold = f;
      plan.assignment.assign(static_cast<std::size_t>(n), Assignment::kTrain);

      std::vector<int> remainder_count(kConditions);
      int remainder_total = 0;
      for (int c = 0; c < kConditions; ++c) {
        const auto [lo, hi] = chunk[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)];
        for (int i = lo; i < hi; ++i)
          plan.assignment[static_cast<std::size_t>(
              shuffled[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)])] =
              Assignment::kTest;
        remainder_count[static_cast<std::size_t>(c)] =
            static_cast<int>(shuffled[static_cast<std::size_t>(c)].size()) - (hi - lo);
        remainder_total += remainder_count[static_cast<std::size_t>(c)];
      }

      // validation quota: val_fraction of the whole set, spread across
      // conditions proportionally to what each contributes to the remainder
      const int val_total =
          static_cast<int>(std::lround(val_fraction * static_cast<double>(n)));
      std::vector<double> quota(kConditions);
      for (int c = 0; c < kConditions; ++c)
        quota[static_cast<std::size_t>(c)] = static_cast<double>(val_total) *
                                             remainder_count[static_cast<std::size_t>(c)] /
                                             remainder_total;
      const std::vector<int> val_per_cond = largest_remainder(quota, val_total);

      for (int c = 0; c < kConditions; ++c) {
        const auto [lo, hi] = chunk[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)];
        int assigned = 0;
        // walk the shuffled order, skipping this fold's test chunk
        const auto& order = shuffled[static_cast<std::size_t>(c)];
        for (int i = 0; i < static_cast<int>(order.size()) &&
                        assigned < val_per_cond[static_cast<std::size_t>(c)];
             ++i) {
          if (i >= lo && i < hi) continue;
          plan.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
              Assignment::kVal;
          ++assigned;
        }
      }
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

void validate_splits(const std::vector<SplitPlan>& plans, const std::vector<int>& l_s,
                     const std::vector<int>& l_m, int folds, double val_fraction) {
  const int n = static_cast<int>(l_s.size());
  std::vector<int> cond(static_cast<std::size_t>(n));
  std::vector<int> cond_total(kConditions, 0);
  for (int i = 0; i < n; ++i) {
    cond[static_cast<std::size_t>(i)] = condition_of(l_s[static_cast<std::size_t>(i)],
                                                     l_m[static_cast<std::size_t>(i)]);
    cond_total[static_cast<std::size_t>(cond[static_cast<std::size_t>(i)])]++;
  }

  // group plans by rep
  std::vector<std::vector<const SplitPlan*>> by_rep;
  for (const auto& p : plans) {
    if (p.rep >= static_cast<int>(by_rep.size())) by_rep.resize(static_cast<std::size_t>(p.rep) + 1);
    by_rep[static_cast<std::size_t>(p.rep)].push_back(&p);
  }

  for (std::size_t r = 0; r < by_rep.size(); ++r) {
    std::vector<int> test_seen(static_cast<std::size_t>(n), 0);
    if (static_cast<int>(by_rep[r].size()) != folds)
      throw std::runtime_error("splits: rep " + std::to_string(r) + " has " +
                               std::to_string(by_rep[r].size()) + " folds, expected " +
                               std::to_string(folds));
    for (const auto* p : by_rep[r]) {
      if (static_cast<int>(p->assignment.size()) != n)
        throw std::runtime_error("splits: assignment length mismatch");
      std::vector<int> test_c(kConditions, 0), val_c(kConditions, 0), train_c(kConditions, 0);
      for (int i = 0; i < n; ++i) {
        switch (p->assignment[static_cast<std::size_t>(i)]) {
          case Assignment::kTest:
            test_seen[static_cast<std::size_t>(i)]++;
            test_c[static_cast<std::size_t>(cond[static_cast<std::size_t>(i)])]++;
            break;
          case Assignment::kVal:
            val_c[static_cast<std::size_t>(cond[static_cast<std::size_t>(i)])]++;
            break;
          case Assignment::kTrain:
            train_c[static_cast<std::size_t>(cond[static_cast<std::size_t>(i)])]++;
            break;
        }
      }
      for (int c = 0; c < kConditions; ++c) {
        const double nc = cond_total[static_cast<std::size_t>(c)];
        const double want_test = nc / folds;
        const double want_val = nc * val_fraction;
        const double want_train = nc - want_test - want_val;
        if (std::abs(test_c[static_cast<std::size_t>(c)] - want_test) > 1.0 + 1e-9 ||
            std::abs(val_c[static_cast<std::size_t>(c)] - want_val) > 1.0 + 1e-9 ||
            std::abs(train_c[static_cast<std::size_t>(c)] - want_train) > 1.0 + 1e-9)
          throw std::runtime_error("splits: stratification off by more than 1 for condition " +
                                   std::to_string(c) + " in rep " + std::to_string(p->rep) +
                                   " fold " + std::to_string(p->fold));
      }
    }
    for (int i = 0; i < n; ++i)
      if (test_seen[static_cast<std::size_t>(i)] != 1)
        throw std::runtime_error("splits: trial " + std::to_string(i) + " appears in " +
                                 std::to_string(test_seen[static_cast<std::size_t>(i)]) +
                                 " test folds of rep " + std::to_string(r));
  }
}

}  // namespace invlab
