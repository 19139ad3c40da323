#pragma once

#include <cstdint>
#include <vector>

#include "invlab/data.hpp"

// Stratified 70/10/20 split plans for repeated 5-fold cross-validation:
// within each repetition the test folds partition the data, and every
// assignment is stratified by the six (texture, movement) conditions.

namespace invlab {

enum class Assignment : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

struct SplitPlan {
  int rep = 0;
  int fold = 0;
  std::vector<Assignment> assignment;  // one per trial

  std::vector<int> indices_of(Assignment a) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == a) out.push_back(static_cast<int>(i));
    return out;
  }
};

/// Builds reps*folds plans (rep-major order). Rep r draws from seed*1000+r.
std::vector<SplitPlan> make_splits(const std::vector<int>& l_s, const std::vector<int>& l_m,
                                   int reps = 10, int folds = 5, double val_fraction = 0.10,
                                   std::uint64_t seed = 0);

/// Checks partition, disjointness and per-condition stratification (+-1);
/// throws on the first violated invariant.
void validate_splits(const std::vector<SplitPlan>& plans, const std::vector<int>& l_s,
                     const std::vector<int>& l_m, int folds, double val_fraction);

}  // namespace invlab
