#pragma once

// Hyperparameter search over student configurations.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cpf/student.hpp"

namespace cpf::student {

/// Cartesian grid over the searched hyperparameters. Unsearched settings
/// (epochs, patience, feature normalization) come from `base`.
struct GridSpec {
  std::vector<int> layers;
  std::vector<Index> hidden;
  std::vector<double> dropout;
  std::vector<double> lr;
  std::vector<double> weight_decay;
  StudentHyperparams base;
  std::size_t max_trials = 0;  // 0 = exhaustive, else a seeded random subset
  std::uint64_t seed = 0;      // subset sampling only
  int jobs = 1;

  std::size_t size() const;
};

/// K 5..10, hidden {8,16,32,64}, dropout {0.2,0.5,0.8},
/// lr {0.001,0.005,0.01}, weight decay {0.0005,0.001,0.01}.
GridSpec published_grid();

/// The one-point grid holding `hp`.
GridSpec single_grid(const StudentHyperparams& hp);

/// Grid points in a fixed order (K outermost, weight decay innermost), or the
/// sampled subset in that same order.
std::vector<StudentHyperparams> expand(const GridSpec& grid);

struct Trial {
  std::size_t index = 0;
  StudentHyperparams hp;
  double val_acc = 0.0;
  double test_acc = 0.0;
  int best_epoch = 0;
  bool diverged = false;
};

struct GridResult {
  std::vector<Trial> trials;  // in expand() order
  std::size_t best = 0;       // index into trials
  StudentResult best_result;

  const Trial& best_trial() const { return trials[best]; }
};

/// Trains every grid point with the same seed and keeps the best validation
/// accuracy; ties go to lower K, then lower hidden size, then earlier trial.
/// Diverged trials are recorded and skipped. Throws if the grid is empty or
/// every trial diverged.
GridResult grid_search(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, Variant variant,
                       const GridSpec& grid, std::uint64_t seed);

}  // namespace cpf::student
