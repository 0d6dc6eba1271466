#include "cpf/grid.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cpf::student {

std::size_t GridSpec::size() const {
  const std::size_t full = layers.size() * hidden.size() * dropout.size() * lr.size() * weight_decay.size();
  return max_trials == 0 ? full : std::min(full, max_trials);
}

GridSpec published_grid() {
  GridSpec grid;
  grid.layers = {5, 6, 7, 8, 9, 10};
  grid.hidden = {8, 16, 32, 64};
  grid.dropout = {0.2, 0.5, 0.8};
  grid.lr = {0.001, 0.005, 0.01};
  grid.weight_decay = {0.0005, 0.001, 0.01};
  return grid;
}

GridSpec single_grid(const StudentHyperparams& hp) {
  GridSpec grid;
  grid.layers = {hp.layers};
  grid.hidden = {hp.hidden};
  grid.dropout = {hp.dropout};
  grid.lr = {hp.lr};
  grid.weight_decay = {hp.weight_decay};
  grid.base = hp;
  return grid;
}

std::vector<StudentHyperparams> expand(const GridSpec& grid) {
  std::vector<StudentHyperparams> all;
  for (int k : grid.layers)
    for (Index h : grid.hidden)
      for (double dr : grid.dropout)
        for (double lr : grid.lr)
          for (double wd : grid.weight_decay) {
            StudentHyperparams hp = grid.base;
            hp.layers = k;
            hp.hidden = h;
            hp.dropout = dr;
            hp.lr = lr;
            hp.weight_decay = wd;
            all.push_back(hp);
          }
  if (grid.max_trials == 0 || grid.max_trials >= all.size()) return all;

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(grid.seed, "grid/subset");
  rng.shuffle(order);
  order.resize(grid.max_trials);
  std::sort(order.begin(), order.end());
  std::vector<StudentHyperparams> subset;
  subset.reserve(order.size());
  for (std::size_t i : order) subset.push_back(all[i]);
  return subset;
}

namespace {

// True when trial a should be preferred over trial b.
bool better(const Trial& a, const Trial& b) {
  if (a.diverged != b.diverged) return !a.diverged;
  if (a.val_acc != b.val_acc) return a.val_acc > b.val_acc;
  if (a.hp.layers != b.hp.layers) return a.hp.layers < b.hp.layers;
  if (a.hp.hidden != b.hp.hidden) return a.hp.hidden < b.hp.hidden;
  return a.index < b.index;
}

}  // namespace

GridResult grid_search(const Graph& g, const Split& split, const SoftLabelMatrix& teacher, Variant variant,
                       const GridSpec& grid, std::uint64_t seed) {
  const std::vector<StudentHyperparams> points = expand(grid);
  if (points.empty()) throw std::invalid_argument("grid search needs a nonempty grid");

  GridResult out;
  out.trials.resize(points.size());
  std::optional<StudentResult> best_result;
  std::size_t best_index = points.size();
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      Trial trial;
      trial.index = i;
      trial.hp = points[i];
      std::optional<StudentResult> result;
      try {
        result = train_student(g, split, teacher, variant, points[i], seed);
        trial.val_acc = result->val_acc;
        trial.test_acc = result->test_acc;
        trial.best_epoch = result->best_epoch;
      } catch (const TrainingDiverged&) {
        trial.diverged = true;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard lock(mu);
      out.trials[i] = trial;
      if (result && (best_index == points.size() || better(trial, out.trials[best_index]))) {
        best_index = i;
        best_result = std::move(result);
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(grid.jobs, 1)), 1, points.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  if (best_index == points.size()) throw TrainingDiverged("every grid trial diverged");
  out.best = best_index;
  out.best_result = std::move(*best_result);
  return out;
}

}  // namespace cpf::student
