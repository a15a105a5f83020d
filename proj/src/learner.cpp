#include "tabinfill/learner.hpp"

#include <map>
#include <mutex>

#include "tabinfill/error.hpp"

namespace tabinfill {

std::vector<double> ForestModel::predict(const Matrix& X) const {
  return tabinfill::predict(forest_, X);
}

std::string ForestModel::learner_name() const { return ForestLearner::kName; }

std::shared_ptr<const Model> ForestLearner::fit(const Matrix& X, std::span<const double> y,
                                                Task task, const LearnerConfig& config) const {
  if (!config.grid.empty()) {
    return std::make_shared<ForestModel>(grid_search(X, y, task, config).forest);
  }
  return std::make_shared<ForestModel>(fit_forest(X, y, task, config));
}

std::shared_ptr<const Model> ForestLearner::decode(const std::string& bytes) const {
  return std::make_shared<ForestModel>(decode_forest(bytes));
}

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const Learner>> learners;

  Registry() {
    auto forest = std::make_shared<ForestLearner>();
    learners.emplace(forest->name(), forest);
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

const Learner& default_learner() { return find_learner(ForestLearner::kName); }

void register_learner(std::shared_ptr<const Learner> learner) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.learners[learner->name()] = std::move(learner);
}

const Learner& find_learner(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.learners.find(name);
  if (it == r.learners.end()) throw ArtifactError("unknown learner '" + name + "'");
  return *it->second;
}

}  // namespace tabinfill
