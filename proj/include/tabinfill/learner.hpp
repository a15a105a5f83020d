#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tabinfill/forest.hpp"
#include "tabinfill/matrix.hpp"

namespace tabinfill {

// A fitted imputation model. Implementations are immutable once built.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::vector<double> predict(const Matrix& X) const = 0;
  virtual std::string learner_name() const = 0;
  // Opaque bytes understood by the owning learner's decode().
  virtual std::string encode() const = 0;
};

// The seam through which imputation models are trained. Any conforming
// implementation may replace the built-in forest.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual std::shared_ptr<const Model> fit(const Matrix& X, std::span<const double> y, Task task,
                                           const LearnerConfig& config) const = 0;
  virtual std::shared_ptr<const Model> decode(const std::string& bytes) const = 0;
};

class ForestModel final : public Model {
 public:
  explicit ForestModel(Forest forest) : forest_(std::move(forest)) {}

  std::vector<double> predict(const Matrix& X) const override;
  std::string learner_name() const override;
  std::string encode() const override { return encode_forest(forest_); }

  const Forest& forest() const { return forest_; }

 private:
  Forest forest_;
};

// Random forest; runs a grid search whenever the config carries a grid.
class ForestLearner final : public Learner {
 public:
  static constexpr const char* kName = "random_forest";

  std::string name() const override { return kName; }
  std::shared_ptr<const Model> fit(const Matrix& X, std::span<const double> y, Task task,
                                   const LearnerConfig& config) const override;
  std::shared_ptr<const Model> decode(const std::string& bytes) const override;
};

const Learner& default_learner();

// Learners consulted when loading artifacts. The forest is always present.
void register_learner(std::shared_ptr<const Learner> learner);
const Learner& find_learner(const std::string& name);

}  // namespace tabinfill
