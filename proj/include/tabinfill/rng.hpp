#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tabinfill {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for a sub-stream identified by a path of indices. The result depends
// only on the arguments, never on call order.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

// Thin wrapper over mt19937_64 whose derived distributions are written out
// by hand so draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01();

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  double normal(double mu, double sigma);

  // Laplace with location mu and scale b.
  double laplace(double mu, double b);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Identity permutation of [0, n) shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tabinfill
