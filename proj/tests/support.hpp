#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabinfill/artifact.hpp"
#include "tabinfill/infill.hpp"
#include "tabinfill/rng.hpp"
#include "tabinfill/table.hpp"

namespace testing_support {

using namespace tabinfill;

inline MissingMask random_mask(Rng& rng, std::size_t n, double p) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = rng.bernoulli(p) ? 1 : 0;
  return MissingMask::from_bits(std::move(bits));
}

inline MissingMask mask_of(std::vector<std::uint8_t> bits) {
  return MissingMask::from_bits(std::move(bits));
}

// Counts by direct row scan.
inline double leakage_oracle(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  long marked = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 1) {
      ++marked;
      if (b[i] == 1) ++both;
    }
  }
  return marked == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(marked);
}

struct HaltOracle {
  double numeric = 0.0;
  double categoric = 0.0;
};

// Direct evaluation of the halting formulas, written independently of the library.
inline HaltOracle halt_oracle(const ImputationRecord& prev, const ImputationRecord& curr) {
  double num = 0.0, den = 0.0;
  double changed = 0.0, total = 0.0;
  for (const auto& [name, c] : curr.features) {
    const auto& p = prev.features.at(name);
    const double n = static_cast<double>(c.values.size());
    if (c.values.empty()) continue;
    if (c.task == Task::Regression) {
      double biggest = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        biggest = std::max(biggest, std::fabs(c.values[i][0] - p.values[i][0]));
        mean += std::fabs(c.values[i][0]) / n;
      }
      double r = 0.0;
      if (mean != 0.0) r = biggest / mean;
      else if (biggest != 0.0) r = 1.0;
      num += n * r;
      den += n;
    } else {
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        bool same = true;
        for (std::size_t k = 0; k < c.values[i].size(); ++k) same = same && c.values[i][k] == p.values[i][k];
        if (!same) changed += 1.0;
      }
      total += n;
    }
  }
  return {den == 0.0 ? 0.0 : num / den, total == 0.0 ? 0.0 : changed / total};
}

inline FeatureImputations numeric_imputations(std::vector<double> values) {
  FeatureImputations f;
  f.task = Task::Regression;
  for (std::size_t i = 0; i < values.size(); ++i) {
    f.rows.push_back(i);
    f.values.push_back({values[i]});
  }
  return f;
}

inline FeatureImputations categoric_imputations(const std::vector<std::vector<double>>& rows) {
  FeatureImputations f;
  f.task = Task::Classification;
  for (std::size_t i = 0; i < rows.size(); ++i) f.rows.push_back(i);
  f.values = rows;
  return f;
}

// Mixed-kind table with roughly `missing` of the cells missing. Every column
// keeps at least two present cells.
inline Table random_table(Rng& rng, std::size_t rows, std::size_t numeric, std::size_t categoric,
                          double missing) {
  static const char* const kWords[] = {"red", "green", "blue", "amber", "teal", "plum"};
  Table t(rows);
  std::vector<double> base(rows);
  for (auto& b : base) b = rng.normal(0.0, 1.0);
  for (std::size_t c = 0; c < numeric; ++c) {
    std::vector<std::optional<double>> cells(rows);
    const double w = rng.normal(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r >= 2 && rng.bernoulli(missing)) continue;
      cells[r] = w * base[r] + rng.normal(0.0, 0.5) + static_cast<double>(c);
    }
    t.add_column("n" + std::to_string(c), Column::numeric(std::move(cells)));
  }
  for (std::size_t c = 0; c < categoric; ++c) {
    std::vector<std::optional<std::string>> cells(rows);
    const std::size_t k = 2 + rng.uniform_index(5);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r >= 2 && rng.bernoulli(missing)) continue;
      const double z = base[r] + rng.normal(0.0, 0.7);
      auto idx = static_cast<std::size_t>(std::clamp((z + 2.0) / 4.0, 0.0, 0.999) *
                                          static_cast<double>(k));
      cells[r] = kWords[idx];
    }
    cells[0] = kWords[0];
    cells[1] = kWords[1];
    t.add_column("c" + std::to_string(c), Column::categoric(std::move(cells)));
  }
  return t;
}

inline PrepareConfig quick_config(std::uint64_t seed) {
  PrepareConfig cfg;
  cfg.shuffle_train = false;
  cfg.seed = seed;
  cfg.ml_cmnd.noise = NoiseParams::disabled();
  cfg.ml_cmnd.learner.n_estimators = 10;
  return cfg;
}

}  // namespace testing_support
