#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace sobcomp {

// Derives a well-mixed 64-bit seed from a base seed and a stream index
// (splitmix64 finalizer). Used so that per-item streams do not depend on the
// order in which items are processed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// A source of points in the unit cube [0,1)^d. Samplers consume whole points,
// so rejection steps keep low-discrepancy sequences aligned.
class UnitCubeSource {
 public:
  virtual ~UnitCubeSource() = default;
  virtual std::size_t dimension() const = 0;
  virtual void next(std::span<double> out) = 0;
};

class RandomCubeSource final : public UnitCubeSource {
 public:
  RandomCubeSource(std::size_t dim, std::uint64_t seed);
  std::size_t dimension() const override { return dim_; }
  void next(std::span<double> out) override;

 private:
  std::size_t dim_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

// Sobol low-discrepancy sequence with a Cranley-Patterson rotation derived
// from the seed, so different seeds give different (still low-discrepancy)
// streams.
class SobolCubeSource final : public UnitCubeSource {
 public:
  SobolCubeSource(std::size_t dim, std::uint64_t seed);
  ~SobolCubeSource() override;
  SobolCubeSource(const SobolCubeSource&) = delete;
  SobolCubeSource& operator=(const SobolCubeSource&) = delete;

  std::size_t dimension() const override { return dim_; }
  void next(std::span<double> out) override;

 private:
  struct Engine;
  std::size_t dim_;
  std::unique_ptr<Engine> engine_;
  std::vector<double> shift_;
};

// Running mean/variance (Welford).
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Sum with a fixed binary tree over contiguous halves; adjacent entries are
// combined first, so callers can arrange cancelling pairs next to each other.
double pairwise_sum(std::span<const double> values);

// Runs body(i) for i in [0, n) on up to `threads` workers. Work items must not
// share mutable state; results are written by index.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

// Process-wide default used by estimators that fan out per-item work.
unsigned default_threads();
void set_default_threads(unsigned threads);

}  // namespace sobcomp
