#include "sobcomp/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <thread>

#include <boost/random/sobol.hpp>

namespace sobcomp {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RandomCubeSource::RandomCubeSource(std::size_t dim, std::uint64_t seed)
    : dim_(dim), engine_(seed) {}

void RandomCubeSource::next(std::span<double> out) {
  for (double& v : out) v = unit_(engine_);
}

struct SobolCubeSource::Engine {
  explicit Engine(std::size_t dim) : gen(static_cast<unsigned>(dim)) {}
  boost::random::sobol gen;
};

SobolCubeSource::SobolCubeSource(std::size_t dim, std::uint64_t seed)
    : dim_(dim), engine_(std::make_unique<Engine>(dim)), shift_(dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& s : shift_) s = unit(rng);
  // skip the origin
  std::vector<double> scratch(dim);
  next(scratch);
}

SobolCubeSource::~SobolCubeSource() = default;

void SobolCubeSource::next(std::span<double> out) {
  constexpr double kScale = 1.0 / 18446744073709551616.0;  // 2^-64
  for (std::size_t i = 0; i < dim_; ++i) {
    double v = static_cast<double>(engine_->gen()) * kScale + shift_[i];
    v -= std::floor(v);
    if (i < out.size()) out[i] = std::min(v, 0x1.fffffffffffffp-1);
  }
}

double RunningStats::standard_error() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  if (values.size() == 2) return values[0] + values[1];
  // split on an even boundary so adjacent pairs stay together
  std::size_t half = values.size() / 2;
  half += half % 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

namespace {
std::atomic<unsigned> g_default_threads{1};
}

unsigned default_threads() { return g_default_threads.load(); }

void set_default_threads(unsigned threads) { g_default_threads.store(std::max(1u, threads)); }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sobcomp
