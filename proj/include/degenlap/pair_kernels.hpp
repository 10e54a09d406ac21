#pragma once

// Pair-sum kernels. `parallel::` splits rows over OpenMP threads; each row is
// summed by one thread with a fixed pairwise tree and the row totals are
// combined by another fixed tree, so the result does not depend on the thread
// count. `reference::` is the plain serial double loop used as an oracle.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#include "degenlap/summation.hpp"

namespace degenlap::pairsum {

namespace parallel {

/// sum_i sum_{j != i} term(i, j).
template <class Term>
double ordered(std::size_t n, const Term& term) {
  std::vector<double> rows(n, 0.0);
  const long nl = static_cast<long>(n);
#pragma omp parallel
  {
    std::vector<double> buf(n);
#pragma omp for schedule(dynamic, 8)
    for (long il = 0; il < nl; ++il) {
      const auto i = static_cast<std::size_t>(il);
      for (std::size_t j = 0; j < n; ++j) buf[j] = j == i ? 0.0 : term(i, j);
      rows[i] = pairwise_sum(buf);
    }
  }
  return pairwise_sum(rows);
}

/// sum_i sum_{j > i} term(i, j).
template <class Term>
double upper(std::size_t n, const Term& term) {
  std::vector<double> rows(n, 0.0);
  const long nl = static_cast<long>(n);
#pragma omp parallel
  {
    std::vector<double> buf(n);
#pragma omp for schedule(dynamic, 8)
    for (long il = 0; il < nl; ++il) {
      const auto i = static_cast<std::size_t>(il);
      const std::size_t len = n - i - 1;
      for (std::size_t k = 0; k < len; ++k) buf[k] = term(i, i + 1 + k);
      rows[i] = pairwise_sum(std::span<const double>(buf.data(), len));
    }
  }
  return pairwise_sum(rows);
}

/// out[r] = sum_{j != rows[r]} term(rows[r], j).
template <class Term>
void row_sums(std::span<const std::size_t> rows, std::size_t n, const Term& term, std::span<double> out) {
  const long nr = static_cast<long>(rows.size());
#pragma omp parallel
  {
    std::vector<double> buf(n);
#pragma omp for schedule(dynamic, 4)
    for (long r = 0; r < nr; ++r) {
      const std::size_t i = rows[static_cast<std::size_t>(r)];
      for (std::size_t j = 0; j < n; ++j) buf[j] = j == i ? 0.0 : term(i, j);
      out[static_cast<std::size_t>(r)] = pairwise_sum(buf);
    }
  }
}

/// out[i] = term(i) for i < n; used for dense per-row fills such as kernel rows.
template <class Fill>
void for_rows(std::size_t n, const Fill& fill) {
  const long nl = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < nl; ++i) fill(static_cast<std::size_t>(i));
}

} // namespace parallel

namespace reference {

template <class Term>
double ordered(std::size_t n, const Term& term) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) acc += term(i, j);
    }
  }
  return acc;
}

template <class Term>
double upper(std::size_t n, const Term& term) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) acc += term(i, j);
  }
  return acc;
}

template <class Term>
void row_sums(std::span<const std::size_t> rows, std::size_t n, const Term& term, std::span<double> out) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != rows[r]) acc += term(rows[r], j);
    }
    out[r] = acc;
  }
}

} // namespace reference

} // namespace degenlap::pairsum

namespace degenlap {

/// Collects the first exception thrown inside an OpenMP region so it can be
/// rethrown on the calling thread.
class ErrorSink {
public:
  template <class F>
  double run(const F& f) noexcept {
    try {
      return f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
      return 0.0;
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

} // namespace degenlap
