#include "degenlap/quadrature.hpp"

#include <map>
#include <mutex>

#include <gsl/gsl_integration.h>

#include "degenlap/errors.hpp"

namespace degenlap {

const GaussLegendre& gauss_legendre_unit(int m) {
  if (m < 1) throw InvalidArgument("gauss_legendre_unit: m must be >= 1");
  static std::mutex mutex;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(m));
  GaussLegendre rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    gsl_integration_glfixed_point(0.0, 1.0, static_cast<size_t>(i), &rule.nodes[i], &rule.weights[i], table);
  }
  gsl_integration_glfixed_table_free(table);
  return cache.emplace(m, std::move(rule)).first->second;
}

} // namespace degenlap
