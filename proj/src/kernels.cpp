#include "nisio/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef NISIO_HAVE_OPENMP
#include <omp.h>
#endif

namespace nisio::kernels {

int worker_count() {
  int cap = 1;
#ifdef NISIO_HAVE_OPENMP
  cap = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("NISIO_THREADS")) {
    try {
      const int requested = std::stoi(env);
      if (requested >= 1) cap = requested;
    } catch (const std::exception&) {
      // unparsable value: keep the default
    }
  }
  return cap < 1 ? 1 : cap;
}

namespace {

struct Tables {
  const std::size_t* cols;
  const double* weights;
  const double* cost;
  std::size_t nodes;
  std::size_t controls;
  std::size_t width;

  explicit Tables(const DiscreteGenerator& gen)
      : cols(gen.column_data()), weights(gen.weight_data()), cost(gen.cost_data()),
        nodes(gen.node_count()), controls(gen.control_count()), width(gen.stencil_width()) {}
};

// Same arithmetic, in the same order, as DiscreteGenerator::apply_row; W is
// the stencil width when known at compile time (0 = runtime width).
template <std::size_t W>
inline double row(const Tables& t, std::size_t v, std::size_t i, const double* f) {
  const std::size_t w = W ? W : t.width;
  const double* wt = t.weights + (v * t.nodes + i) * w;
  const std::size_t* col = t.cols + i * w;
  const double fi = f[i];
  double acc = 0.0;
  for (std::size_t k = 0; k < w; ++k) acc += wt[k] * (f[col[k]] - fi);
  return acc + t.cost[v * t.nodes + i] * fi;
}

template <std::size_t W, bool Min>
inline double envelope_node(const Tables& t, std::size_t i, const double* f, int& arg) {
  double best = row<W>(t, 0, i, f);
  arg = 0;
  for (std::size_t v = 1; v < t.controls; ++v) {
    const double val = row<W>(t, v, i, f);
    if (Min ? val < best : val > best) {
      best = val;
      arg = static_cast<int>(v);
    }
  }
  return best;
}

// Calls body.template operator()<W, Min>() for the generator's width and sense.
template <class Body>
void dispatch(const Tables& t, Sense sense, Body&& body) {
  const bool min = sense == Sense::Minimize;
  switch (t.width) {
    case 2: min ? body.template operator()<2, true>() : body.template operator()<2, false>(); break;
    case 4: min ? body.template operator()<4, true>() : body.template operator()<4, false>(); break;
    case 8: min ? body.template operator()<8, true>() : body.template operator()<8, false>(); break;
    default: min ? body.template operator()<0, true>() : body.template operator()<0, false>(); break;
  }
}

bool go_parallel(std::size_t nodes) {
#ifdef NISIO_HAVE_OPENMP
  return nodes >= kParallelThreshold && worker_count() > 1;
#else
  (void)nodes;
  return false;
#endif
}

}  // namespace

void envelope_serial(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
                     std::span<double> out, std::span<int> policy) {
  const Tables t(gen);
  const bool want_policy = !policy.empty();
  dispatch(t, sense, [&]<std::size_t W, bool Min>() {
    for (std::size_t i = 0; i < t.nodes; ++i) {
      int arg = 0;
      out[i] = envelope_node<W, Min>(t, i, f.data(), arg);
      if (want_policy) policy[i] = arg;
    }
  });
}

void envelope_parallel(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
                       std::span<double> out, std::span<int> policy) {
  const Tables t(gen);
  const bool want_policy = !policy.empty();
  const auto n = static_cast<std::ptrdiff_t>(t.nodes);
  dispatch(t, sense, [&]<std::size_t W, bool Min>() {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      int arg = 0;
      out[k] = envelope_node<W, Min>(t, k, f.data(), arg);
      if (want_policy) policy[k] = arg;
    }
  });
}

void envelope(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
              std::span<double> out, std::span<int> policy) {
  if (go_parallel(gen.node_count())) {
    envelope_parallel(gen, f, sense, out, policy);
  } else {
    envelope_serial(gen, f, sense, out, policy);
  }
}

void euler_step_serial(const DiscreteGenerator& gen, std::span<const double> f, double dt,
                       Sense sense, std::span<double> out) {
  const Tables t(gen);
  dispatch(t, sense, [&]<std::size_t W, bool Min>() {
    for (std::size_t i = 0; i < t.nodes; ++i) {
      int arg = 0;
      out[i] = f[i] + dt * envelope_node<W, Min>(t, i, f.data(), arg);
    }
  });
}

void euler_step_parallel(const DiscreteGenerator& gen, std::span<const double> f, double dt,
                         Sense sense, std::span<double> out) {
  const Tables t(gen);
  const auto n = static_cast<std::ptrdiff_t>(t.nodes);
  dispatch(t, sense, [&]<std::size_t W, bool Min>() {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      int arg = 0;
      out[k] = f[k] + dt * envelope_node<W, Min>(t, k, f.data(), arg);
    }
  });
}

void euler_step(const DiscreteGenerator& gen, std::span<const double> f, double dt, Sense sense,
                std::span<double> out) {
  if (go_parallel(gen.node_count())) {
    euler_step_parallel(gen, f, dt, sense, out);
  } else {
    euler_step_serial(gen, f, dt, sense, out);
  }
}

void linear_step_serial(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f,
                        double dt, std::span<double> out) {
  const Tables t(gen);
  for (std::size_t i = 0; i < t.nodes; ++i) out[i] = f[i] + dt * row<0>(t, v, i, f.data());
}

void linear_step_parallel(const DiscreteGenerator& gen, std::size_t v,
                          std::span<const double> f, double dt, std::span<double> out) {
  const Tables t(gen);
  const auto n = static_cast<std::ptrdiff_t>(t.nodes);
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = f[k] + dt * row<0>(t, v, k, f.data());
  }
}

void linear_step(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f,
                 double dt, std::span<double> out) {
  if (go_parallel(gen.node_count())) {
    linear_step_parallel(gen, v, f, dt, out);
  } else {
    linear_step_serial(gen, v, f, dt, out);
  }
}

}  // namespace nisio::kernels
