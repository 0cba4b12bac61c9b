#pragma once

// Node-parallel kernels for the generator envelope and the explicit Euler
// step. Each kernel has a serial reference version kept for testing and
// benchmarking; the parallel versions compute every node with exactly the
// same arithmetic, so results are bit-identical for any worker count.

#include <cstddef>
#include <span>

#include "nisio/generator.hpp"

namespace nisio::kernels {

/// Worker cap: NISIO_THREADS if set (>= 1), else the OpenMP default.
int worker_count();

/// Node count below which the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 2048;

/// out_i = min_v (or max_v) [(L_v f)_i + r_vi f_i]; policy_i receives the
/// first index attaining it when `policy` is non-empty.
void envelope_serial(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
                     std::span<double> out, std::span<int> policy = {});
void envelope_parallel(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
                       std::span<double> out, std::span<int> policy = {});
void envelope(const DiscreteGenerator& gen, std::span<const double> f, Sense sense,
              std::span<double> out, std::span<int> policy = {});

/// out = f + dt * G f.
void euler_step_serial(const DiscreteGenerator& gen, std::span<const double> f, double dt,
                       Sense sense, std::span<double> out);
void euler_step_parallel(const DiscreteGenerator& gen, std::span<const double> f, double dt,
                         Sense sense, std::span<double> out);
void euler_step(const DiscreteGenerator& gen, std::span<const double> f, double dt, Sense sense,
                std::span<double> out);

/// out = f + dt * (L_v + r_v) f for a frozen control.
void linear_step_serial(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f,
                        double dt, std::span<double> out);
void linear_step_parallel(const DiscreteGenerator& gen, std::size_t v,
                          std::span<const double> f, double dt, std::span<double> out);
void linear_step(const DiscreteGenerator& gen, std::size_t v, std::span<const double> f,
                 double dt, std::span<double> out);

}  // namespace nisio::kernels
