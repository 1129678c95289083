#pragma once

// Single-threaded versions of the maps in dikp::par, written as plain nested
// loops. Used as the baseline in benchmarks and as a cross-check in tests.

#include <cstddef>
#include <span>

#include "dikp/parallel_kernels.hpp"

namespace dikp::serial {

void correlate_reflect(std::span<const double> x, par::PlaneDims dims, const par::FilterView& f,
                       std::span<double> out);

/// Scatter form of the adjoint.
void correlate_reflect_adjoint(std::span<const double> y, par::PlaneDims dims,
                               const par::FilterView& f, std::span<double> out);

/// Direct (no im2col) reflect-padded conv layer: out has Cout x Ho x Wo entries.
void conv2d_direct(std::span<const double> x, const par::ConvGeometry& g,
                   std::span<const double> weight, std::span<const double> bias, std::size_t cout,
                   std::span<double> out);

}  // namespace dikp::serial
