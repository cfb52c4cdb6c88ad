#pragma once

#include <vector>

#include "dsq/devices.hpp"
#include "dsq/gaussian_state.hpp"
#include "dsq/moments.hpp"

namespace dsq {

struct ReconstructionOptions {
  /// Residual allowance in units of the propagated moment standard error.
  double residual_sigma = 10.0;
  /// Relative residual allowance for exact moment sets.
  double exact_tolerance = 1e-8;
};

/// Dual-path inversion result. Noise sets hold anti-normally ordered
/// moments <h^p h^dag^q> under the key (p, q).
struct DpmResult {
  SignalMomentSet signal{1, kMaxMomentOrder};
  SignalMomentSet noise_1{1, kMaxMomentOrder};
  SignalMomentSet noise_2{1, kMaxMomentOrder};
  /// Least-squares residual norm per order (index 0 is order 1).
  std::vector<double> residuals;
};

/// Recovers the normally ordered moments of the field entering the hybrid
/// ring (the other port holds vacuum) together with the noise moments of
/// both detection paths, order by order, using the chain's assumed gains. Throws ReconstructionError
/// when an order's residual exceeds its tolerance.
DpmResult dpm_reconstruct_detailed(const RawMomentSet& moments, const DetectionChain& chain,
                                   const ReconstructionOptions& options = {});

SignalMomentSet dpm_reconstruct(const RawMomentSet& moments, const DetectionChain& chain,
                                const ReconstructionOptions& options = {});

/// Subtracts the noise moments measured with vacuum at the input.
/// Both sets must cover the same orders.
SignalMomentSet rsm_reconstruct(const RawMomentSet& moments, const RawMomentSet& reference,
                                const DetectionChain& chain);

/// Mean vector and covariance of a one- or two-mode moment set.
GaussianState moments_to_state(const SignalMomentSet& moments);

/// Exact normally ordered moments of every mode in `state` (1 or 2 modes).
SignalMomentSet normal_ordered_moments(const GaussianState& state, int max_order = kMaxMomentOrder);

/// Single-mode moments of the input field, a = (c1 + c2) / sqrt(2), from the
/// moments of the two hybrid-ring outputs.
SignalMomentSet recombine_outputs(const SignalMomentSet& outputs);

}  // namespace dsq
