#pragma once

#include "qtraj/qubit.hpp"

namespace qtraj {

/// Additive split of one integration step: the new state is exactly
/// old + d_rho_w + d_rho_q. d_rho_w comes from the Hamiltonian alone,
/// d_rho_q from every detector-induced term.
struct StepDecomposition {
  StateDelta d_rho_w;
  StateDelta d_rho_q;
  double xi = 0.0;

  StateDelta total() const { return d_rho_w + d_rho_q; }
};

}  // namespace qtraj
