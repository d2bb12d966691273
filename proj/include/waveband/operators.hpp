#pragma once

// Control and connecting operators of the boundary-control system.
//
// Coordinates: controls live on t_j = j h, j = 1..N (slot j - 1), states on
// x_i = i h, i = 0..N-1 (slot i). The delayed-control nest F_s holds controls
// supported in [T - s, T], i.e. the trailing s / h slots; the reachable set
// U^s is L2([0, s]), the leading s / h state slots.

#include "waveband/core.hpp"
#include "waveband/forward.hpp"

namespace waveband {

enum class AssemblyMethod { fd, kernel };

AssemblyMethod assembly_method_from_string(std::string_view s);

// Column j * n + alpha is the state at time T produced by the unit hat
// control in channel alpha centered at t_{j+1}. The kernel method needs a
// kernel solved on the same grid.
DiscreteOperator assemble_control_operator(const HermitianPotential& potential, const Grid& grid,
                                           AssemblyMethod method = AssemblyMethod::fd,
                                           const KernelField* kernel = nullptr);

// C = W^* W.
DiscreteOperator compute_connecting(const DiscreteOperator& W);

// Orthogonal projection onto the span of A restricted to the trailing
// `steps` control slots (controls supported in [T - s, T], s = steps h).
// Singular values at or below tol * sigma_max are discarded.
DiscreteOperator reachable_projection(const DiscreteOperator& A, int steps, double tol = 1e-8);
// Time-valued overload; throws grid error when s is off-grid.
DiscreteOperator reachable_projection(const DiscreteOperator& A, double s, double tol = 1e-8);

// Exact cutoff onto the leading `steps` state slots (x < s).
DiscreteOperator state_cutoff(int steps, int slots, int n, double h);

// E = sum_k s_k (P_{s_k} - P_{s_{k-1}}). Throws nest-violation error when the
// family is not monotone.
DiscreteOperator assemble_eikonal(const std::vector<DiscreteOperator>& projections,
                                  const NestPartition& partition);

// Reflection with delay (R f)(x) = f(T - x) from controls to states.
Mat reflection(int N, int n);

}  // namespace waveband
