#pragma once

#include <functional>
#include <vector>

#include "bdie/parametrix_ops.hpp"

// Serial, unoptimised evaluators that call the pointwise kernels directly at
// the quadrature nodes of the production engines. They share nodes and
// weights with the parallel code but none of its algebra, so agreement checks
// the relations between the parametrix and Laplace operators.
namespace bdie::reference {

/// -int P^x(x, y) rho(x) dS(x).
std::vector<double> op_V_kernel(const SurfaceQuadrature& quad, const CoefficientField& field,
                                const SurfaceFunction& rho, const std::vector<Vec3>& targets);
/// int P^x(x, y) f(x) dx.
std::vector<double> op_P_kernel(const VolumeQuadrature& quad, const CoefficientField& field, const DomainDensity& f,
                                const std::vector<Vec3>& targets);
/// int R(x, y) u(x) dx with kernel_R evaluated afresh at every node.
std::vector<double> op_R_kernel(const VolumeQuadrature& quad, const CoefficientField& field, const DomainDensity& u,
                                const std::vector<Vec3>& targets);
/// Divergence form of the remainder operator,
///   R u(y) = div_y P_Delta(u grad ln a)(y) - P_Delta(u lap ln a)(y),
/// with the divergence taken by central differences of step h. `laplace`
/// must carry no coefficient.
std::vector<double> op_R_dual(const VolumeQuadrature& laplace, const CoefficientField& field,
                              const std::function<double(const Vec3&)>& u, const std::vector<Vec3>& targets,
                              double h = 1e-3);

/// Row-by-row dense blocks without threading, for comparison with the
/// parallel assembly.
OperatorBlock assemble_V_block_serial(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                                      const std::vector<ColMeta>& cols);
OperatorBlock assemble_W_block_serial(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                                      const std::vector<ColMeta>& cols);
OperatorBlock assemble_R_block_serial(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows);

}  // namespace bdie::reference
