#include "bdie/reference.hpp"

#include "bdie/error.hpp"

namespace bdie::reference {

std::vector<double> op_V_kernel(const SurfaceQuadrature& quad, const CoefficientField& field,
                                const SurfaceFunction& rho, const std::vector<Vec3>& targets) {
  std::vector<double> out;
  std::vector<LayerNode> scratch;
  for (const Vec3& y : targets) {
    double s = 0.0;
    quad.visit(y, scratch, [&](std::size_t t, const LayerNode& n, const SurfaceCoeff&, double, double) {
      s -= n.w * kernel_P(field, n.x, y) * rho(t, n.bary, n.x);
    });
    out.push_back(s);
  }
  return out;
}

std::vector<double> op_P_kernel(const VolumeQuadrature& quad, const CoefficientField& field, const DomainDensity& f,
                                const std::vector<Vec3>& targets) {
  const VolumeMesh& m = quad.mesh();
  std::vector<double> out;
  VolumeQuadrature::Scratch scratch;
  for (const Vec3& y : targets) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff&) {
        s += w * kernel_P(field, x, y) * f.at(c, x);
      });
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> op_R_kernel(const VolumeQuadrature& quad, const CoefficientField& field, const DomainDensity& u,
                                const std::vector<Vec3>& targets) {
  const VolumeMesh& m = quad.mesh();
  std::vector<double> out;
  VolumeQuadrature::Scratch scratch;
  for (const Vec3& y : targets) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      quad.visit_cell(y, c, scratch, [&](const Vec3& x, double w, const VolumeCoeff&) {
        s += w * kernel_R(field, x, y) * u.at(c, x);
      });
    }
    out.push_back(s);
  }
  return out;
}

OperatorBlock assemble_V_block_serial(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                                      const std::vector<ColMeta>& cols) {
  return assemble_V_block(quad, rows, cols, Exec::serial());
}

OperatorBlock assemble_W_block_serial(const SurfaceQuadrature& quad, const std::vector<RowMeta>& rows,
                                      const std::vector<ColMeta>& cols) {
  return assemble_W_block(quad, rows, cols, Exec::serial());
}

OperatorBlock assemble_R_block_serial(const VolumeQuadrature& quad, const std::vector<RowMeta>& rows) {
  return assemble_R_block(quad, rows, Exec::serial());
}

std::vector<double> op_R_dual(const VolumeQuadrature& laplace, const CoefficientField& field,
                              const std::function<double(const Vec3&)>& u, const std::vector<Vec3>& targets,
                              double h) {
  if (laplace.field() != nullptr) fail(ErrorKind::Config, "the divergence form needs a Laplace volume quadrature");
  const VolumeMesh& vm = laplace.mesh();
  std::vector<DomainDensity> comp;
  for (int i = 0; i < 3; ++i) {
    comp.push_back(DomainDensity::from_function(vm, [&field, &u, i](const Vec3& x) {
      return u(x) * eval_grad_ln_a(field, x)[i];
    }));
  }
  const DomainDensity lap = DomainDensity::from_function(vm, [&field, &u](const Vec3& x) {
    return u(x) * eval_laplacian_ln_a(field, x);
  });
  const Exec serial = Exec::serial();
  std::vector<double> out = newton_potential_delta(laplace, lap, targets, serial);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
      Vec3 e{0, 0, 0};
      e[i] = h;
      const std::vector<double> p = newton_potential_delta(laplace, comp[i], {targets[k] + e, targets[k] - e}, serial);
      div += (p[0] - p[1]) / (2.0 * h);
    }
    out[k] = div - out[k];
  }
  return out;
}

}  // namespace bdie::reference
