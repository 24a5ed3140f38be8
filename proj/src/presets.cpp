#include "ctlqr/presets.hpp"

namespace ctlqr::harness {

std::pair<DynamicsModel, CostSpec> x29a_preset() {
    Matrix A(4, 4);
    A << -0.1850, 0.1475, -0.9825, 0.1120,
         -0.3467, -1.710, 0.9029, -0.5843e-6,
          1.174, -0.0825, -0.1826, -0.4428e-7,
          0.0, 1.0, 0.1429, 0.0;
    Matrix B(4, 2);
    B << -0.4470e-3, 0.4020e-3,
          0.3715, 0.0549,
          0.0265, -0.0135,
          0.0, 0.0;
    const Matrix C = 0.2 * Matrix::Identity(4, 4);
    return {DynamicsModel::make(A, B, C), CostSpec::make(10.0 * Matrix::Identity(4, 4), Matrix::Identity(2, 2))};
}

}  // namespace ctlqr::harness
