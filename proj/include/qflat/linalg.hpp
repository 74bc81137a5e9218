// Copyright 2026 The qflat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "qflat/rng.hpp"

namespace qflat {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

inline MatC kron(const MatC& a, const MatC& b) {
  MatC k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline MatC pauli_i() { return MatC::Identity(2, 2); }
inline MatC pauli_x() {
  MatC m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline MatC pauli_y() {
  MatC m(2, 2);
  m << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
  return m;
}
inline MatC pauli_z() {
  MatC m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Tensor product of single-qubit Paulis given by a base-4 digit string,
// qubit 0 first (leftmost factor): 0 -> I, 1 -> X, 2 -> Y, 3 -> Z.
inline MatC pauli_string_matrix(const std::vector<int>& p) {
  MatC m = MatC::Identity(1, 1);
  for (int d : p) {
    switch (d) {
      case 0: m = kron(m, pauli_i()); break;
      case 1: m = kron(m, pauli_x()); break;
      case 2: m = kron(m, pauli_y()); break;
      case 3: m = kron(m, pauli_z()); break;
      default: throw std::invalid_argument("pauli digit out of range");
    }
  }
  return m;
}

// Trace out the trailing `n_trace` qubits of a (2^{n_keep+n_trace})-dim
// density operator, returning the 2^{n_keep}-dim marginal.
inline MatC partial_trace_last(const MatC& rho, unsigned n_keep,
                               unsigned n_trace) {
  const Eigen::Index dk = Eigen::Index(1) << n_keep;
  const Eigen::Index dt = Eigen::Index(1) << n_trace;
  if (rho.rows() != dk * dt || rho.cols() != dk * dt)
    throw std::invalid_argument("dimension mismatch");
  MatC out = MatC::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j)
      for (Eigen::Index t = 0; t < dt; ++t)
        out(i, j) += rho(i * dt + t, j * dt + t);
  return out;
}

// Reduced state of a pure state on the leading n_keep qubits: reshape the
// amplitude vector to a (2^{n_keep} x 2^{n_trace}) matrix A and form A A^†.
inline MatC pure_partial_trace_last(const VecC& psi, unsigned n_keep,
                                    unsigned n_trace) {
  const Eigen::Index dk = Eigen::Index(1) << n_keep;
  const Eigen::Index dt = Eigen::Index(1) << n_trace;
  if (psi.size() != dk * dt) throw std::invalid_argument("dimension mismatch");
  Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                 Eigen::Dynamic, Eigen::RowMajor>>
      a(psi.data(), dk, dt);
  return a * a.adjoint();
}

// Haar-distributed unitary: Ginibre ensemble + QR, with the R diagonal's
// phases folded into Q so the distribution is exactly invariant.
inline MatC haar_unitary(unsigned dim, Rng& rng) {
  MatC g(dim, dim);
  for (unsigned i = 0; i < dim; ++i)
    for (unsigned j = 0; j < dim; ++j)
      g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  Eigen::HouseholderQR<MatC> qr(g);
  MatC q = qr.householderQ();
  MatC r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (unsigned j = 0; j < dim; ++j) {
    std::complex<double> d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= (a > 0) ? d / a : 1.0;
  }
  return q;
}

// Haar-random unit vector.
inline VecC haar_state(unsigned dim, Rng& rng) {
  VecC v(dim);
  for (unsigned i = 0; i < dim; ++i)
    v(i) = std::complex<double>(rng.normal(), rng.normal());
  v.normalize();
  return v;
}

inline bool is_unitary(const MatC& u, double tol = 1e-10) {
  return (u.adjoint() * u - MatC::Identity(u.rows(), u.cols())).norm() <= tol;
}

// Principal square root of a PSD Hermitian matrix.
inline MatC psd_sqrt(const MatC& m) {
  Eigen::SelfAdjointEigenSolver<MatC> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() *
         es.eigenvectors().adjoint();
}

}  // namespace qflat
