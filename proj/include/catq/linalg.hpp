#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace catq {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

SpMat sparse_identity(int n);
// n x 1 column of ones
SpMat ones_column(int n);
SpMat to_sparse(const Mat& m);
SpMat kron(const SpMat& a, const SpMat& b);

// Emits the Kronecker product of `factors` (scaled) into `out`, shifted by
// (row0, col0).
void emit_kron(const std::vector<const SpMat*>& factors, double scale,
               int row0, int col0, std::vector<Triplet>& out);

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& t);

// x Q = 0, x e = 1 for an irreducible generator Q.
RowVec stationary_distribution(const Mat& q);

double max_abs(const SpMat& a);
double max_abs_diff(const SpMat& a, const SpMat& b);
double max_abs_diff(const Mat& a, const Mat& b);

}  // namespace catq
