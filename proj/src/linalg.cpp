#include "qmenv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "qmenv/errors.hpp"

namespace qmenv {

namespace {

template <typename A, typename B>
bool same_entries(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

} // namespace

Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix projector(const Vector& v) { return v * v.adjoint(); }

Vector basis_vector(Eigen::Index dim, Eigen::Index i) {
    Vector v = Vector::Zero(dim);
    v(i) = 1.0;
    return v;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermitian_deviation(const Matrix& m) {
    if (m.rows() != m.cols())
        throw ShapeError("hermitian_deviation: matrix is not square");
    return max_abs(m - m.adjoint());
}

double unitary_deviation(const Matrix& m) {
    if (m.rows() != m.cols())
        throw ShapeError("unitary_deviation: matrix is not square");
    return max_abs(m * m.adjoint() - Matrix::Identity(m.rows(), m.cols()));
}

double min_eigenvalue(const Matrix& m) {
    Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Matrix pinv_sqrt_psd(const Matrix& m, double cutoff) {
    Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Eigen::VectorXd inv = es.eigenvalues().unaryExpr([cutoff](double x) { return x > cutoff ? 1.0 / std::sqrt(x) : 0.0; });
    return es.eigenvectors() * inv.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

Matrix support_projector(const Matrix& m, double cutoff) {
    Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Eigen::VectorXd keep = es.eigenvalues().unaryExpr([cutoff](double x) { return x > cutoff ? 1.0 : 0.0; });
    return es.eigenvectors() * keep.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------

ProductState::ProductState(Vector v) { factors_.push_back(std::move(v)); }

ProductState::ProductState(std::vector<Vector> factors) : factors_(std::move(factors)) {
    if (factors_.empty())
        throw ShapeError("product state needs at least one factor");
}

std::vector<Eigen::Index> ProductState::factor_dims() const {
    std::vector<Eigen::Index> dims;
    for (const auto& f : factors_)
        dims.push_back(f.size());
    return dims;
}

Eigen::Index ProductState::dim() const {
    Eigen::Index d = 1;
    for (const auto& f : factors_)
        d *= f.size();
    return factors_.empty() ? 0 : d;
}

Vector ProductState::dense() const {
    if (factors_.empty())
        return Vector();
    Vector out = factors_.back();
    for (auto it = factors_.rbegin() + 1; it != factors_.rend(); ++it)
        out = kron(*it, out);
    return out;
}

ProductState ProductState::tensor_left(const Vector& w) const {
    std::vector<Vector> f;
    f.reserve(factors_.size() + 1);
    f.push_back(w);
    f.insert(f.end(), factors_.begin(), factors_.end());
    return ProductState(std::move(f));
}

bool operator==(const ProductState& a, const ProductState& b) {
    if (a.factors_.size() != b.factors_.size())
        return false;
    for (std::size_t i = 0; i < a.factors_.size(); ++i)
        if (!same_entries(a.factors_[i], b.factors_[i]))
            return false;
    return true;
}

Matrix OperatorFactor::dense() const { return matrix ? *matrix : Matrix::Identity(dim, dim); }

OperatorFactor OperatorFactor::explicit_matrix(Matrix m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw ShapeError("operator factor must be square with dim >= 1");
    Eigen::Index d = m.rows();
    return {d, std::move(m)};
}

bool operator==(const OperatorFactor& a, const OperatorFactor& b) {
    if (a.dim != b.dim || a.is_identity() != b.is_identity())
        return false;
    return a.is_identity() || same_entries(*a.matrix, *b.matrix);
}

ProductOperator::ProductOperator(Matrix m) { factors_.push_back(OperatorFactor::explicit_matrix(std::move(m))); }

ProductOperator::ProductOperator(std::vector<OperatorFactor> factors) : factors_(std::move(factors)) {
    if (factors_.empty())
        throw ShapeError("product operator needs at least one factor");
}

ProductOperator ProductOperator::identity(const std::vector<Eigen::Index>& dims) {
    std::vector<OperatorFactor> f;
    for (auto d : dims)
        f.push_back(OperatorFactor::identity(d));
    return ProductOperator(std::move(f));
}

std::vector<Eigen::Index> ProductOperator::factor_dims() const {
    std::vector<Eigen::Index> dims;
    for (const auto& f : factors_)
        dims.push_back(f.dim);
    return dims;
}

Eigen::Index ProductOperator::dim() const {
    Eigen::Index d = 1;
    for (const auto& f : factors_)
        d *= f.dim;
    return factors_.empty() ? 0 : d;
}

bool ProductOperator::is_identity() const {
    return std::all_of(factors_.begin(), factors_.end(), [](const auto& f) { return f.is_identity(); });
}

Matrix ProductOperator::dense() const {
    if (factors_.empty())
        return Matrix();
    Matrix out = factors_.back().dense();
    for (auto it = factors_.rbegin() + 1; it != factors_.rend(); ++it)
        out = kron(it->dense(), out);
    return out;
}

ProductOperator ProductOperator::tensor_identity_left(Eigen::Index d) const {
    std::vector<OperatorFactor> f;
    f.reserve(factors_.size() + 1);
    f.push_back(OperatorFactor::identity(d));
    f.insert(f.end(), factors_.begin(), factors_.end());
    return ProductOperator(std::move(f));
}

bool operator==(const ProductOperator& a, const ProductOperator& b) { return a.factors_ == b.factors_; }

// ---------------------------------------------------------------------------

Complex sandwich(const ProductState& state, const ProductOperator& unitary, const ProductOperator& element) {
    const auto dims = state.factor_dims();
    if (state.dim() != unitary.dim() || state.dim() != element.dim())
        throw ShapeError("sandwich: dimension mismatch between state and operators");

    if (dims == unitary.factor_dims() && dims == element.factor_dims()) {
        Complex value = 1.0;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            const auto& m = element.factors()[k];
            // U 1 U^dagger = 1 on a unit factor
            if (m.is_identity())
                continue;
            const auto& w = state.factors()[k];
            const auto& u = unitary.factors()[k];
            Complex f = u.is_identity() ? w.dot(*m.matrix * w)
                                        : w.dot(*u.matrix * (*m.matrix * (u.matrix->adjoint() * w)));
            value *= f;
        }
        return value;
    }

    Vector v = state.dense();
    if (unitary.is_identity())
        return v.dot(element.dense() * v);
    Matrix u = unitary.dense();
    return v.dot(u * (element.dense() * (u.adjoint() * v)));
}

Complex inner_product(const ProductState& a, const ProductState& b) {
    if (a.dim() != b.dim())
        throw ShapeError("inner_product: dimension mismatch");
    if (a.factor_dims() == b.factor_dims()) {
        Complex value = 1.0;
        for (std::size_t k = 0; k < a.factors().size(); ++k)
            value *= a.factors()[k].dot(b.factors()[k]);
        return value;
    }
    return a.dense().dot(b.dense());
}

} // namespace qmenv
