#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace qmenv {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Every numeric tolerance used by invariant checks, in one place.
struct Tolerances {
    double state_norm = 1e-10;
    double unitary = 1e-10;
    double hermitian = 1e-10;
    double psd = 1e-10;
    double completeness = 1e-9;
    double row_sum = 1e-9;
    double imag_residue = 1e-10;
    double overlap = 1e-10;
    double prior_sum = 1e-12;
};

inline constexpr Tolerances kTolerances{};

Vector kron(const Vector& a, const Vector& b);
Matrix kron(const Matrix& a, const Matrix& b);

Matrix projector(const Vector& v);
Vector basis_vector(Eigen::Index dim, Eigen::Index i);

/// max |A_ij|
double max_abs(const Matrix& m);
/// max |A - A^dagger| entrywise
double hermitian_deviation(const Matrix& m);
/// max |U U^dagger - I| entrywise
double unitary_deviation(const Matrix& m);
/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const Matrix& m);

/// Moore-Penrose inverse square root of a Hermitian PSD matrix; eigenvalues
/// at or below `cutoff` are treated as zero.
Matrix pinv_sqrt_psd(const Matrix& m, double cutoff = 1e-12);
/// Projector onto the span of eigenvectors with eigenvalue above `cutoff`.
Matrix support_projector(const Matrix& m, double cutoff = 1e-12);

/// Unit vector held as a tensor product of factors, outermost factor first.
/// A plain state is a single factor.
class ProductState {
  public:
    ProductState() = default;
    ProductState(Vector v); // NOLINT: implicit from a dense vector is intended
    explicit ProductState(std::vector<Vector> factors);

    const std::vector<Vector>& factors() const noexcept { return factors_; }
    std::vector<Eigen::Index> factor_dims() const;
    Eigen::Index dim() const;
    Vector dense() const;

    /// Prepend a factor: |w> (x) |this>.
    ProductState tensor_left(const Vector& w) const;

    friend bool operator==(const ProductState& a, const ProductState& b);

  private:
    std::vector<Vector> factors_;
};

/// A factor of a product operator: either an explicit matrix or the identity
/// on a space of the given dimension.
struct OperatorFactor {
    Eigen::Index dim = 1;
    std::optional<Matrix> matrix;

    bool is_identity() const noexcept { return !matrix.has_value(); }
    Matrix dense() const;

    static OperatorFactor identity(Eigen::Index d) { return {d, std::nullopt}; }
    static OperatorFactor explicit_matrix(Matrix m);

    friend bool operator==(const OperatorFactor& a, const OperatorFactor& b);
};

class ProductOperator {
  public:
    ProductOperator() = default;
    ProductOperator(Matrix m); // NOLINT
    explicit ProductOperator(std::vector<OperatorFactor> factors);

    static ProductOperator identity(const std::vector<Eigen::Index>& dims);

    const std::vector<OperatorFactor>& factors() const noexcept { return factors_; }
    std::vector<Eigen::Index> factor_dims() const;
    Eigen::Index dim() const;
    bool is_identity() const;
    Matrix dense() const;

    /// Prepend an identity factor: 1_d (x) this.
    ProductOperator tensor_identity_left(Eigen::Index d) const;

    friend bool operator==(const ProductOperator& a, const ProductOperator& b);

  private:
    std::vector<OperatorFactor> factors_;
};

/// <state| U M U^dagger |state>, evaluated factor by factor when the three
/// operands share a factor structure. Identity factors on a unit factor
/// contribute exactly 1. Returns the complex value; callers check the
/// imaginary residue.
Complex sandwich(const ProductState& state, const ProductOperator& unitary, const ProductOperator& element);

/// <a|b> for two product states of the same total dimension.
Complex inner_product(const ProductState& a, const ProductState& b);

} // namespace qmenv
