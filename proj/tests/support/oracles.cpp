#include "oracles.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/QR>

namespace oracle {

namespace {

Vector mat_vec(const Matrix& a, const Vector& v) {
    Vector out = Vector::Zero(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out(i) += a(i, j) * v(j);
    return out;
}

Vector adjoint_vec(const Matrix& a, const Vector& v) {
    Vector out = Vector::Zero(a.cols());
    for (Eigen::Index i = 0; i < a.cols(); ++i)
        for (Eigen::Index j = 0; j < a.rows(); ++j)
            out(i) += std::conj(a(j, i)) * v(j);
    return out;
}

Complex dot(const Vector& a, const Vector& b) {
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        acc += std::conj(a(i)) * b(i);
    return acc;
}

} // namespace

double direct_born(const Vector& s, const Matrix& u, const Matrix& m) {
    // <s|U M U^dag|s> = <U^dag s| M |U^dag s>
    Vector t = adjoint_vec(u, s);
    return dot(t, mat_vec(m, t)).real();
}

double direct_overlap(const Vector& a, const Vector& b) { return std::abs(dot(a, b)); }

double grid_helstrom_error(const Vector& s0, const Vector& s1, double p0, double p1, int points) {
    // Real coordinates of both states in an orthonormal basis of their span,
    // after removing a global phase from s1.
    Complex c = dot(s0, s1);
    double a = std::abs(c);
    double b = std::sqrt(std::max(0.0, 1.0 - a * a));
    // s0 = (1, 0), s1 = (a, b)
    double best = 1.0;
    for (int k = 0; k < points; ++k) {
        double phi = std::numbers::pi * k / points;
        double m0 = std::cos(phi), m1 = std::sin(phi);
        double hit0 = m0 * m0;                       // |<m|s0>|^2
        double hit1 = (m0 * a + m1 * b) * (m0 * a + m1 * b); // |<m|s1>|^2
        double err = p0 * (1.0 - hit0) + p1 * hit1;
        best = std::min(best, err);
    }
    return best;
}

double bb84_intercept_qber(double fraction) {
    const double h = 1.0 / std::sqrt(2.0);
    // basis 0 = Z, basis 1 = X; vec[basis][bit]
    const double vec[2][2][2] = {{{1, 0}, {0, 1}}, {{h, h}, {h, -h}}};
    auto amp = [&](int b1, int x1, int b2, int x2) {
        return vec[b1][x1][0] * vec[b2][x2][0] + vec[b1][x1][1] * vec[b2][x2][1];
    };
    double sifted = 0.0, errors = 0.0;
    for (int ab = 0; ab < 2; ++ab)
        for (int ax = 0; ax < 2; ++ax)
            for (int bb = 0; bb < 2; ++bb) {
                if (ab != bb)
                    continue;
                double w = 0.25 * 0.5; // Alice state, Bob basis
                // Eve passive
                double err_pass = 1.0 - amp(ab, ax, bb, ax) * amp(ab, ax, bb, ax);
                // Eve intercepts in basis eb, reads ex, resends it
                double err_att = 0.0;
                for (int eb = 0; eb < 2; ++eb)
                    for (int ex = 0; ex < 2; ++ex) {
                        double pe = amp(ab, ax, eb, ex) * amp(ab, ax, eb, ex);
                        double pwrong = amp(eb, ex, bb, 1 - ax) * amp(eb, ex, bb, 1 - ax);
                        err_att += 0.5 * pe * pwrong;
                    }
                sifted += w;
                errors += w * ((1.0 - fraction) * err_pass + fraction * err_att);
            }
    return errors / sifted;
}

double dkw_bound(std::size_t rows, std::size_t n_min) {
    return 3.0 * std::sqrt(std::log(2.0 * static_cast<double>(rows) / 0.01) / (2.0 * static_cast<double>(n_min)));
}

double binomial_sigma(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

Vector Random::state(Eigen::Index dim) {
    std::normal_distribution<double> g;
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        v(i) = Complex(g(gen_), g(gen_));
    return v / v.norm();
}

Matrix Random::unitary(Eigen::Index dim) {
    std::normal_distribution<double> g;
    Matrix z(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            z(i, j) = Complex(g(gen_), g(gen_));
    Eigen::HouseholderQR<Matrix> qr(z);
    return qr.householderQ() * Matrix::Identity(dim, dim);
}

std::vector<Matrix> Random::projective_povm(Eigen::Index dim, int outcomes) {
    Matrix u = unitary(dim);
    std::vector<Matrix> out(outcomes, Matrix::Zero(dim, dim));
    for (Eigen::Index i = 0; i < dim; ++i) {
        // first `outcomes` columns seed every block, the rest land anywhere
        int block = i < outcomes ? static_cast<int>(i) : uniform_int(0, outcomes - 1);
        out[block] += u.col(i) * u.col(i).adjoint();
    }
    return out;
}

int Random::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

double Random::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

qmenv::QMModel random_model(Random& rng, const RandomModelOptions& opts) {
    using namespace qmenv;
    int dim = rng.uniform_int(opts.min_dim, opts.max_dim);
    int n_alice = rng.uniform_int(opts.min_alice, opts.max_alice);
    std::vector<std::string> alice, eve;
    for (int i = 0; i < n_alice; ++i)
        alice.push_back("a" + std::to_string(i));
    for (int i = 0; i < opts.eve_commands; ++i)
        eve.push_back("e" + std::to_string(i));
    ModelParts parts;
    parts.commands = CommandSet::make(alice, {"b"}, eve);
    for (const auto& a : alice)
        parts.states[a] = ProductState(rng.state(dim));
    for (const auto& e : eve) {
        int k = rng.uniform_int(2, dim);
        auto elements = rng.projective_povm(dim, k);
        std::map<std::string, ProductOperator> m;
        for (int i = 0; i < k; ++i)
            m["o" + std::to_string(i)] = ProductOperator(elements[i]);
        parts.povms[{"b", e}] = Povm(std::move(m));
        if (opts.random_unitaries)
            for (const auto& a : alice)
                if (rng.uniform_int(0, 1))
                    parts.unitaries[{a, "b", e}] = ProductOperator(rng.unitary(dim));
    }
    return QMModel(std::move(parts));
}

} // namespace oracle
