#pragma once

#include "magcal/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace magcal {

/// Coefficients of A x^2 + B y^2 + C z^2 + 2D xy + 2E xz + 2F yz + 2G x + 2H y + 2I z = 1.
struct QuadricCoefficients {
    double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0, G = 0, H = 0, I = 0;

    Mat3 quadratic() const {
        Mat3 q;
        q << A, D, E, D, B, F, E, F, C;
        return q;
    }
    Vec3 linear() const { return {G, H, I}; }

    std::array<double, 9> as_array() const { return {A, B, C, D, E, F, G, H, I}; }
    static QuadricCoefficients from_array(std::span<const double, 9> c) {
        return {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8]};
    }
};

/// Algebraic residual of `p` against the quadric (zero on the surface).
inline double algebraic_residual(const QuadricCoefficients& q, const Vec3& p) {
    const double x = p.x(), y = p.y(), z = p.z();
    return q.A * x * x + q.B * y * y + q.C * z * z + 2 * q.D * x * y + 2 * q.E * x * z +
           2 * q.F * y * z + 2 * q.G * x + 2 * q.H * y + 2 * q.I * z - 1.0;
}

/// Nine-parameter ellipsoid: center, semi-axes and principal-axis rotation.
/// Canonical form: semi_axes descending, rotation proper (det +1) with the
/// largest-magnitude entry of each column positive (last column excepted when
/// it had to be flipped to fix the determinant).
struct EllipsoidParams {
    Vec3 center = Vec3::Zero();
    Vec3 semi_axes = Vec3::Ones();
    Mat3 rotation = Mat3::Identity();  // columns are the principal axes

    /// Point on the surface for the unit direction `u` of the reference sphere.
    Vec3 surface_point(const Vec3& u) const {
        return center + rotation * semi_axes.cwiseProduct(u);
    }

    /// Z-Y-X Euler angles (yaw, pitch, roll) of `rotation`.
    Vec3 euler_angles() const { return rotation.eulerAngles(2, 1, 0); }

    /// Shape matrix R diag(1/a^2) R^T; surface is (p-c)^T K (p-c) = 1.
    Mat3 shape_matrix() const {
        const Vec3 inv_sq = semi_axes.cwiseProduct(semi_axes).cwiseInverse();
        return rotation * inv_sq.asDiagonal() * rotation.transpose();
    }
};

/// Forward map from ellipsoid parameters to the =1-normalized quadric.
/// Requires the origin to lie strictly inside the ellipsoid.
inline QuadricCoefficients to_quadric(const EllipsoidParams& e) {
    const Mat3 k = e.shape_matrix();
    const Vec3 kc = k * e.center;
    const double rhs = 1.0 - e.center.dot(kc);
    if (!(rhs > 0.0))
        throw numeric_error("ellipsoid does not enclose the origin; =1 quadric form undefined");
    const Mat3 q = k / rhs;
    const Vec3 g = -kc / rhs;
    return {q(0, 0), q(1, 1), q(2, 2), q(0, 1), q(0, 2), q(1, 2), g.x(), g.y(), g.z()};
}

namespace detail {

inline void canonicalize_rotation(Mat3& r) {
    for (int c = 0; c < 3; ++c) {
        Eigen::Index idx = 0;
        r.col(c).cwiseAbs().maxCoeff(&idx);
        if (r(idx, c) < 0) r.col(c) = -r.col(c);
    }
    if (r.determinant() < 0) r.col(2) = -r.col(2);
}

// Least-squares accumulator over the augmented system [X | 1]. Rows are folded
// into a 10x10 triangular factor block by block, so memory stays constant and
// the result depends only on the input order.
class QuadricLeastSquares {
public:
    static constexpr Eigen::Index kCols = 10;
    static constexpr Eigen::Index kBlock = 4096;

    void add(const Vec3& u) {
        const double x = u.x(), y = u.y(), z = u.z();
        auto row = block_.row(fill_);
        row << x * x, y * y, z * z, 2 * x * y, 2 * x * z, 2 * y * z, 2 * x, 2 * y, 2 * z, 1.0;
        if (++fill_ == kBlock) flush();
        ++rows_;
    }

    std::size_t rows() const { return rows_; }

    /// Upper-triangular R of the QR factorization of [X | 1].
    Eigen::Matrix<double, kCols, kCols> factor() {
        flush();
        return r_;
    }

private:
    void flush() {
        if (fill_ == 0) return;
        Eigen::MatrixXd stacked(kCols + fill_, kCols);
        stacked.topRows(kCols) = r_;
        stacked.bottomRows(fill_) = block_.topRows(fill_);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
        r_ = qr.matrixQR().topRows(kCols).template triangularView<Eigen::Upper>();
        fill_ = 0;
    }

    Eigen::Matrix<double, kCols, kCols> r_ = Eigen::Matrix<double, kCols, kCols>::Zero();
    Eigen::MatrixXd block_ = Eigen::MatrixXd(kBlock, kCols);
    Eigen::Index fill_ = 0;
    std::size_t rows_ = 0;
};

}  // namespace detail

/// Rank threshold: smallest / largest singular value of the design matrix.
inline constexpr double kRankTolerance = 1e-10;

/// Least-squares fit of the algebraic quadric to `points`, minimizing the sum
/// of squared algebraic residuals. Points are rescaled to unit RMS radius
/// before factorization and the coefficients mapped back afterwards.
inline QuadricCoefficients fit_quadric(std::span<const Vec3> points) {
    if (points.size() < 9) throw argument_error("quadric fit needs at least 9 points");
    double sq = 0.0;
    for (const auto& p : points) {
        if (!is_finite(p)) throw argument_error("non-finite point in quadric fit");
        sq += p.squaredNorm();
    }
    const double scale = std::sqrt(sq / static_cast<double>(points.size()));
    if (!(scale > 0.0)) throw numeric_error("quadric fit: all points at the origin");

    detail::QuadricLeastSquares ls;
    const double inv = 1.0 / scale;
    for (const auto& p : points) ls.add(p * inv);
    const auto r = ls.factor();

    const Eigen::Matrix<double, 9, 9> r9 = r.topLeftCorner<9, 9>();
    const Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(r9);
    const auto& sv = svd.singularValues();
    if (!(sv(8) >= kRankTolerance * sv(0)))
        throw numeric_error("quadric fit: design matrix is rank deficient (degenerate geometry)");

    const Eigen::Matrix<double, 9, 1> coeff =
        r9.triangularView<Eigen::Upper>().solve(r.col(9).head<9>());

    QuadricCoefficients q;
    const double s2 = inv * inv;
    q.A = coeff(0) * s2;
    q.B = coeff(1) * s2;
    q.C = coeff(2) * s2;
    q.D = coeff(3) * s2;
    q.E = coeff(4) * s2;
    q.F = coeff(5) * s2;
    q.G = coeff(6) * inv;
    q.H = coeff(7) * inv;
    q.I = coeff(8) * inv;

    const Eigen::SelfAdjointEigenSolver<Mat3> eig(q.quadratic(), Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues()(0) > 0.0))
        throw numeric_error("quadric fit: quadratic form is not positive definite; points do not "
                            "bound an ellipsoid");
    return q;
}

inline QuadricCoefficients fit_quadric(const SampleSeries& series) {
    std::vector<Vec3> pts;
    pts.reserve(series.size());
    for (const auto& s : series.samples) pts.push_back(s.b);
    return fit_quadric(std::span<const Vec3>(pts));
}

/// Center, semi-axes and orientation of the ellipsoid described by `q`.
inline EllipsoidParams extract_ellipsoid(const QuadricCoefficients& q) {
    const Mat3 quad = q.quadratic();
    const Eigen::LLT<Mat3> llt(quad);
    if (llt.info() != Eigen::Success)
        throw numeric_error("extract_ellipsoid: quadratic form is not positive definite");

    EllipsoidParams e;
    e.center = -llt.solve(q.linear());
    // (p-c)^T Q (p-c) = 1 - g.c after completing the square.
    const double s = 1.0 - q.linear().dot(e.center);
    if (!(s > 0.0)) throw numeric_error("extract_ellipsoid: non-positive scale after centering");

    const Eigen::SelfAdjointEigenSolver<Mat3> eig(quad / s);
    if (eig.info() != Eigen::Success) throw numeric_error("extract_ellipsoid: eigensolver failed");
    const Vec3 lambda = eig.eigenvalues();  // ascending, so semi-axes come out descending
    if (!(lambda(0) > 0.0))
        throw numeric_error("extract_ellipsoid: quadratic form is not positive definite");
    e.semi_axes = lambda.cwiseSqrt().cwiseInverse();
    e.rotation = eig.eigenvectors();
    detail::canonicalize_rotation(e.rotation);
    return e;
}

}  // namespace magcal
