#pragma once

// theta-calculus of the cone sets A_l(t) = {(s,y) : y >= l, |s - t| <= f(y)/2},
// f(y) = min(y, T), on the half-plane with intensity theta(ds, dy) = ds dy / y^2.

#include <span>

#include <Eigen/Dense>

namespace mrm {

struct ConeParams {
    double l = 1.0;  ///< resolution scale
    double T = 1.0;  ///< integral scale
};

void validate(const ConeParams& p);

/// Cone width profile f(y) = min(y, T).
inline double cone_width(double y, double T) { return y < T ? y : T; }

/// theta(A_l(t)): ln(T/l) + 1 for l <= T, T/l otherwise.
double cone_mass(const ConeParams& p);

/// theta(A_l(0) cap A_l(tau)) for l <= T; refuses l > T.
double cone_overlap(const ConeParams& p, double tau);

/// theta(A_lo(0) cap A_lo(tau)) - theta(A_hi(0) cap A_hi(tau)): the mass of the
/// overlap restricted to the band lo <= y < hi (lo <= hi <= T).
double band_overlap(double lo, double hi, double T, double tau);

bool point_in_cone(double s, double y, double t, const ConeParams& p);

/// C[i][j] = sigma2 * cone_overlap(p, |t_i - t_j|).
Eigen::MatrixXd overlap_covariance_matrix(std::span<const double> grid, const ConeParams& p,
                                          double sigma2);

/// Independent check of cone_overlap: nested adaptive quadrature of the
/// indicator of the intersection against theta (no closed forms involved).
double cone_overlap_quadrature(const ConeParams& p, double tau);

}  // namespace mrm
