#pragma once

// Two-dimensional chaos measures: the log-normal MRM kernel, the Gaussian
// free field on the disk B(0, R), dense field synthesis on square grids and
// the 2D scaling and KPZ checks.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mrm/fractal.hpp"
#include "mrm/gaussian.hpp"

namespace mrm {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// gamma2 (ln(R/l) + 2 (1 - sqrt(d/l))) for d <= l, gamma2 ln+(R/d) beyond.
double lognormal_kernel(Point2 x, Point2 y, double l, double gamma2, double R);

/// (2 + gamma2) q - gamma2 q^2 / 2.
double zeta2d(double gamma2, double q);

/// (2 + gamma2/2) q - gamma2 q^2 / 2, the exponent of E[M(B(0,lambda))^q] for
/// the normalized measure e^{X - E[X^2]/2} dx (zeta(1) = 2).
double zeta2d_mass_consistent(double gamma2, double q);

/// Green function of the disk: ln(|x - y*| |y| / (R |x - y|)), y* = R^2 y / |y|^2,
/// with the y = 0 limit ln(R / |x|).
double green_disk(Point2 x, Point2 y, double R);

/// E ln|U - V| for U, V independent uniform on the unit square.
inline constexpr double kUnitSquareLogMean = -0.805086721950087;

/// Mean of green_disk over pairs in the square cell of side h centred at x:
/// -ln h - kUnitSquareLogMean + ln((R^2 - |x|^2) / R), up to O(h^2).
double green_disk_cell_mean(Point2 x, double h, double R);

/// Max over probes of |Laplacian of green_disk(., y)| * R^2, estimated as
/// 4 (circle mean - centre value) / step^2 on a circle of radius step.
double green_harmonicity_residual(std::span<const Point2> probes, Point2 y, double R, double step);

enum class KernelKind : std::uint32_t { LognormalMrm = 0, GffDisk = 1 };

std::string_view to_string(KernelKind k);
KernelKind kernel_kind_from_string(std::string_view s);

struct Kernel2D {
    KernelKind kind = KernelKind::LognormalMrm;
    double gamma2 = 0.5;
    double R = 1.0;
    double l = 1.0 / 64;  ///< log-normal cutoff; unused by the GFF kernel

    /// Covariance of distinct points.
    double operator()(Point2 x, Point2 y) const;
    /// Variance of a grid cell of side h centred at x.
    double diagonal(Point2 x, double h) const;
};

/// gamma2 in [0, 4); R > 0; 0 < l <= R for the log-normal kernel.
void validate(const Kernel2D& k);

/// n x n cells of side h, lower-left corner (x0, y0); cell (i, j) has
/// index i + n j and centre (x0 + (i + 1/2) h, y0 + (j + 1/2) h).
struct Grid2D {
    double x0 = 0.0;
    double y0 = 0.0;
    double h = 1.0;
    std::size_t n = 0;

    std::size_t cells() const { return n * n; }
    Point2 centre(std::size_t index) const;
    double side() const { return h * static_cast<double>(n); }
};

Grid2D square_grid(double x0, double y0, double side, std::size_t n);

/// Cells whose centre lies strictly inside B(c, radius).
std::vector<std::uint8_t> disk_mask(const Grid2D& grid, Point2 c, double radius);

inline constexpr std::size_t kMaxExactGrid2D = 4096;

struct Field2D {
    Grid2D grid;
    Kernel2D kernel;
    std::uint64_t seed = 0;
    std::vector<double> values;       ///< 0 on masked-out cells
    std::vector<double> variances;    ///< Gram diagonal, 0 on masked-out cells
    std::vector<std::uint8_t> mask;   ///< 1 = active
};

struct Measure2D {
    Grid2D grid;
    std::vector<double> masses;  ///< e^{X - Var/2} h^2, 0 on masked-out cells

    double total() const;
};

/// Gram matrix of the kernel on points (cells of side h); symmetric by
/// construction. Rows are filled in parallel.
Eigen::MatrixXd gram_matrix(std::span<const Point2> points, const Kernel2D& kernel, double h,
                            unsigned threads = 1);

/// Mean-zero Gaussian field with the kernel's Gram matrix on the active
/// cells. The factorization is done once and shared by all draws.
class Field2DSampler {
  public:
    Field2DSampler(Grid2D grid, Kernel2D kernel, std::vector<std::uint8_t> mask = {},
                   unsigned threads = 1);

    const Grid2D& grid() const { return grid_; }
    const Kernel2D& kernel() const { return kernel_; }
    std::size_t active() const { return active_.size(); }
    const GaussianSampler& gaussian() const { return gauss_; }

    Field2D sample(std::uint64_t seed) const;
    /// Active-cell values, one column per seed.
    Eigen::MatrixXd sample_values(std::span<const std::uint64_t> seeds) const;
    /// Measure from one column of sample_values.
    Measure2D measure(const double* active_values) const;

  private:
    Grid2D grid_;
    Kernel2D kernel_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::size_t> active_;
    std::vector<double> variances_;
    GaussianSampler gauss_;
};

Field2D sample_field2d(const Grid2D& grid, const Kernel2D& kernel, std::uint64_t seed);
Measure2D build_measure2d(const Field2D& field);

struct Ball2DOptions {
    std::size_t n = 64;
    std::size_t bootstrap = 200;
    unsigned threads = 1;
    std::size_t batch = 64;
};

struct BallScalingReport {
    double gamma2 = 0.0;
    double lambda = 1.0;
    double q = 1.0;
    double lhs_mean = 0.0;  ///< E[M(B(0, lambda r))^q]
    double rhs_mean = 0.0;  ///< E[M(B(0, r))^q]
    double ratio = 1.0;
    double ratio_se = 0.0;
    double predicted = 1.0;  ///< lambda^{zeta2d(q)}
    double z = 0.0;
    bool pass = true;
    double predicted_mass_consistent = 1.0;  ///< lambda^{zeta2d_mass_consistent(q)}
    double z_mass_consistent = 0.0;
};

/// Ball masses at radius r = R/2 (all pairs within the correlation length R)
/// on an n x n grid over [-r, r]^2. The small ball is simulated with cutoff
/// lambda l on the lambda-scaled grid, so the comparison carries no
/// discretization bias. Needs lambda r >= 16 h.
BallScalingReport ball_mass_scaling_check(double gamma2, double R, double l, double lambda,
                                          double q, std::size_t replicas, std::uint64_t seed,
                                          const Ball2DOptions& options = {});

struct SandwichReport {
    double min_diff = 0.0;
    double max_diff = 0.0;
    bool finite = true;
    std::vector<double> distances;  ///< 2^{-k} R, k = 4..14
    std::vector<double> diffs;      ///< difference along the distances
    double cauchy_gap = 0.0;        ///< |diffs[last] - diffs[last-1]|
    bool cauchy = true;
    bool pass = true;
};

/// gamma2 green_disk - gamma2 ln+(R/d) over all pairs of an n x n grid inside
/// B(0, r + delta), and along a pair sequence with d = 2^{-k} R.
SandwichReport sandwich_check(double gamma2, double R, double r, double delta, std::size_t n);

struct Box2 {
    double x0, x1, y0, y1;
};

struct Set2D {
    std::vector<Box2> boxes;
    double delta0 = 2.0;
    std::string name;
};

/// Product of two Cantor sets in [0, side]^2: 4^depth squares.
Set2D make_cantor_dust(double ratio, int depth, double side = 1.0);
Set2D make_full_square(double side = 1.0);
/// Affine image of a set in [0,1]^2 onto [x0, x0 + side] x [y0, y0 + side].
Set2D place(const Set2D& unit_set, double x0, double y0, double side);

/// S_n(s) = sum over the level-n squares of the grid square meeting K of
/// (square mass)^s, one value per level. Level-n squares have side
/// side / base^n (dyadic for base 2) and must not be finer than a cell;
/// square masses integrate the cellwise-constant density exactly.
std::vector<double> measure_hausdorff_content(const Set2D& K, const Measure2D& M, double s,
                                              std::span<const int> levels, int base = 2);

struct CriticalExponent {
    double s = 0.0;
    double std_error = 0.0;
};

/// s where the OLS slope of ln S_n(s) against n changes sign, bisection
/// on [0, 2] to 1e-4. Throws NumericalError when [0, 2] does not bracket.
CriticalExponent critical_content_exponent(const Set2D& K, const Measure2D& M,
                                           std::span<const int> levels, int base = 2);

struct Kpz2DParams {
    KernelKind kind = KernelKind::LognormalMrm;
    double gamma2 = 0.5;
    double R = 1.0;
    double r = 0.8;  ///< GFF: K is placed in the square inscribed in B(0, r)
    double l = 0.0;  ///< log-normal cutoff; 0 means the grid spacing
    std::size_t n = 64;
    std::vector<int> levels = {1, 2, 3, 4, 5, 6};
    int base = 2;  ///< square hierarchy base; 3 matches triadic sets
    double tolerance = 0.1;
    unsigned threads = 1;
    std::size_t batch = 64;
};

/// Grid and kernel used by kpz_verify_2d: [0,R]^2 for the log-normal kernel,
/// the square inscribed in B(0,r) for the disk kernel.
std::pair<Grid2D, Kernel2D> kpz2d_setup(const Kpz2DParams& params);

/// K is given in [0,1]^2 and placed on the grid square of kpz2d_setup.
KpzReport kpz_verify_2d(const Set2D& unit_set, const Kpz2DParams& params, std::size_t replicas,
                        std::uint64_t seed);

/// Little-endian dump: magic "MRMF2D01", u64 n, u32 kind, u32 reserved,
/// f64 gamma2, R, l, u64 seed, f64 x0, y0, h, n^2 x f64 values, n^2 x f64 variances,
/// n^2 x u8 mask.
void write_field2d_binary(std::ostream& os, const Field2D& field);
Field2D read_field2d_binary(std::istream& is);

}  // namespace mrm
