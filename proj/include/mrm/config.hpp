#pragma once

// Sectioned key = value experiment configuration.
//
//   [model]   kind, sigma2, m, normalize, jumps, atoms, jump_*, gamma2, R, r
//   [grid]    T, l, length, resolution, n
//   [set]     kind, ratio, depth, points
//   [run]     replicas, seed, q, scales, lambda, tolerance, levels, base,
//             bootstrap, threads, batch, dumps, blocks, method
//   [output]  dir, formats
//
// Lists are comma separated; numbers accept a/b and b^e forms. Lines
// starting with '#' or ';' are comments.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrm/chaos2d.hpp"
#include "mrm/errors.hpp"
#include "mrm/field.hpp"
#include "mrm/levy.hpp"

namespace mrm {

/// Every problem found in a config, one message per entry.
class ConfigError : public ValidationError {
  public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

  private:
    std::vector<std::string> issues_;
};

enum class ModelKind { Levy1D, Lognormal2D, Gff2D };

enum class SetChoice { None, Cantor, FullInterval, Points, CantorDust, FullSquare };

struct ExperimentConfig {
    std::string text;  ///< original config text
    std::uint64_t hash = 0;

    struct Model {
        ModelKind kind = ModelKind::Levy1D;
        LevyTriple triple = lognormal(0.0);
        double gamma2 = 0.5;
        double R = 1.0;
        double r = 0.8;
    } model;

    struct Grid {
        double T = 1.0;
        double l = 1.0 / 1024;
        bool l_set = false;  ///< 2D models default l to the grid spacing
        double length = 1.0;
        double resolution = 4.0;
        std::size_t n = 64;
    } grid;

    struct Set {
        SetChoice kind = SetChoice::None;
        double ratio = 1.0 / 3;
        int depth = 12;
        std::vector<double> points;
    } set;

    struct Run {
        std::size_t replicas = 100;
        std::uint64_t seed = 1;
        std::vector<double> q = {0.0, 0.5, 1.0};
        std::vector<double> scales;
        std::vector<double> lambda = {0.5};
        std::optional<double> tolerance;
        std::vector<int> levels;
        int base = 2;
        std::size_t bootstrap = 200;
        unsigned threads = 1;
        std::size_t batch = 64;
        std::size_t dumps = 1;
        std::size_t blocks = 1;  ///< moment windows per replica
        std::optional<FieldMethod> method;
    } run;

    struct Output {
        std::string dir = "out";
        std::vector<std::string> formats = {"csv"};
    } output;

    ConeParams cone() const { return {grid.l, grid.T}; }
    bool wants(std::string_view format) const;
};

/// Parses and validates. Throws ConfigError listing every issue.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Parses one number token: decimal, a/b or b^e.
double parse_number(std::string_view token);

/// [model] section describing a serializable triple (no jumps, atoms or a
/// power-exponential family); throws ValidationError for other densities.
std::string triple_to_config(const LevyTriple& triple);
/// Triple from a config text holding a [model] section.
LevyTriple triple_from_config(std::string_view text);

}  // namespace mrm
