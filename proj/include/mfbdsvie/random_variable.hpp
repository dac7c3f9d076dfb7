#pragma once

#include "mfbdsvie/lattice.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mfbdsvie {

/// Random variable on the lattice, stored as an exact value table over the
/// increments known to its sigma-field. The table has 2^(width*(a + N - b))
/// entries; bits [0, a*width) hold the known W increments and the bits above
/// them hold the known B increments, starting at step b.
class RandomVariable {
public:
    RandomVariable() = default;
    RandomVariable(const LatticeSpec& lattice, SigmaField field, std::vector<double> values);

    static RandomVariable constant(const LatticeSpec& lattice, double value);
    static RandomVariable constant(const LatticeSpec& lattice, SigmaField field, double value);
    static RandomVariable tabulate(const LatticeSpec& lattice, SigmaField field,
                                   const std::function<double(PathIndex)>& fn);

    const LatticeSpec& lattice() const noexcept { return lattice_; }
    SigmaField field() const noexcept { return field_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    double at(PathIndex path) const;
    std::size_t index_of(PathIndex path) const noexcept;
    /// Representative path of a table slot (unknown increments set to -inc).
    PathIndex path_of(std::size_t slot) const noexcept;

    RandomVariable& operator+=(const RandomVariable& other);
    RandomVariable& operator*=(double factor) noexcept;

private:
    LatticeSpec lattice_{};
    SigmaField field_{};
    std::vector<double> values_;
};

std::size_t table_size(const LatticeSpec& lattice, SigmaField field);
void check_field(const LatticeSpec& lattice, SigmaField field);

/// Re-expresses x on a finer field (values repeated over the new increments).
RandomVariable lift(const RandomVariable& x, SigmaField finer);

/// E[x | field] exactly: averages the increments of x unknown to `field`.
RandomVariable condexp(const RandomVariable& x, SigmaField field);

double expectation(const RandomVariable& x);

/// True when x does not vary in the increments unknown to `field`.
bool is_measurable(const RandomVariable& x, SigmaField field, double tol = 1e-12);

/// Returns x stored on `field`; MeasurabilityViolation if x depends on
/// increments that `field` does not know.
RandomVariable restrict_to(const RandomVariable& x, SigmaField field, double tol = 1e-12);

RandomVariable combine(const RandomVariable& a, const RandomVariable& b,
                       const std::function<double(double, double)>& op);
RandomVariable map_values(const RandomVariable& x, const std::function<double(double)>& op);

RandomVariable operator+(const RandomVariable& a, const RandomVariable& b);
RandomVariable operator-(const RandomVariable& a, const RandomVariable& b);
RandomVariable operator*(const RandomVariable& a, const RandomVariable& b);
RandomVariable operator*(double s, const RandomVariable& x);
RandomVariable operator+(const RandomVariable& x, double s);

/// Adds scale * x into acc in place; acc's field must refine x's.
void accumulate(RandomVariable& acc, const RandomVariable& x, double scale = 1.0);

double max_abs(const RandomVariable& x) noexcept;
double max_abs_diff(const RandomVariable& a, const RandomVariable& b);

// --- lattice primitives ------------------------------------------------------

/// Increment of the forward motion (copy `particle`) over step j.
RandomVariable w_increment(const LatticeSpec& lattice, int j, int particle = 0);
/// Increment of the backward motion (copy `particle`) over step j.
RandomVariable b_increment(const LatticeSpec& lattice, int j, int particle = 0);
RandomVariable w_walk(const LatticeSpec& lattice, int i, int particle = 0);
/// B(t_i) - B(0) restricted to steps [from, to): used for B(T) - B(t_i).
RandomVariable b_sum(const LatticeSpec& lattice, int from, int to, int particle = 0);

/// sum_{j in [j_lo, j_hi)} z[j - j_lo] * dW_j with z_j measurable w.r.t. F_{s_j}.
RandomVariable forward_integral(const LatticeSpec& lattice, std::span<const RandomVariable> z,
                                int j_lo, int j_hi, int particle = 0);

/// sum_{j in [j_lo, j_hi)} g[j - j_lo] * dB_j with g_j measurable w.r.t. F_{s_{j+1}}.
RandomVariable backward_integral(const LatticeSpec& lattice, std::span<const RandomVariable> g,
                                 int j_lo, int j_hi, int particle = 0);

/// Discrete Malliavin derivative in dW_j: (x|+inc - x|-inc) / (2 inc).
RandomVariable flip_derivative(const RandomVariable& x, int j, int particle = 0);

} // namespace mfbdsvie
