#pragma once

#include "mfbdsvie/random_variable.hpp"

#include <iosfwd>
#include <vector>

namespace mfbdsvie {

/// Y(t_i), i = 0..N; entry i is F_{t_i}-measurable.
struct AdaptedPath {
    LatticeSpec lattice;
    std::vector<RandomVariable> y;

    static AdaptedPath zeros(const LatticeSpec& lattice);
    int n_steps() const noexcept { return lattice.n_steps; }
    RandomVariable& operator[](int i) { return y[static_cast<std::size_t>(i)]; }
    const RandomVariable& operator[](int i) const { return y[static_cast<std::size_t>(i)]; }
};

/// Z(t_i, s_j) for i in [0, N], j in [0, N). Entry (i, j) is F_{s_j}-measurable
/// on both triangles: j >= i is the equation's own kernel (Delta), j < i is
/// the martingale-representation extension (Delta^c).
struct VolterraKernel {
    LatticeSpec lattice;
    std::vector<RandomVariable> z;  // row-major, (N + 1) x N

    static VolterraKernel zeros(const LatticeSpec& lattice);
    RandomVariable& at(int i, int j) { return z[index(i, j)]; }
    const RandomVariable& at(int i, int j) const { return z[index(i, j)]; }

private:
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(lattice.n_steps) + static_cast<std::size_t>(j);
    }
};

struct BetaWeight {
    double beta;
    explicit BetaWeight(double b);
};

/// Fills Z on Delta^c with Z(t_i, s_j) = E[Y(t_i) dW_j | F_{s_j}] / dt, j < i,
/// keeping the Delta entries of z_delta. `particle` selects the W copy on a
/// joint lattice.
VolterraKernel m_extend(const AdaptedPath& y, const VolterraKernel& z_delta, int particle = 0);

/// sqrt( sum_i e^{beta t_i} E[Y_i^2] dt + sum_i sum_{j>=i} e^{beta s_j} E[Z_ij^2] dt^2 )
double m_beta_norm(const AdaptedPath& y, const VolterraKernel& z, BetaWeight w);
/// Same weights with the kernel summed over the whole square.
double l_beta_norm(const AdaptedPath& y, const VolterraKernel& z, BetaWeight w);

/// max over i and paths of |Y_i - E[Y_i | F_0] - sum_{j<i} Z_ij dW_j|.
double m_identity_residual(const AdaptedPath& y, const VolterraKernel& z, int particle = 0);

/// Largest deviation of any kernel entry from F_{s_j}-measurability and of
/// any path entry from F_{t_i}-measurability (0 when stored on those fields).
double measurability_defect(const AdaptedPath& y, const VolterraKernel& z);

AdaptedPath difference(const AdaptedPath& a, const AdaptedPath& b);
VolterraKernel difference(const VolterraKernel& a, const VolterraKernel& b);
double max_abs_diff(const AdaptedPath& a, const AdaptedPath& b);
double max_abs_diff_delta(const VolterraKernel& a, const VolterraKernel& b);

/// CSV dumps: (i, path_code, value) and (i, j, path_code, value). path_code is
/// the slot in the entry's own table.
void write_path_csv(std::ostream& os, const AdaptedPath& y);
void write_kernel_csv(std::ostream& os, const VolterraKernel& z);

} // namespace mfbdsvie
