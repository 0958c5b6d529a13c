#pragma once

#include <optional>
#include <vector>

#include "mixkinetics/common.hpp"

namespace mixkinetics {

enum class AngularLaw { constant, grad_cutoff };

// Species count, masses, collision-kernel data and Maxwell-Stefan friction
// coefficients. Symmetry of C^Phi and Delta is assumption (H1).
struct MixtureSpec {
    int n_species = 0;
    std::vector<double> masses;        // m_i > 0
    double gamma = 0.0;                // kinetic exponent, [0,1]
    std::vector<double> phi_coeff;     // C^Phi_ij, row-major N x N
    AngularLaw angular_law = AngularLaw::constant;
    double angular_scale = 1.0;        // multiplies the normalized b law
    std::vector<double> delta;         // Delta_ij, row-major N x N (diagonal unused)
    std::vector<double> c_inf;         // equilibrium number densities

    double cphi(int i, int j) const { return phi_coeff[i * n_species + j]; }
    double dij(int i, int j) const { return delta[i * n_species + j]; }

    void validate() const {
        const int N = n_species;
        if (N < 1) throw ConfigError("n_species must be >= 1");
        if (static_cast<int>(masses.size()) != N || static_cast<int>(c_inf.size()) != N)
            throw ConfigError("masses/c_inf size mismatch");
        if (static_cast<int>(phi_coeff.size()) != N * N || static_cast<int>(delta.size()) != N * N)
            throw ConfigError("phi_coeff/delta size mismatch");
        if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in [0,1]");
        for (int i = 0; i < N; ++i) {
            if (masses[i] <= 0.0) throw ConfigError("masses must be positive");
            if (c_inf[i] <= 0.0) throw ConfigError("c_inf must be positive");
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                if (cphi(i, j) <= 0.0) throw ConfigError("phi_coeff must be positive");
                if (std::abs(cphi(i, j) - cphi(j, i)) > 1e-14 * std::abs(cphi(i, j)))
                    throw ConfigError("phi_coeff must be symmetric");
                if (i != j) {
                    if (dij(i, j) <= 0.0) throw ConfigError("delta must be positive");
                    if (std::abs(dij(i, j) - dij(j, i)) > 1e-14 * std::abs(dij(i, j)))
                        throw ConfigError("delta must be symmetric");
                }
            }
    }

    // v_max so that exp(-m v^2/2) < 1e-10 for the lightest species
    double default_v_max() const {
        double mmin = masses[0];
        for (double m : masses) mmin = std::min(mmin, m);
        return std::sqrt(2.0 * std::log(1e10) / mmin);
    }
};

// Periodic 1-axis spatial grid (torus) times a truncated uniform Cartesian
// velocity lattice in d dimensions.
struct PhaseGrid {
    int dim = 2;            // velocity dimension d in {2,3}
    int nx = 1;             // spatial points (1 axis)
    double lx = 2.0 * M_PI; // torus length
    int nv = 24;            // velocity points per axis
    double v_max = 0.0;     // lattice spans [-v_max, v_max]^d
    double active_exponent = 40.0;  // node active iff m|v|^2/2 <= active_exponent

    void validate() const {
        if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
        if (nv < 8) throw ConfigError("nv must be >= 8");
        if (nx < 1) throw ConfigError("nx must be >= 1");
        if (v_max <= 0.0) throw ConfigError("v_max must be positive");
        if (lx <= 0.0) throw ConfigError("lx must be positive");
    }

    double h() const { return 2.0 * v_max / (nv - 1); }
    double dx() const { return lx / nx; }
    // symmetric placement: vnode(a) = -vnode(nv-1-a) exactly
    double vnode(int a) const { return (a - 0.5 * (nv - 1)) * h(); }

    int n_vel() const {
        int n = nv;
        for (int k = 1; k < dim; ++k) n *= nv;
        return n;
    }

    // quadrature weight per velocity node (midpoint rule on the open lattice)
    double wv() const {
        double w = h();
        for (int k = 1; k < dim; ++k) w *= h();
        return w;
    }

    Vec3 velocity(int iv) const {
        Vec3 v{0, 0, 0};
        if (dim == 2) {
            v[0] = vnode(iv / nv);
            v[1] = vnode(iv % nv);
        } else {
            v[0] = vnode(iv / (nv * nv));
            v[1] = vnode((iv / nv) % nv);
            v[2] = vnode(iv % nv);
        }
        return v;
    }

    double speed2(int iv) const {
        Vec3 v = velocity(iv);
        return dot(v, v, dim);
    }

    bool same_as(const PhaseGrid& o) const {
        return dim == o.dim && nx == o.nx && nv == o.nv && lx == o.lx && v_max == o.v_max;
    }
};

// F_i(x, v) for all species; the central state object.
struct DistributionField {
    const MixtureSpec* spec = nullptr;
    const PhaseGrid* grid = nullptr;
    std::vector<double> values;  // [(s*nx + ix)*n_vel + iv]

    DistributionField() = default;
    DistributionField(const MixtureSpec& s, const PhaseGrid& g)
        : spec(&s), grid(&g), values(static_cast<std::size_t>(s.n_species) * g.nx * g.n_vel(), 0.0) {}

    double* slab(int s, int ix) {
        return values.data() + (static_cast<std::size_t>(s) * grid->nx + ix) * grid->n_vel();
    }
    const double* slab(int s, int ix) const {
        return values.data() + (static_cast<std::size_t>(s) * grid->nx + ix) * grid->n_vel();
    }
    double& at(int s, int ix, int iv) { return slab(s, ix)[iv]; }
    double at(int s, int ix, int iv) const { return slab(s, ix)[iv]; }

    bool nonnegative() const {
        for (double v : values)
            if (v < 0.0) return false;
        return true;
    }
    bool finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    DistributionField& operator+=(const DistributionField& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    DistributionField& operator-=(const DistributionField& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    DistributionField& operator*=(double a) {
        for (double& v : values) v *= a;
        return *this;
    }
    void axpy(double a, const DistributionField& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += a * o.values[i];
    }
};

// Per-species concentration and velocity plus the shared temperature; the
// optional split realizes c = c_inf + eps*c~, u = ubar + eps*u~.
struct MacroField {
    int n_species = 0;
    int nx = 0;
    int dim = 2;
    std::vector<double> c;   // [s*nx + ix]
    std::vector<double> u;   // [(s*nx + ix)*dim + k]
    double theta = 1.0;

    struct Split {
        std::vector<double> c_inf;    // per species
        std::vector<double> c_tilde;  // [s*nx+ix]
        std::vector<double> u_bar;    // [ix*dim+k]
        std::vector<double> u_tilde;  // [(s*nx+ix)*dim+k]
        double epsilon = 0.0;
    };
    std::optional<Split> split;

    MacroField() = default;
    MacroField(int N, int nx_, int d)
        : n_species(N), nx(nx_), dim(d), c(static_cast<std::size_t>(N) * nx_, 0.0),
          u(static_cast<std::size_t>(N) * nx_ * d, 0.0) {}

    double& cval(int s, int ix) { return c[static_cast<std::size_t>(s) * nx + ix]; }
    double cval(int s, int ix) const { return c[static_cast<std::size_t>(s) * nx + ix]; }
    double& uval(int s, int ix, int k) {
        return u[(static_cast<std::size_t>(s) * nx + ix) * dim + k];
    }
    double uval(int s, int ix, int k) const {
        return u[(static_cast<std::size_t>(s) * nx + ix) * dim + k];
    }

    bool positive_c() const {
        for (double v : c)
            if (v <= 0.0) return false;
        return true;
    }

    // max relative mismatch between stored (c,u) and the reassembled split
    double split_residual() const {
        if (!split) return 0.0;
        const Split& sp = *split;
        double worst = 0.0;
        for (int s = 0; s < n_species; ++s)
            for (int ix = 0; ix < nx; ++ix) {
                double cr = sp.c_inf[s] + sp.epsilon * sp.c_tilde[static_cast<std::size_t>(s) * nx + ix];
                worst = std::max(worst, std::abs(cr - cval(s, ix)) / std::max(1.0, std::abs(cval(s, ix))));
                for (int k = 0; k < dim; ++k) {
                    double ur = sp.u_bar[static_cast<std::size_t>(ix) * dim + k] +
                                sp.epsilon * sp.u_tilde[(static_cast<std::size_t>(s) * nx + ix) * dim + k];
                    worst = std::max(worst, std::abs(ur - uval(s, ix, k)) / std::max(1.0, std::abs(uval(s, ix, k))));
                }
            }
        return worst;
    }
};

}  // namespace mixkinetics
