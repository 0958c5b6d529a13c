#pragma once

#include "mixkinetics/mixture.hpp"

namespace mixkinetics {

// Unit-density Maxwellian shape (m/2pi theta)^{d/2} exp(-m|v|^2 / 2 theta),
// tabulated on the lattice. Nodes outside the active disc (m|v|^2/2 > active
// exponent) are zeroed; they carry no resolvable mass at double precision.
inline std::vector<double> maxwell_shape(const MixtureSpec& spec, const PhaseGrid& grid, int s,
                                         double theta = 1.0) {
    const double m = spec.masses[s];
    const int nvd = grid.n_vel();
    std::vector<double> out(nvd);
    const double pref = std::pow(m / (2.0 * M_PI * theta), grid.dim / 2.0);
    for (int iv = 0; iv < nvd; ++iv) {
        double e = m * grid.speed2(iv) / (2.0 * theta);
        out[iv] = (m * grid.speed2(iv) / 2.0 <= grid.active_exponent) ? pref * std::exp(-e) : 0.0;
    }
    return out;
}

inline std::vector<char> active_mask(const MixtureSpec& spec, const PhaseGrid& grid, int s) {
    const double m = spec.masses[s];
    const int nvd = grid.n_vel();
    std::vector<char> out(nvd);
    for (int iv = 0; iv < nvd; ++iv)
        out[iv] = (m * grid.speed2(iv) / 2.0 <= grid.active_exponent) ? 1 : 0;
    return out;
}

// mu_i(v) = c_{i,inf} (m_i/2pi)^{d/2} exp(-m_i |v|^2 / 2), constant in x
inline DistributionField global_maxwellian(const MixtureSpec& spec, const PhaseGrid& grid) {
    DistributionField F(spec, grid);
    for (int s = 0; s < spec.n_species; ++s) {
        auto shape = maxwell_shape(spec, grid, s);
        for (int ix = 0; ix < grid.nx; ++ix) {
            double* f = F.slab(s, ix);
            for (int iv = 0; iv < grid.n_vel(); ++iv) f[iv] = spec.c_inf[s] * shape[iv];
        }
    }
    return F;
}

// M^eps_i(x,v) = c_i(x) (m_i/2pi theta)^{d/2} exp(-m_i |v - eps u_i(x)|^2 / 2 theta)
inline DistributionField local_maxwellian(const MixtureSpec& spec, const PhaseGrid& grid,
                                          const MacroField& macro, double epsilon) {
    if (!macro.positive_c()) throw NonPositiveDensity("local_maxwellian: c_i <= 0");
    DistributionField F(spec, grid);
    const double theta = macro.theta;
    for (int s = 0; s < spec.n_species; ++s) {
        const double m = spec.masses[s];
        const double pref = std::pow(m / (2.0 * M_PI * theta), grid.dim / 2.0);
        for (int ix = 0; ix < grid.nx; ++ix) {
            double* f = F.slab(s, ix);
            for (int iv = 0; iv < grid.n_vel(); ++iv) {
                if (m * grid.speed2(iv) / 2.0 > grid.active_exponent) {
                    f[iv] = 0.0;
                    continue;
                }
                Vec3 v = grid.velocity(iv);
                double e = 0;
                for (int k = 0; k < grid.dim; ++k) {
                    double dv = v[k] - epsilon * macro.uval(s, ix, k);
                    e += dv * dv;
                }
                f[iv] = macro.cval(s, ix) * pref * std::exp(-m * e / (2.0 * theta));
            }
        }
    }
    return F;
}

// Velocity moments: per-species density and bulk velocity, plus the mixture
// temperature from the x-integrated energy.
inline MacroField moments(const DistributionField& F) {
    const MixtureSpec& spec = *F.spec;
    const PhaseGrid& grid = *F.grid;
    MacroField mac(spec.n_species, grid.nx, grid.dim);
    const double wv = grid.wv();
    const int nvd = grid.n_vel();

    // mixture totals over x for u_inf and theta
    Vec3 mom_tot{0, 0, 0};
    double rho_tot = 0.0;
    for (int s = 0; s < spec.n_species; ++s) {
        const double m = spec.masses[s];
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double* f = F.slab(s, ix);
            double c = 0;
            Vec3 mom{0, 0, 0};
            for (int iv = 0; iv < nvd; ++iv) {
                double fv = f[iv];
                c += fv;
                Vec3 v = grid.velocity(iv);
                for (int k = 0; k < grid.dim; ++k) mom[k] += v[k] * fv;
            }
            c *= wv;
            mac.cval(s, ix) = c;
            for (int k = 0; k < grid.dim; ++k) {
                mac.uval(s, ix, k) = (c != 0.0) ? mom[k] * wv / c : 0.0;
                mom_tot[k] += m * mom[k] * wv * grid.dx();
            }
            rho_tot += m * c * grid.dx();
        }
    }
    Vec3 u_inf{0, 0, 0};
    if (rho_tot > 0)
        for (int k = 0; k < grid.dim; ++k) u_inf[k] = mom_tot[k] / rho_tot;
    double e_int = 0.0;
    double ctot = 0.0;
    for (int s = 0; s < spec.n_species; ++s) {
        const double m = spec.masses[s];
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double* f = F.slab(s, ix);
            for (int iv = 0; iv < nvd; ++iv) {
                Vec3 v = grid.velocity(iv);
                double e = 0;
                for (int k = 0; k < grid.dim; ++k) {
                    double dv = v[k] - u_inf[k];
                    e += dv * dv;
                }
                e_int += 0.5 * m * e * f[iv] * wv * grid.dx();
            }
            ctot += mac.cval(s, ix) * grid.dx();
        }
    }
    // number-weighted mixture temperature: (d/2) (sum_i c_i) theta = E_int
    mac.theta = (ctot > 0) ? 2.0 * e_int / (grid.dim * ctot) : 1.0;
    return mac;
}

enum class WeightKind { mu_inv, mu_inv_bracket_gamma };

// <f,g> = sum_i sum_{x,v} f_i g_i w_i(v) dx dv with w = mu_i^{-1} or <v>^gamma mu_i^{-1}.
// Inactive nodes (where mu is flushed to zero) are excluded from the sum.
inline double weighted_inner_product(const DistributionField& f, const DistributionField& g,
                                     WeightKind kind = WeightKind::mu_inv) {
    if (!f.grid->same_as(*g.grid)) throw GridMismatch("weighted_inner_product: grids differ");
    const MixtureSpec& spec = *f.spec;
    const PhaseGrid& grid = *f.grid;
    const double wv = grid.wv() * grid.dx();
    double acc = 0.0;
    for (int s = 0; s < spec.n_species; ++s) {
        auto shape = maxwell_shape(spec, grid, s);
        const double gamma = spec.gamma;
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double* fa = f.slab(s, ix);
            const double* ga = g.slab(s, ix);
            double part = 0.0;
            for (int iv = 0; iv < grid.n_vel(); ++iv) {
                if (shape[iv] == 0.0) continue;
                double w = 1.0 / (spec.c_inf[s] * shape[iv]);
                if (kind == WeightKind::mu_inv_bracket_gamma)
                    w *= std::pow(1.0 + grid.speed2(iv), gamma / 2.0);
                part += fa[iv] * ga[iv] * w;
            }
            acc += part;
        }
    }
    return acc * wv;
}

inline double weighted_norm(const DistributionField& f, WeightKind kind = WeightKind::mu_inv) {
    return std::sqrt(std::max(0.0, weighted_inner_product(f, f, kind)));
}

}  // namespace mixkinetics
