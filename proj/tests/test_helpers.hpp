#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "mixkinetics/maxwellian.hpp"

namespace mkt {

using namespace mixkinetics;

// desk-scale two-species mixture: masses (1,2)
inline MixtureSpec desk_spec(double gamma = 0.0, double cphi = 1.0) {
    MixtureSpec s;
    s.n_species = 2;
    s.masses = {1.0, 2.0};
    s.gamma = gamma;
    s.phi_coeff = {cphi, cphi, cphi, cphi};
    s.angular_law = AngularLaw::constant;
    s.angular_scale = 1.0;
    s.delta = {0.0, 1.0, 1.0, 0.0};
    s.c_inf = {1.0, 1.5};
    s.validate();
    return s;
}

inline PhaseGrid desk_grid(int nv = 16, int nx = 1, double v_max = 7.0) {
    PhaseGrid g;
    g.dim = 2;
    g.nv = nv;
    g.nx = nx;
    g.lx = 2.0 * M_PI;
    g.v_max = v_max;
    g.validate();
    return g;
}

// smooth random field in the weighted space: f = mu~ * (low-frequency cosines)
inline DistributionField smooth_random_field(const MixtureSpec& spec, const PhaseGrid& grid,
                                             Rng& rng, double amp = 1.0) {
    DistributionField f(spec, grid);
    for (int s = 0; s < spec.n_species; ++s) {
        auto shp = maxwell_shape(spec, grid, s);
        for (int ix = 0; ix < grid.nx; ++ix) {
            double kx[4], ky[4], ph[4], am[4], phx[4];
            for (int m = 0; m < 4; ++m) {
                kx[m] = rng.uniform(-0.4, 0.4);
                ky[m] = rng.uniform(-0.4, 0.4);
                ph[m] = rng.uniform(0.0, 2.0 * M_PI);
                am[m] = rng.uniform(0.2, 1.0) * amp;
                phx[m] = rng.uniform(0.0, 2.0 * M_PI);
            }
            double* fs = f.slab(s, ix);
            for (int iv = 0; iv < grid.n_vel(); ++iv) {
                Vec3 v = grid.velocity(iv);
                double r = 0.0;
                for (int m = 0; m < 4; ++m)
                    r += am[m] * std::cos(kx[m] * v[0] + ky[m] * v[1] + ph[m] +
                                          phx[m] * 0.0);
                fs[iv] = shp[iv] * r;
            }
        }
    }
    return f;
}

}  // namespace mkt
