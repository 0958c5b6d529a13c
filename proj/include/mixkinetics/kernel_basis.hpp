#pragma once

#include "mixkinetics/maxwellian.hpp"

namespace mixkinetics {

// Orthonormal basis of ker L in L^2(mu^{-1/2}): N density modes, d momentum
// modes and one energy mode; dimension N+d+1.
class KernelBasis {
  public:
    KernelBasis(const MixtureSpec& spec, const PhaseGrid& grid) : spec_(&spec), grid_(&grid) {
        const int N = spec.n_species;
        const int d = grid.dim;
        const int nvd = grid.n_vel();
        dim_ = N + d + 1;
        vecs_.assign(static_cast<std::size_t>(dim_) * N * nvd, 0.0);
        double rho = 0.0, ctot = 0.0;
        for (int s = 0; s < N; ++s) {
            rho += spec.masses[s] * spec.c_inf[s];
            ctot += spec.c_inf[s];
        }
        for (int s = 0; s < N; ++s) {
            auto mu_s = maxwell_shape(spec, grid, s);
            const double m = spec.masses[s];
            for (int iv = 0; iv < nvd; ++iv) {
                double mu = spec.c_inf[s] * mu_s[iv];
                // density modes
                at(s, s, iv) = mu / std::sqrt(spec.c_inf[s]);
                // momentum modes
                Vec3 v = grid.velocity(iv);
                for (int k = 0; k < d; ++k) at(N + k, s, iv) = v[k] * m * mu / std::sqrt(rho);
                // energy mode
                at(N + d, s, iv) =
                    (m * grid.speed2(iv) - d) / std::sqrt(2.0 * d) * mu / std::sqrt(ctot);
            }
        }
    }

    int dim() const { return dim_; }

    // basis vector k as a velocity-space field (all species) at no particular x
    const double* vec(int k) const {
        return vecs_.data() + static_cast<std::size_t>(k) * spec_->n_species * grid_->n_vel();
    }
    double& at(int k, int s, int iv) {
        return vecs_[(static_cast<std::size_t>(k) * spec_->n_species + s) * grid_->n_vel() + iv];
    }
    double at(int k, int s, int iv) const {
        return vecs_[(static_cast<std::size_t>(k) * spec_->n_species + s) * grid_->n_vel() + iv];
    }

    // Gram matrix in the mu^{-1/2} inner product (quadrature)
    std::vector<double> gram(WeightKind kind = WeightKind::mu_inv) const {
        const int N = spec_->n_species;
        const int nvd = grid_->n_vel();
        std::vector<std::vector<double>> shp(N);
        for (int s = 0; s < N; ++s) shp[s] = maxwell_shape(*spec_, *grid_, s);
        std::vector<double> G(static_cast<std::size_t>(dim_) * dim_, 0.0);
        const double wv = grid_->wv();
        for (int a = 0; a < dim_; ++a)
            for (int b = 0; b < dim_; ++b) {
                double acc = 0.0;
                for (int s = 0; s < N; ++s)
                    for (int iv = 0; iv < nvd; ++iv) {
                        if (shp[s][iv] == 0.0) continue;
                        double w = 1.0 / (spec_->c_inf[s] * shp[s][iv]);
                        if (kind == WeightKind::mu_inv_bracket_gamma)
                            w *= std::pow(1.0 + grid_->speed2(iv), spec_->gamma / 2.0);
                        acc += at(a, s, iv) * at(b, s, iv) * w;
                    }
                G[static_cast<std::size_t>(a) * dim_ + b] = acc * wv;
            }
        return G;
    }

    const MixtureSpec& spec() const { return *spec_; }
    const PhaseGrid& grid() const { return *grid_; }

  private:
    const MixtureSpec* spec_;
    const PhaseGrid* grid_;
    int dim_;
    std::vector<double> vecs_;
};

// pi_L via the explicit moment formula, per spatial point.
inline DistributionField pi_L(const DistributionField& f, const KernelBasis& basis) {
    const MixtureSpec& spec = *f.spec;
    const PhaseGrid& grid = *f.grid;
    const int N = spec.n_species;
    const int d = grid.dim;
    const int nvd = grid.n_vel();
    const double wv = grid.wv();
    double rho = 0.0, ctot = 0.0;
    for (int s = 0; s < N; ++s) {
        rho += spec.masses[s] * spec.c_inf[s];
        ctot += spec.c_inf[s];
    }
    std::vector<std::vector<double>> mu(N);
    for (int s = 0; s < N; ++s) {
        mu[s] = maxwell_shape(spec, grid, s);
        for (auto& x : mu[s]) x *= spec.c_inf[s];
    }
    DistributionField out(spec, grid);
    for (int ix = 0; ix < grid.nx; ++ix) {
        // moments
        std::vector<double> dens(N, 0.0);
        Vec3 mom{0, 0, 0};
        double en = 0.0;
        for (int s = 0; s < N; ++s) {
            const double m = spec.masses[s];
            const double* fs = f.slab(s, ix);
            for (int iv = 0; iv < nvd; ++iv) {
                double fv = fs[iv];
                dens[s] += fv;
                Vec3 v = grid.velocity(iv);
                for (int k = 0; k < d; ++k) mom[k] += m * v[k] * fv;
                en += (m * grid.speed2(iv) - d) / std::sqrt(2.0 * d) * fv;
            }
        }
        for (int s = 0; s < N; ++s) dens[s] *= wv;
        for (int k = 0; k < d; ++k) mom[k] *= wv;
        en *= wv;
        for (int s = 0; s < N; ++s) {
            const double m = spec.masses[s];
            double* os = out.slab(s, ix);
            const double* mus = mu[s].data();
            for (int iv = 0; iv < nvd; ++iv) {
                double val = dens[s] / spec.c_inf[s];
                Vec3 v = grid.velocity(iv);
                for (int k = 0; k < d; ++k) val += v[k] * mom[k] / rho * m;
                val += (m * grid.speed2(iv) - d) / std::sqrt(2.0 * d) * en / ctot;
                os[iv] = val * mus[iv];
            }
        }
    }
    return out;
}

// pi_{T^eps}: spatial average of pi_L(f), broadcast back over x.
inline DistributionField pi_Teps(const DistributionField& f, const KernelBasis& basis) {
    DistributionField p = pi_L(f, basis);
    const PhaseGrid& grid = *f.grid;
    const int N = f.spec->n_species;
    const int nvd = grid.n_vel();
    DistributionField out(*f.spec, grid);
    for (int s = 0; s < N; ++s) {
        std::vector<double> avg(nvd, 0.0);
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double* ps = p.slab(s, ix);
            for (int iv = 0; iv < nvd; ++iv) avg[iv] += ps[iv];
        }
        for (int iv = 0; iv < nvd; ++iv) avg[iv] /= grid.nx;
        for (int ix = 0; ix < grid.nx; ++ix) {
            double* os = out.slab(s, ix);
            for (int iv = 0; iv < nvd; ++iv) os[iv] = avg[iv];
        }
    }
    return out;
}

}  // namespace mixkinetics
