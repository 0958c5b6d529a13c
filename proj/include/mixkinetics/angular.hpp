#pragma once

#include "mixkinetics/common.hpp"
#include "mixkinetics/mixture.hpp"

namespace mixkinetics {

// Quadrature nodes on S^{d-1}: uniform midpoint angles for d=2, Gauss-Legendre
// in the polar cosine times uniform azimuth for d=3. Weights sum to |S^{d-1}|.
struct AngularRule {
    std::vector<Vec3> nodes;
    std::vector<double> weights;

    static AngularRule make(int d, int n) {
        AngularRule r;
        if (d == 2) {
            r.nodes.resize(n);
            r.weights.assign(n, 2.0 * M_PI / n);
            for (int a = 0; a < n; ++a) {
                double th = 2.0 * M_PI * (a + 0.5) / n;
                r.nodes[a] = {std::cos(th), std::sin(th), 0.0};
            }
        } else {
            // n polar GL nodes x 2n azimuthal
            auto [xg, wg] = gauss_legendre(n);
            int naz = 2 * n;
            for (int p = 0; p < n; ++p) {
                double ct = xg[p];
                double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                for (int a = 0; a < naz; ++a) {
                    double ph = 2.0 * M_PI * (a + 0.5) / naz;
                    r.nodes.push_back({st * std::cos(ph), st * std::sin(ph), ct});
                    r.weights.push_back(wg[p] * 2.0 * M_PI / naz);
                }
            }
        }
        return r;
    }

    // Gauss-Legendre on [-1,1] by Newton iteration on Legendre roots.
    static std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
        std::vector<double> x(n), w(n);
        for (int i = 0; i < n; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (t * p1 - p0) / (t * t - 1.0);
                double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        return {x, w};
    }
};

// Angular law b(cos theta), normalized so that the integral over S^{d-1}
// equals angular_scale. (H4)'s strict-positivity bound is read a.e.; the
// grad_cutoff option realizes |sin cos| with the proper normalization.
inline double angular_b(const MixtureSpec& spec, int d, double cos_theta) {
    double c = std::clamp(cos_theta, -1.0, 1.0);
    switch (spec.angular_law) {
        case AngularLaw::constant:
            return spec.angular_scale / sphere_measure(d);
        case AngularLaw::grad_cutoff: {
            double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            double norm = (d == 2) ? 2.0 : 4.0 * M_PI / 3.0;  // integral of |sin cos| over S^{d-1}
            return spec.angular_scale * std::abs(s * c) / norm;
        }
    }
    return 0.0;
}

// B_ij(|v-v_*|, cos theta) = C^Phi_ij |v-v_*|^gamma b_ij(cos theta)
inline double kernel_B(const MixtureSpec& spec, int d, int i, int j, double rel_speed,
                       double cos_theta) {
    double phi = spec.cphi(i, j);
    if (spec.gamma != 0.0) phi *= std::pow(rel_speed, spec.gamma);
    return phi * angular_b(spec, d, cos_theta);
}

// Elastic post-collision velocities for masses (m_i, m_j) and direction sigma.
inline std::pair<Vec3, Vec3> post_collision_velocities(const Vec3& v, const Vec3& v_star,
                                                       const Vec3& sigma, double mi, double mj,
                                                       int d) {
    const double M = mi + mj;
    Vec3 vc{0, 0, 0}, eta{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        vc[k] = (mi * v[k] + mj * v_star[k]) / M;
        eta[k] = v[k] - v_star[k];
    }
    double r = norm2(eta, d);
    Vec3 vp{0, 0, 0}, vsp{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        vp[k] = vc[k] + (mj / M) * r * sigma[k];
        vsp[k] = vc[k] - (mi / M) * r * sigma[k];
    }
    return {vp, vsp};
}

}  // namespace mixkinetics
