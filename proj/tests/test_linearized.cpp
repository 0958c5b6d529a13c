#include "test_helpers.hpp"

#include "mixkinetics/linearized.hpp"

using namespace mixkinetics;
using Catch::Approx;

namespace {

MacroField common_u_macro(int nx, double c0, double c1, Vec3 u) {
    MacroField mac(2, nx, 2);
    for (int ix = 0; ix < nx; ++ix) {
        mac.cval(0, ix) = c0;
        mac.cval(1, ix) = c1;
        for (int k = 0; k < 2; ++k) {
            mac.uval(0, ix, k) = u[k];
            mac.uval(1, ix, k) = u[k];
        }
    }
    return mac;
}

}  // namespace

TEST_CASE("collision frequency nu_eps") {
    auto spec = mkt::desk_spec(0.0);
    spec.angular_scale = 2.0 * M_PI;  // b identically 1 on S^1
    auto grid = mkt::desk_grid(20, 1);
    CollisionModel cm(spec, grid, 8, 0.0);  // no eta cut: nu must capture all mass
    LinearizedOps ops(cm);

    SECTION("maxwellian molecules: nu constant, equal to |S^1| sum_j C c_j") {
        MacroField mac = common_u_macro(1, 1.2, 0.8, {0.0, 0.0, 0.0});
        DistributionField M = local_maxwellian(spec, grid, mac, 0.5);
        auto nu = ops.nu_eps(M, 0, 0);
        double expect = 2.0 * M_PI * (1.2 + 0.8);
        auto shp = maxwell_shape(spec, grid, 0);
        for (int iv = 0; iv < grid.n_vel(); ++iv) {
            if (shp[iv] == 0.0) continue;
            REQUIRE(nu[iv] == Approx(expect).epsilon(1e-7));
        }
    }
    SECTION("coercivity constant fitted positive") {
        auto sp1 = mkt::desk_spec(1.0);
        CollisionModel cm1(sp1, grid, 8, 0.0);
        LinearizedOps ops1(cm1);
        DistributionField mu = global_maxwellian(sp1, grid);
        auto nu0 = ops1.nu_eps(mu, 0, 0);
        auto nu1 = ops1.nu_eps(mu, 1, 0);
        Rng rng(4);
        double c1 = 1e300;
        for (int t = 0; t < 100; ++t) {
            DistributionField f = mkt::smooth_random_field(sp1, grid, rng);
            DistributionField nf = f;
            for (int iv = 0; iv < grid.n_vel(); ++iv) {
                nf.at(0, 0, iv) *= nu0[iv];
                nf.at(1, 0, iv) *= nu1[iv];
            }
            double lhs = weighted_inner_product(f, f, WeightKind::mu_inv_bracket_gamma);
            double rhs = weighted_inner_product(nf, f);
            REQUIRE(rhs > 0.0);
            c1 = std::min(c1, rhs / lhs);
        }
        REQUIRE(c1 > 0.0);
        INFO("fitted C1 = " << c1);
    }
    SECTION("gamma=1 values match Monte Carlo") {
        auto sp1 = mkt::desk_spec(1.0);
        sp1.angular_scale = 1.0;
        CollisionModel cm1(sp1, grid, 16, 0.0);
        LinearizedOps ops1(cm1);
        MacroField mac = common_u_macro(1, 1.1, 0.9, {0.1, -0.05, 0.0});
        double eps = 0.5;
        DistributionField M = local_maxwellian(sp1, grid, mac, eps);
        auto nu0 = ops1.nu_eps(M, 0, 0);
        Rng rng(99);
        const int nsamp = 400000;
        const int nv = grid.nv;
        int nodes[5] = {(nv / 2) * nv + nv / 2, 3 * nv + 7, 12 * nv + 4, 17 * nv + 11,
                        8 * nv + 15};
        for (int t = 0; t < 5; ++t) {
            int iv = nodes[t];
            Vec3 v = grid.velocity(iv);
            double acc = 0, acc2 = 0;
            for (int s = 0; s < nsamp; ++s) {
                double acc_j = 0.0;
                for (int j = 0; j < 2; ++j) {
                    double m = sp1.masses[j];
                    Vec3 vs{eps * mac.uval(j, 0, 0) + rng.normal() / std::sqrt(m),
                            eps * mac.uval(j, 0, 1) + rng.normal() / std::sqrt(m), 0.0};
                    Vec3 eta{v[0] - vs[0], v[1] - vs[1], 0.0};
                    acc_j += mac.cval(j, 0) * sp1.cphi(0, j) * norm2(eta, 2);
                }
                acc += acc_j;
                acc2 += acc_j * acc_j;
            }
            double mean = acc / nsamp;
            double sigma = std::sqrt((acc2 / nsamp - mean * mean) / nsamp);
            INFO("lattice " << nu0[iv] << " mc " << mean << " sigma " << sigma);
            REQUIRE(std::abs(nu0[iv] - mean) < 3 * sigma + 1e-4);
        }
    }
}

TEST_CASE("K_eps splitting identity and equilibrium") {
    auto spec = mkt::desk_spec(0.0);
    auto grid = mkt::desk_grid(16, 1);
    CollisionModel cm(spec, grid, 8);
    LinearizedOps ops(cm);
    MacroField mac = common_u_macro(1, 1.1, 0.8, {0.08, -0.05, 0.0});
    double eps = 0.25;
    DistributionField M = local_maxwellian(spec, grid, mac, eps);
    Rng rng(17);
    DistributionField f = mkt::smooth_random_field(spec, grid, rng);

    const int nvd = grid.n_vel();
    std::vector<double> k0(nvd), k1(nvd);
    double* kouts[2] = {k0.data(), k1.data()};
    const double* fins[2] = {f.slab(0, 0), f.slab(1, 0)};
    CollideScratch ws;
    ops.K_direct_slab(M, 0, fins, kouts, ws);
    auto nu0 = ops.nu_eps(M, 0, 0);
    auto nu1 = ops.nu_eps(M, 1, 0);
    std::vector<double> lin0(nvd, 0.0), lin1(nvd, 0.0);
    for (int j = 0; j < 2; ++j) {
        cm.collide_slab(0, j, M.slab(0, 0), f.slab(j, 0), lin0.data(), ws, CollideMode::full, true);
        cm.collide_slab(0, j, f.slab(0, 0), M.slab(j, 0), lin0.data(), ws, CollideMode::full, true);
        cm.collide_slab(1, j, M.slab(1, 0), f.slab(j, 0), lin1.data(), ws, CollideMode::full, true);
        cm.collide_slab(1, j, f.slab(1, 0), M.slab(j, 0), lin1.data(), ws, CollideMode::full, true);
    }
    double scale = 0, err = 0;
    for (int iv = 0; iv < nvd; ++iv) {
        double a0 = k0[iv] - nu0[iv] * f.at(0, 0, iv);
        double a1 = k1[iv] - nu1[iv] * f.at(1, 0, iv);
        err = std::max({err, std::abs(a0 - lin0[iv]), std::abs(a1 - lin1[iv])});
        scale = std::max({scale, std::abs(lin0[iv]), std::abs(lin1[iv])});
    }
    REQUIRE(err < 1e-10 * std::max(1.0, scale));

    SECTION("local equilibrium: K M - nu M = 2 Q(M,M) small") {
        const double* Mins[2] = {M.slab(0, 0), M.slab(1, 0)};
        ops.K_direct_slab(M, 0, Mins, kouts, ws);
        double mx = 0;
        for (int iv = 0; iv < nvd; ++iv) {
            mx = std::max(mx, std::abs(k0[iv] - nu0[iv] * M.at(0, 0, iv)));
            mx = std::max(mx, std::abs(k1[iv] - nu1[iv] * M.at(1, 0, iv)));
        }
        REQUIRE(mx < 1e-6);
    }
}

TEST_CASE("projection pi_L properties") {
    auto spec = mkt::desk_spec(0.0);
    auto grid = mkt::desk_grid(24, 2, 8.0);
    CollisionModel cm(spec, grid, 8);
    LinearizedOps ops(cm);
    KernelBasis basis(spec, grid);

    SECTION("basis Gram close to identity") {
        auto G = basis.gram();
        for (int a = 0; a < basis.dim(); ++a)
            for (int b = 0; b < basis.dim(); ++b)
                REQUIRE(std::abs(G[a * basis.dim() + b] - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
    SECTION("projection fixes the basis vectors") {
        for (int k = 0; k < basis.dim(); ++k) {
            DistributionField phi(spec, grid);
            for (int s = 0; s < 2; ++s)
                for (int ix = 0; ix < grid.nx; ++ix)
                    for (int iv = 0; iv < grid.n_vel(); ++iv)
                        phi.at(s, ix, iv) = basis.at(k, s, iv);
            DistributionField p = pi_L(phi, basis);
            p -= phi;
            REQUIRE(weighted_norm(p) < 1e-8);
        }
    }
    SECTION("idempotent and self-adjoint") {
        Rng rng(31);
        DistributionField f = mkt::smooth_random_field(spec, grid, rng);
        DistributionField g = mkt::smooth_random_field(spec, grid, rng);
        DistributionField pf = pi_L(f, basis);
        DistributionField ppf = pi_L(pf, basis);
        ppf -= pf;
        REQUIRE(weighted_norm(ppf) < 1e-10 * std::max(1.0, weighted_norm(pf)));
        double a = weighted_inner_product(pf, g);
        double b = weighted_inner_product(f, pi_L(g, basis));
        REQUIRE(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
    }
    SECTION("orthogonality of Q and L^eps outputs to ker L") {
        Rng rng(32);
        DistributionField mu = global_maxwellian(spec, grid);
        DistributionField f = mkt::smooth_random_field(spec, grid, rng, 0.3);
        DistributionField F = mu;
        F += f;
        DistributionField q = cm.q_full(F);
        DistributionField pq = pi_L(q, basis);
        REQUIRE(weighted_norm(pq) < 1e-9 * std::max(1.0, weighted_norm(q)));

        MacroField mac = common_u_macro(grid.nx, 1.05, 0.9, {0.03, 0.02, 0.0});
        DistributionField M = local_maxwellian(spec, grid, mac, 0.5);
        DistributionField Lf = ops.L_eps_apply(M, f);
        DistributionField pl = pi_L(Lf, basis);
        REQUIRE(weighted_norm(pl) < 1e-9 * std::max(1.0, weighted_norm(Lf)));
    }
    SECTION("pi_Teps is the idempotent spatial average of pi_L") {
        Rng rng(33);
        DistributionField f = mkt::smooth_random_field(spec, grid, rng);
        for (int s = 0; s < 2; ++s)
            for (int ix = 0; ix < grid.nx; ++ix) {
                double fac = 1.0 + 0.5 * std::sin(2 * M_PI * ix / grid.nx);
                double* fs = f.slab(s, ix);
                for (int iv = 0; iv < grid.n_vel(); ++iv) fs[iv] *= fac;
            }
        DistributionField pt = pi_Teps(f, basis);
        DistributionField pt2 = pi_Teps(pt, basis);
        pt2 -= pt;
        REQUIRE(weighted_norm(pt2) < 1e-10 * std::max(1.0, weighted_norm(pt)));
        for (int iv = 0; iv < grid.n_vel(); iv += 17)
            REQUIRE(pt.at(0, 0, iv) == Approx(pt.at(0, 1, iv)).margin(1e-14));
    }
}

TEST_CASE("norm equivalence on ker L") {
    auto spec = mkt::desk_spec(1.0);
    auto grid = mkt::desk_grid(24, 1, 8.0);
    KernelBasis basis(spec, grid);
    auto Gg = basis.gram(WeightKind::mu_inv_bracket_gamma);
    double gmax = 0;
    for (double v : Gg) gmax = std::max(gmax, std::abs(v));
    double c_pi_bound = basis.dim() * gmax;
    Rng rng(55);
    double c_pi_measured = 0;
    for (int t = 0; t < 100; ++t) {
        DistributionField f = mkt::smooth_random_field(spec, grid, rng);
        DistributionField pf = pi_L(f, basis);
        double a = weighted_inner_product(pf, pf, WeightKind::mu_inv_bracket_gamma);
        double b = weighted_inner_product(pf, pf);
        if (b > 1e-14) c_pi_measured = std::max(c_pi_measured, a / b);
    }
    INFO("measured C_pi " << c_pi_measured << " bound " << c_pi_bound);
    REQUIRE(c_pi_measured <= c_pi_bound);
}

TEST_CASE("assembled operators") {
    auto spec = mkt::desk_spec(0.0);
    auto grid = mkt::desk_grid(12, 1);
    CollisionModel cm(spec, grid, 8);
    LinearizedOps ops(cm);
    KernelBasis basis(spec, grid);
    DistributionField mu = global_maxwellian(spec, grid);

    SECTION("dimension guard") {
        REQUIRE_THROWS_AS(ops.assemble(mu, 0, BaseState::global_mu, 100), DimensionOverflow);
    }
    SECTION("mu form matrix: symmetric, annihilates the basis, dissipative") {
        LinearizedOperator L = ops.assemble(mu, 0, BaseState::global_mu);
        REQUIRE(L.asymmetry <= 1e-8);
        const int nvd = grid.n_vel();
        for (int k = 0; k < basis.dim(); ++k) {
            std::vector<double> phi(2 * nvd), out(2 * nvd);
            for (int s = 0; s < 2; ++s)
                for (int iv = 0; iv < nvd; ++iv) phi[s * nvd + iv] = basis.at(k, s, iv);
            L.apply(phi.data(), out.data());
            // weighted norm of L phi relative to the operator scale
            double acc = 0;
            for (int p = 0; p < L.n; ++p) {
                double y = out[L.active[p]] * L.sqrt_w[p];
                acc += y * y;
            }
            REQUIRE(std::sqrt(acc) < 1e-7);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.a_metric);
        REQUIRE(es.eigenvalues().maxCoeff() < 1e-10);
    }
    SECTION("M^eps column assembly matches the apply path") {
        MacroField mac = common_u_macro(1, 1.1, 0.85, {0.0, 0.0, 0.0});
        mac.uval(0, 0, 0) = 0.12;
        mac.uval(0, 0, 1) = -0.02;
        mac.uval(1, 0, 0) = -0.07;
        mac.uval(1, 0, 1) = 0.05;
        DistributionField M = local_maxwellian(spec, grid, mac, 0.5);
        LinearizedOperator L = ops.assemble(M, 0, BaseState::local_meps);
        INFO("L^eps metric asymmetry (reported, not bounded): " << L.asymmetry);
        Rng rng(71);
        DistributionField f = mkt::smooth_random_field(spec, grid, rng);
        DistributionField Lf = ops.L_eps_apply(M, f);
        const int nvd = grid.n_vel();
        std::vector<double> fin(2 * nvd), out(2 * nvd);
        for (int s = 0; s < 2; ++s)
            for (int iv = 0; iv < nvd; ++iv) fin[s * nvd + iv] = f.at(s, 0, iv);
        L.apply(fin.data(), out.data());
        double scale = weighted_norm(Lf);
        double err = 0;
        for (int s = 0; s < 2; ++s)
            for (int iv = 0; iv < nvd; ++iv)
                err = std::max(err, std::abs(out[s * nvd + iv] - Lf.at(s, 0, iv)));
        REQUIRE(err < 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("spectral structure of L") {
    auto spec = mkt::desk_spec(0.0);
    auto grid = mkt::desk_grid(16, 1);
    CollisionModel cm(spec, grid, 8);
    LinearizedOps ops(cm);
    KernelBasis basis(spec, grid);
    DistributionField mu = global_maxwellian(spec, grid);
    LinearizedOperator L = ops.assemble(mu, 0, BaseState::global_mu);
    SpectralReport rep = ops.spectral_report(L, basis);
    INFO("rho=" << rep.spectral_radius << " gap=" << rep.lambda_gap
                << " cluster=" << rep.kernel_cluster_max);
    REQUIRE(rep.kernel_dim == 2 + 2 + 1);
    REQUIRE(rep.lambda_gap > 0.0);
    REQUIRE(rep.lambda_gap / std::max(rep.kernel_cluster_max, 1e-300) >= 1e3);
    for (double a : rep.principal_angles) REQUIRE(a <= 1e-4);

    SECTION("gap scales linearly in C^Phi") {
        auto spec2 = mkt::desk_spec(0.0, 2.5);
        CollisionModel cm2(spec2, grid, 8);
        LinearizedOps ops2(cm2);
        KernelBasis basis2(spec2, grid);
        DistributionField mu2 = global_maxwellian(spec2, grid);
        LinearizedOperator L2 = ops2.assemble(mu2, 0, BaseState::global_mu);
        SpectralReport rep2 = ops2.spectral_report(L2, basis2);
        REQUIRE(rep2.lambda_gap == Approx(2.5 * rep.lambda_gap).epsilon(1e-8));
    }
    SECTION("apply-path operator spectrum stays in the closed left half-plane") {
        MacroField mac = common_u_macro(1, 1.0, 1.5, {0.0, 0.0, 0.0});
        DistributionField M0 = local_maxwellian(spec, grid, mac, 0.0);
        LinearizedOperator Le = ops.assemble(M0, 0, BaseState::local_meps);
        Eigen::EigenSolver<Eigen::MatrixXd> es(Le.a_metric);
        REQUIRE(es.info() == Eigen::Success);
        double remax = es.eigenvalues().real().maxCoeff();
        INFO("max Re(lambda) = " << remax);
        REQUIRE(remax < 1e-8 * rep.spectral_radius + 1e-10);
    }
}

TEST_CASE("coercivity probe") {
    auto spec = mkt::desk_spec(0.0);
    auto grid = mkt::desk_grid(12, 1);
    CollisionModel cm(spec, grid, 8);
    LinearizedOps ops(cm);
    KernelBasis basis(spec, grid);
    DistributionField mu = global_maxwellian(spec, grid);
    LinearizedOperator L = ops.assemble(mu, 0, BaseState::global_mu);
    SpectralReport rep = ops.spectral_report(L, basis);

    std::vector<double> eps_list = {0.5, 0.25, 0.125, 0.0625};
    std::vector<DistributionField> bases;
    for (double e : eps_list) {
        MacroField mac = common_u_macro(1, 1.0, 1.5, {0.0, 0.0, 0.0});
        mac.uval(0, 0, 0) = 0.3;  // distinct species velocities
        mac.uval(1, 0, 0) = -0.2;
        bases.push_back(local_maxwellian(spec, grid, mac, e));
    }
    std::vector<const DistributionField*> bptr;
    for (auto& b : bases) bptr.push_back(&b);
    auto probe = ops.coercivity_probe(eps_list, bptr, basis, rep.lambda_gap, 10, 2024);

    MacroField mac0 = common_u_macro(1, 1.0, 1.5, {0.0, 0.0, 0.0});
    DistributionField M00 = local_maxwellian(spec, grid, mac0, 0.0);
    std::vector<const DistributionField*> b0 = {&M00};
    auto probe0 = ops.coercivity_probe({1e-9}, b0, basis, rep.lambda_gap, 10, 2024);
    INFO("defect at base mu: " << probe0.defect[0]);
    REQUIRE(probe0.defect[0] < 0.05 * rep.lambda_gap);

    REQUIRE(probe.slope_defined);
    INFO("defect slope: " << probe.slope);
    REQUIRE(probe.slope > 0.5);
}
