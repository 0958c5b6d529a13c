#pragma once

#include <Eigen/Dense>

#include "mixkinetics/collision.hpp"
#include "mixkinetics/kernel_basis.hpp"

namespace mixkinetics {

enum class BaseState { global_mu, local_meps };

// Dense representation of L (around mu) or L^eps (around M^eps at one spatial
// point), acting on stacked species-velocity vectors in metric coordinates
// y = sqrt(wv/mu) f.  For mu the matrix comes from the symmetric Dirichlet
// form; for M^eps it is assembled column-by-column from the tape operator.
struct LinearizedOperator {
    BaseState base = BaseState::global_mu;
    int n_full = 0;            // N * nv^d
    int n = 0;                 // active coordinates
    Eigen::MatrixXd a_metric;  // operator in metric (y) coordinates, active set
    double asymmetry = 0.0;    // ||A - A^T||_F / ||A||_F before symmetrization
    const MixtureSpec* spec = nullptr;
    const PhaseGrid* grid = nullptr;

    std::vector<int> active;     // local -> global index (s*nvd + iv)
    std::vector<double> sqrt_w;  // per active coordinate, sqrt(wv/mu)

    // apply in f-coordinates on a full stacked slab; inactive outputs are zero
    void apply(const double* f, double* out) const {
        Eigen::VectorXd y(n);
        for (int p = 0; p < n; ++p) y[p] = f[active[p]] * sqrt_w[p];
        Eigen::VectorXd z = a_metric * y;
        for (int p = 0; p < n_full; ++p) out[p] = 0.0;
        for (int p = 0; p < n; ++p) out[active[p]] = z[p] / sqrt_w[p];
    }
};

struct SpectralReport {
    int kernel_dim = 0;
    double lambda_gap = 0.0;
    double kernel_tol = 0.0;
    double spectral_radius = 0.0;
    double kernel_cluster_max = 0.0;         // largest |lambda| inside the kernel cluster
    std::vector<double> head_eigenvalues;    // most negative first few
    std::vector<double> principal_angles;    // vs the phi basis, radians
};

class LinearizedOps {
  public:
    explicit LinearizedOps(const CollisionModel& model) : model_(&model) {}

    const CollisionModel& model() const { return *model_; }

    // nu^eps_i(v) for species i at spatial point ix of the base state M
    std::vector<double> nu_eps(const DistributionField& M, int i, int ix) const {
        return model_->nu_slab(i, M, ix);
    }

    // K^eps applied to f at one x: sum_j int B (M_i' f_j'* + M_j'* f_i' - M_i f_j*)
    void K_direct_slab(const DistributionField& M, int ix, const double* const* f_slabs,
                       double* const* out_slabs, CollideScratch& ws) const {
        const int N = model_->spec().n_species;
        const int nvd = model_->grid().n_vel();
        for (int i = 0; i < N; ++i)
            for (int q = 0; q < nvd; ++q) out_slabs[i][q] = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                // gain(M_i, f_j) - loss(M_i, f_j)
                model_->collide_slab(i, j, M.slab(i, ix), f_slabs[j], out_slabs[i], ws,
                                     CollideMode::full, true);
                // gain(f_i, M_j)
                model_->collide_slab(i, j, f_slabs[i], M.slab(j, ix), out_slabs[i], ws,
                                     CollideMode::gain_only, true);
            }
    }

    // L^eps f = sum_j Q_ij(M_i,f_j) + Q_ij(f_i,M_j) with pairwise conservative
    // correction; equals K^eps f - nu^eps f up to round-off by bilinearity.
    DistributionField L_eps_apply(const DistributionField& M, const DistributionField& f) const {
        const MixtureSpec& spec = model_->spec();
        const PhaseGrid& grid = model_->grid();
        const int N = spec.n_species;
        const int nvd = grid.n_vel();
        DistributionField out(spec, grid);
        ThreadPool::parallel_for(grid.nx, [&](std::size_t ix_) {
            int ix = static_cast<int>(ix_);
            CollideScratch ws;
            std::vector<double> qij(nvd), qji(nvd);
            for (int i = 0; i < N; ++i)
                for (int j = i; j < N; ++j) {
                    model_->collide_slab(i, j, M.slab(i, ix), f.slab(j, ix), qij.data(), ws,
                                         CollideMode::full, false);
                    model_->collide_slab(i, j, f.slab(i, ix), M.slab(j, ix), qij.data(), ws,
                                         CollideMode::full, true);
                    if (i == j) {
                        model_->correct_slab(model_->corr_[model_->pair_index(i, i)], i, i,
                                             qij.data(), nullptr);
                        double* oi = out.slab(i, ix);
                        for (int q = 0; q < nvd; ++q) oi[q] += qij[q];
                    } else {
                        model_->collide_slab(j, i, M.slab(j, ix), f.slab(i, ix), qji.data(), ws,
                                             CollideMode::full, false);
                        model_->collide_slab(j, i, f.slab(j, ix), M.slab(i, ix), qji.data(), ws,
                                             CollideMode::full, true);
                        model_->correct_slab(model_->corr_[model_->pair_index(i, j)], i, j,
                                             qij.data(), qji.data());
                        double* oi = out.slab(i, ix);
                        double* oj = out.slab(j, ix);
                        for (int q = 0; q < nvd; ++q) oi[q] += qij[q];
                        for (int q = 0; q < nvd; ++q) oj[q] += qji[q];
                    }
                }
        });
        return out;
    }

    // Dense assembly at one spatial point. dense_limit guards the O(n^2) memory.
    // For the mu base a tighter spectral disc keeps the Gaussian-tail columns
    // of the weighted interpolation out of the eigenproblem.
    LinearizedOperator assemble(const DistributionField& base_field, int ix, BaseState base,
                                int dense_limit = 20000, double spectral_exponent = 25.0) const {
        const MixtureSpec& spec = model_->spec();
        const PhaseGrid& grid = model_->grid();
        const int N = spec.n_species;
        const int nvd = grid.n_vel();
        const int n_full = N * nvd;
        if (n_full > dense_limit)
            throw DimensionOverflow("assemble: N*nv^d = " + std::to_string(n_full) +
                                    " exceeds limit " + std::to_string(dense_limit));
        LinearizedOperator op;
        op.base = base;
        op.n_full = n_full;
        op.spec = &spec;
        op.grid = &grid;
        const double texp = (base == BaseState::global_mu)
                                ? std::min(spectral_exponent, grid.active_exponent)
                                : grid.active_exponent;
        const double wv = grid.wv();
        for (int s = 0; s < N; ++s) {
            const auto& shp = model_->shape(s);
            const double m = spec.masses[s];
            for (int iv = 0; iv < nvd; ++iv) {
                if (shp[iv] <= 0.0 || m * grid.speed2(iv) / 2.0 > texp) continue;
                op.active.push_back(s * nvd + iv);
                op.sqrt_w.push_back(std::sqrt(wv / (spec.c_inf[s] * shp[iv])));
            }
        }
        op.n = static_cast<int>(op.active.size());
        if (base == BaseState::global_mu) {
            op.a_metric = assemble_dirichlet_form(op);
            op.asymmetry = 0.0;  // symmetric by construction
        } else {
            op.a_metric = assemble_columns(base_field, ix, op);
            Eigen::MatrixXd diff = op.a_metric - op.a_metric.transpose();
            double na = op.a_metric.norm();
            op.asymmetry = na > 0 ? diff.norm() / na : 0.0;
        }
        return op;
    }

    SpectralReport spectral_report(const LinearizedOperator& op, const KernelBasis& basis,
                                   int n_head = 8) const {
        if (op.base != BaseState::global_mu)
            throw EigenFailure("spectral_report: operator must be assembled around mu");
        Eigen::MatrixXd sym = 0.5 * (op.a_metric + op.a_metric.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        if (es.info() != Eigen::Success) throw EigenFailure("spectral_report: eigensolver failed");
        const Eigen::VectorXd& ev = es.eigenvalues();
        SpectralReport rep;
        rep.spectral_radius = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
        rep.kernel_tol = 1e-7 * rep.spectral_radius;
        bool have_gap = false;
        double gap = 0.0;
        for (int k = 0; k < ev.size(); ++k) {
            if (std::abs(ev[k]) <= rep.kernel_tol) {
                rep.kernel_dim++;
                rep.kernel_cluster_max = std::max(rep.kernel_cluster_max, std::abs(ev[k]));
            } else if (ev[k] < 0.0 && (!have_gap || ev[k] > gap)) {
                gap = ev[k];  // negative eigenvalue closest to zero
                have_gap = true;
            }
        }
        rep.lambda_gap = have_gap ? -gap : 0.0;
        // few most negative eigenvalues
        for (int k = 0; k < std::min<int>(n_head, ev.size()); ++k)
            rep.head_eigenvalues.push_back(ev[k]);

        // principal angles between the kernel eigenvectors and the phi span
        const int kd = basis.dim();
        std::vector<int> kidx;
        std::vector<std::pair<double, int>> byabs;
        for (int k = 0; k < ev.size(); ++k) byabs.push_back({std::abs(ev[k]), k});
        std::sort(byabs.begin(), byabs.end());
        for (int k = 0; k < kd && k < static_cast<int>(byabs.size()); ++k)
            kidx.push_back(byabs[k].second);
        Eigen::MatrixXd K(op.n, kd);
        for (int c = 0; c < kd; ++c) K.col(c) = es.eigenvectors().col(kidx[c]);
        Eigen::MatrixXd Phi(op.n, kd);
        const int nvd = op.grid->n_vel();
        for (int c = 0; c < kd; ++c)
            for (int p = 0; p < op.n; ++p) {
                int g = op.active[p];
                Phi(p, c) = basis.at(c, g / nvd, g % nvd) * op.sqrt_w[p];
            }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Phi);
        Eigen::MatrixXd Qthin = qr.householderQ() * Eigen::MatrixXd::Identity(op.n, kd);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(K.transpose() * Qthin);
        for (int c = 0; c < kd; ++c) {
            double sv = std::clamp(svd.singularValues()[c], -1.0, 1.0);
            rep.principal_angles.push_back(std::acos(sv));
        }
        std::sort(rep.principal_angles.begin(), rep.principal_angles.end());
        return rep;
    }

    struct CoercivityProbe {
        std::vector<double> eps;
        std::vector<double> defect;   // max over samples of the positive part
        double lambda_hat = 0.0;
        double slope = 0.0;           // log defect vs log eps (when measurable)
        bool slope_defined = false;
    };

    // Probes Property5-style local coercivity: the excess of <L^eps f, f> over
    // -lambda_hat ||f_perp||^2 relative to ||pi_L f||^2, maximized over random
    // fields, for each base state in `bases` (one per epsilon).
    CoercivityProbe coercivity_probe(const std::vector<double>& eps_list,
                                     const std::vector<const DistributionField*>& bases,
                                     const KernelBasis& basis, double lambda_hat, int n_samples,
                                     std::uint64_t seed) const {
        CoercivityProbe res;
        res.lambda_hat = lambda_hat;
        const MixtureSpec& spec = model_->spec();
        const PhaseGrid& grid = model_->grid();
        for (std::size_t e = 0; e < eps_list.size(); ++e) {
            Rng rng(seed);  // same fields for every epsilon
            double worst = 0.0;
            for (int t = 0; t < n_samples; ++t) {
                DistributionField f(spec, grid);
                double kx[3], ky[3], am[3], ph[3];
                for (int m = 0; m < 3; ++m) {
                    kx[m] = rng.uniform(-0.5, 0.5);
                    ky[m] = rng.uniform(-0.5, 0.5);
                    am[m] = rng.uniform(0.2, 1.0);
                    ph[m] = rng.uniform(0.0, 2.0 * M_PI);
                }
                for (int s = 0; s < spec.n_species; ++s) {
                    const auto& shp = model_->shape(s);
                    for (int ix = 0; ix < grid.nx; ++ix) {
                        double* fs = f.slab(s, ix);
                        for (int iv = 0; iv < grid.n_vel(); ++iv) {
                            Vec3 v = grid.velocity(iv);
                            double r = 0;
                            for (int m = 0; m < 3; ++m)
                                r += am[m] * std::cos(kx[m] * v[0] + ky[m] * v[1] + ph[m]);
                            fs[iv] = shp[iv] * r;
                        }
                    }
                }
                DistributionField Lf = L_eps_apply(*bases[e], f);
                DistributionField pf = pi_L(f, basis);
                DistributionField fperp = f;
                fperp -= pf;
                double dir = weighted_inner_product(Lf, f);
                double np2 = weighted_inner_product(pf, pf, WeightKind::mu_inv_bracket_gamma);
                double nperp2 =
                    weighted_inner_product(fperp, fperp, WeightKind::mu_inv_bracket_gamma);
                double r = (dir + lambda_hat * nperp2) / std::max(np2, 1e-300);
                worst = std::max(worst, r);
            }
            res.eps.push_back(eps_list[e]);
            res.defect.push_back(worst);
        }
        // slope of log(defect) vs log(eps) over positive defects
        int npos = 0;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t e = 0; e < res.eps.size(); ++e)
            if (res.defect[e] > 0) {
                double x = std::log(res.eps[e]), y = std::log(res.defect[e]);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++npos;
            }
        if (npos >= 2) {
            res.slope = (npos * sxy - sx * sy) / (npos * sxx - sx * sx);
            res.slope_defined = true;
        }
        return res;
    }

  private:
    // Variational discretization of the mu-linearized operator:
    //   <L f, g>_w = -(1/4) sum_{i,j} sum_{v,eta,sigma} wv^2 wB mu_i mu_j^*
    //                Delta[f/mu] Delta[g/mu]
    // accumulated as -s s^T in metric coordinates on the active set; symmetric
    // and negative semidefinite, annihilates the collision invariants.
    Eigen::MatrixXd assemble_dirichlet_form(const LinearizedOperator& op) const {
        const MixtureSpec& spec = model_->spec();
        const PhaseGrid& grid = model_->grid();
        const int N = spec.n_species;
        const int nvd = grid.n_vel();
        const int nv = grid.nv;
        const double wv = grid.wv();
        std::vector<int> g2l(static_cast<std::size_t>(N) * nvd, -1);
        for (int p = 0; p < op.n; ++p) g2l[op.active[p]] = p;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(op.n, op.n);
        std::vector<int> cols;
        std::vector<double> vals;
        cols.reserve(40);
        vals.reserve(40);
        auto push_sten = [&](int sp, int a, int b, int c, const AxisStencil st[3], double scale) {
            const int dd = grid.dim;
            for (int t0 = 0; t0 < 4; ++t0) {
                int pa = a + st[0].base + t0;
                if (pa < 0 || pa >= nv || st[0].w[t0] == 0.0) continue;
                for (int t1 = 0; t1 < 4; ++t1) {
                    int pb = b + st[1].base + t1;
                    if (pb < 0 || pb >= nv || st[1].w[t1] == 0.0) continue;
                    if (dd == 2) {
                        int l = g2l[sp * nvd + pa * nv + pb];
                        if (l < 0) continue;
                        cols.push_back(l);
                        vals.push_back(scale * st[0].w[t0] * st[1].w[t1] * op.sqrt_w[l] / wv);
                    } else {
                        for (int t2 = 0; t2 < 4; ++t2) {
                            int pc = c + st[2].base + t2;
                            if (pc < 0 || pc >= nv || st[2].w[t2] == 0.0) continue;
                            int l = g2l[sp * nvd + (pa * nv + pb) * nv + pc];
                            if (l < 0) continue;
                            cols.push_back(l);
                            vals.push_back(scale * st[0].w[t0] * st[1].w[t1] * st[2].w[t2] *
                                           op.sqrt_w[l] / wv);
                        }
                    }
                }
            }
        };
        auto push_pt = [&](int g, double scale) {
            int l = g2l[g];
            if (l < 0) return;
            cols.push_back(l);
            vals.push_back(scale * op.sqrt_w[l] / wv);
        };
        const bool d3 = grid.dim == 3;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                const auto& mui_shape = model_->shape(i);
                const auto& muj_shape = model_->shape(j);
                const CollisionTape& tp = model_->tape(i, j);
                for (const auto& grp : tp.groups()) {
                    const int di = grp.e[0], dj = grp.e[1], dk = grp.e[2];
                    const int a0 = std::max(0, di), a1 = std::min(nv, nv + di);
                    const int b0 = std::max(0, dj), b1 = std::min(nv, nv + dj);
                    const int c0 = d3 ? std::max(0, dk) : 0;
                    const int c1 = d3 ? std::min(nv, nv + dk) : 1;
                    for (const auto& en : grp.sig)
                        for (int a = a0; a < a1; ++a)
                            for (int b = b0; b < b1; ++b)
                                for (int c = c0; c < c1; ++c) {
                                    const int v = d3 ? (a * nv + b) * nv + c : a * nv + b;
                                    const int vs = d3
                                                       ? ((a - di) * nv + (b - dj)) * nv + (c - dk)
                                                       : (a - di) * nv + (b - dj);
                                    const double rowfac = spec.c_inf[i] * mui_shape[v] *
                                                          spec.c_inf[j] * muj_shape[vs];
                                    if (rowfac == 0.0 || en.wB == 0.0) continue;
                                    const double sp = std::sqrt(0.25 * wv * wv * en.wB * rowfac);
                                    cols.clear();
                                    vals.clear();
                                    push_sten(i, a, b, c, en.sa, sp);
                                    push_sten(j, a - di, b - dj, c - dk, en.sb, sp);
                                    push_pt(i * nvd + v, -sp);
                                    push_pt(j * nvd + vs, -sp);
                                    const int m = static_cast<int>(cols.size());
                                    for (int p = 0; p < m; ++p) {
                                        const double vp = vals[p];
                                        const int cp = cols[p];
                                        for (int q = 0; q < m; ++q)
                                            A(cp, cols[q]) -= vp * vals[q];
                                    }
                                }
                }
            }
        return A;
    }

    // Column assembly of L^eps at one spatial point via the tape scatter, in
    // raw f-coordinates first, then restricted to the active set in metric
    // coordinates.
    Eigen::MatrixXd assemble_columns(const DistributionField& M, int ix,
                                     const LinearizedOperator& op) const {
        const MixtureSpec& spec = model_->spec();
        const PhaseGrid& grid = model_->grid();
        const int N = spec.n_species;
        const int nvd = grid.n_vel();
        const int n_full = op.n_full;
        if (grid.dim != 2) throw DimensionOverflow("assemble around M^eps: d=2 only");
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_full, n_full);
        std::vector<double> rM(static_cast<std::size_t>(N) * nvd);
        for (int s = 0; s < N; ++s) {
            const auto& ish = model_->inv_shape(s);
            const double* Ms = M.slab(s, ix);
            for (int q = 0; q < nvd; ++q)
                rM[static_cast<std::size_t>(s) * nvd + q] = Ms[q] * ish[q];
        }
        std::vector<double> RMi(nvd), RMj(nvd), tmp(nvd);
        for (int i = 0; i < N; ++i)
            for (int j = i; j < N; ++j) {
                Eigen::MatrixXd blk = Eigen::MatrixXd::Zero((i == j) ? nvd : 2 * nvd, n_full);
                scatter_pair_2d(i, j, rM.data() + static_cast<std::size_t>(i) * nvd,
                                rM.data() + static_cast<std::size_t>(j) * nvd, blk, 0, RMi, RMj,
                                tmp);
                if (i != j)
                    scatter_pair_2d(j, i, rM.data() + static_cast<std::size_t>(j) * nvd,
                                    rM.data() + static_cast<std::size_t>(i) * nvd, blk, nvd, RMi,
                                    RMj, tmp);
                const auto& pc = model_->corr_[model_->pair_index(i, j)];
                std::vector<double> qa(nvd), qb(nvd);
                for (int col = 0; col < n_full; ++col) {
                    for (int q = 0; q < nvd; ++q) qa[q] = blk(q, col);
                    if (i == j) {
                        model_->correct_slab(pc, i, i, qa.data(), nullptr);
                        for (int q = 0; q < nvd; ++q) blk(q, col) = qa[q];
                    } else {
                        for (int q = 0; q < nvd; ++q) qb[q] = blk(nvd + q, col);
                        model_->correct_slab(pc, i, j, qa.data(), qb.data());
                        for (int q = 0; q < nvd; ++q) blk(q, col) = qa[q];
                        for (int q = 0; q < nvd; ++q) blk(nvd + q, col) = qb[q];
                    }
                }
                for (int q = 0; q < nvd; ++q) A.row(i * nvd + q) += blk.row(q);
                if (i != j)
                    for (int q = 0; q < nvd; ++q) A.row(j * nvd + q) += blk.row(nvd + q);
            }
        // restrict to active coordinates in the metric scaling
        Eigen::MatrixXd S(op.n, op.n);
        for (int r = 0; r < op.n; ++r)
            for (int c = 0; c < op.n; ++c)
                S(r, c) = op.sqrt_w[r] * A(op.active[r], op.active[c]) / op.sqrt_w[c];
        return S;
    }

    // Scatter rows of Q_ij(M_i, f_j) + Q_ij(f_i, M_j) into blk starting at row
    // offset row0 (rows = q_ij slab), columns = stacked f. 2-D lattice.
    void scatter_pair_2d(int i, int j, const double* rMi, const double* rMj, Eigen::MatrixXd& blk,
                         int row0, std::vector<double>& RMi, std::vector<double>& RMj,
                         std::vector<double>& tmp) const {
        const PhaseGrid& grid = model_->grid();
        const int nv = grid.nv;
        const int nvd = grid.n_vel();
        const double wv = grid.wv();
        const auto& msi = model_->shape(i);
        const auto& msj = model_->shape(j);
        const auto& ishi = model_->inv_shape(i);
        const auto& ishj = model_->inv_shape(j);
        const CollisionTape& tp = model_->tape(i, j);
        for (const auto& grp : tp.groups()) {
            const int di = grp.e[0], dj = grp.e[1];
            const int a0 = std::max(0, di), a1 = std::min(nv, nv + di);
            const int b0 = std::max(0, dj), b1 = std::min(nv, nv + dj);
            if (a0 >= a1 || b0 >= b1) continue;
            for (const auto& en : grp.sig) {
                const double c = en.wB * wv;
                if (c == 0.0) continue;
                detail::interp_shift_2d(rMi, RMi.data(), tmp.data(), nv, en.sa[0], en.sa[1]);
                detail::interp_shift_2d(rMj, RMj.data(), tmp.data(), nv, en.sb[0], en.sb[1]);
                for (int a = a0; a < a1; ++a)
                    for (int b = b0; b < b1; ++b) {
                        const int v = a * nv + b;
                        const int vs = (a - di) * nv + (b - dj);
                        const double rowfac = msi[v] * msj[vs];
                        if (rowfac == 0.0) continue;
                        const double cc = c * rowfac;
                        const double g1 = cc * RMi[v];
                        if (g1 != 0.0)
                            for (int t0 = 0; t0 < 4; ++t0) {
                                int pa = (a - di) + en.sb[0].base + t0;
                                if (pa < 0 || pa >= nv) continue;
                                for (int t1 = 0; t1 < 4; ++t1) {
                                    int pb = (b - dj) + en.sb[1].base + t1;
                                    if (pb < 0 || pb >= nv) continue;
                                    int p = pa * nv + pb;
                                    blk(row0 + v, j * nvd + p) +=
                                        g1 * en.sb[0].w[t0] * en.sb[1].w[t1] * ishj[p];
                                }
                            }
                        const double g2 = cc * RMj[vs];
                        if (g2 != 0.0)
                            for (int t0 = 0; t0 < 4; ++t0) {
                                int pa = a + en.sa[0].base + t0;
                                if (pa < 0 || pa >= nv) continue;
                                for (int t1 = 0; t1 < 4; ++t1) {
                                    int pb = b + en.sa[1].base + t1;
                                    if (pb < 0 || pb >= nv) continue;
                                    int p = pa * nv + pb;
                                    blk(row0 + v, i * nvd + p) +=
                                        g2 * en.sa[0].w[t0] * en.sa[1].w[t1] * ishi[p];
                                }
                            }
                        blk(row0 + v, j * nvd + vs) -= cc * rMi[v] * ishj[vs];
                        blk(row0 + v, i * nvd + v) -= cc * rMj[vs] * ishi[v];
                    }
            }
        }
    }

    const CollisionModel* model_;
};

}  // namespace mixkinetics
