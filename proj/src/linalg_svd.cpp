#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"

namespace prac {

namespace detail {
void count_svd_call();
}

namespace {

constexpr std::size_t kJacobiColumnLimit = 128;

struct FullSvd {
    DenseMatrix u;              // m×k, k = min(m,n)
    std::vector<double> sigma;  // k
    DenseMatrix v;              // n×k
};

// Deterministically fill the listed (zero-sigma) columns of u with vectors
// orthonormal to every other column. For each slot the standard basis vector
// with the largest residual against the current columns wins.
void complete_orthonormal_columns(DenseMatrix& u, const std::vector<std::size_t>& deficient) {
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    std::vector<double> v(m), best_v(m);
    for (std::size_t j : deficient) {
        double best_norm_sq = -1.0;
        for (std::size_t candidate = 0; candidate < m; ++candidate) {
            std::fill(v.begin(), v.end(), 0.0);
            v[candidate] = 1.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == j) continue;
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += u(i, c) * v[i];
                if (dot != 0.0)
                    for (std::size_t i = 0; i < m; ++i) v[i] -= dot * u(i, c);
            }
            double norm_sq = 0.0;
            for (double x : v) norm_sq += x * x;
            if (norm_sq > best_norm_sq) {
                best_norm_sq = norm_sq;
                best_v = v;
            }
        }
        if (best_norm_sq <= 1e-8) throw Error("svd: failed to complete orthonormal basis");
        const double inv = 1.0 / std::sqrt(best_norm_sq);
        for (std::size_t i = 0; i < m; ++i) u(i, j) = best_v[i] * inv;
        // One re-orthogonalization pass keeps the completion tight.
        for (std::size_t c = 0; c < n; ++c) {
            if (c == j) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += u(i, c) * u(i, j);
            if (dot != 0.0)
                for (std::size_t i = 0; i < m; ++i) u(i, j) -= dot * u(i, c);
        }
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm_sq += u(i, j) * u(i, j);
        const double inv2 = 1.0 / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < m; ++i) u(i, j) *= inv2;
    }
}

void sort_descending(FullSvd& f, std::vector<std::size_t>* zero_columns_out = nullptr) {
    const std::size_t k = f.sigma.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return f.sigma[a] > f.sigma[b]; });
    DenseMatrix u(f.u.rows(), k), v(f.v.rows(), k);
    std::vector<double> sigma(k);
    for (std::size_t j = 0; j < k; ++j) {
        sigma[j] = f.sigma[order[j]];
        for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = f.u(i, order[j]);
        for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) = f.v(i, order[j]);
    }
    f.u = std::move(u);
    f.v = std::move(v);
    f.sigma = std::move(sigma);
    (void)zero_columns_out;
}

// One-sided Jacobi on the columns of x (m >= n): plane rotations chosen from
// 2×2 Gram blocks of XᵀX, iterated until all column pairs are orthogonal.
FullSvd jacobi_svd(const DenseMatrix& x) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    DenseMatrix w = x;
    DenseMatrix v = DenseMatrix::identity(n);

    const double tol = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                ++rotations;
                const double tau = (beta - alpha) / (2.0 * gamma);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (rotations == 0) break;
    }

    FullSvd f;
    f.sigma.resize(n);
    f.u = DenseMatrix(m, n);
    f.v = std::move(v);
    double sigma_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm_sq += w(i, j) * w(i, j);
        f.sigma[j] = std::sqrt(norm_sq);
        sigma_max = std::max(sigma_max, f.sigma[j]);
    }
    const double rank_cutoff = static_cast<double>(std::max(m, n)) * 2.3e-16 * sigma_max;
    for (std::size_t j = 0; j < n; ++j) {
        // Columns below the numerical rank stay zero; thin_svd completes the
        // ones it actually returns.
        if (f.sigma[j] > rank_cutoff && f.sigma[j] > 0.0) {
            const double inv = 1.0 / f.sigma[j];
            for (std::size_t i = 0; i < m; ++i) f.u(i, j) = w(i, j) * inv;
        }
    }
    sort_descending(f);
    return f;
}

inline void givens(double a, double b, double& c, double& s) {
    const double r = std::hypot(a, b);
    if (r == 0.0) {
        c = 1.0;
        s = 0.0;
    } else {
        c = a / r;
        s = b / r;
    }
}

// col_i ← c·col_i + s·col_j ; col_j ← −s·col_i + c·col_j
inline void rotate_cols(DenseMatrix& m, std::size_t i, std::size_t j, double c, double s) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double x = m(r, i), y = m(r, j);
        m(r, i) = c * x + s * y;
        m(r, j) = -s * x + c * y;
    }
}

// Golub–Kahan: Householder bidiagonalization, then implicit-shift QR on the
// bidiagonal factor with Givens chasing.
FullSvd golub_kahan_svd(const DenseMatrix& x) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    DenseMatrix w = x;
    std::vector<std::vector<double>> left_v(n), right_v(n);
    std::vector<double> left_beta(n, 0.0), right_beta(n, 0.0);
    std::vector<double> d(n, 0.0), e(n > 0 ? n - 1 : 0, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        // Left reflector zeroing w(k+1.., k).
        {
            std::vector<double> v(m - k);
            double norm_sq = 0.0;
            for (std::size_t i = k; i < m; ++i) {
                v[i - k] = w(i, k);
                norm_sq += v[i - k] * v[i - k];
            }
            const double norm = std::sqrt(norm_sq);
            if (norm > 0.0) {
                const double alpha = (v[0] >= 0.0) ? -norm : norm;
                v[0] -= alpha;
                double v_sq = 0.0;
                for (double t : v) v_sq += t * t;
                const double beta = (v_sq > 0.0) ? 2.0 / v_sq : 0.0;
                for (std::size_t c = k + 1; c < n; ++c) {
                    double dot = 0.0;
                    for (std::size_t i = k; i < m; ++i) dot += v[i - k] * w(i, c);
                    const double fct = beta * dot;
                    for (std::size_t i = k; i < m; ++i) w(i, c) -= fct * v[i - k];
                }
                w(k, k) = alpha;
                left_v[k] = std::move(v);
                left_beta[k] = beta;
            }
        }
        // Right reflector zeroing w(k, k+2..).
        if (k + 2 < n) {
            std::vector<double> v(n - k - 1);
            double norm_sq = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) {
                v[j - k - 1] = w(k, j);
                norm_sq += v[j - k - 1] * v[j - k - 1];
            }
            const double norm = std::sqrt(norm_sq);
            if (norm > 0.0) {
                const double alpha = (v[0] >= 0.0) ? -norm : norm;
                v[0] -= alpha;
                double v_sq = 0.0;
                for (double t : v) v_sq += t * t;
                const double beta = (v_sq > 0.0) ? 2.0 / v_sq : 0.0;
                for (std::size_t i = k + 1; i < m; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = k + 1; j < n; ++j) dot += v[j - k - 1] * w(i, j);
                    const double fct = beta * dot;
                    for (std::size_t j = k + 1; j < n; ++j) w(i, j) -= fct * v[j - k - 1];
                }
                w(k, k + 1) = alpha;
                right_v[k] = std::move(v);
                right_beta[k] = beta;
            }
        }
        d[k] = w(k, k);
        if (k + 1 < n) e[k] = w(k, k + 1);
    }

    // Accumulate U (first n columns of the left product) and V.
    DenseMatrix u(m, n);
    for (std::size_t j = 0; j < n; ++j) u(j, j) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        if (left_v[k].empty()) continue;
        const auto& v = left_v[k];
        const double beta = left_beta[k];
        for (std::size_t c = 0; c < n; ++c) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * u(i, c);
            const double fct = beta * dot;
            for (std::size_t i = k; i < m; ++i) u(i, c) -= fct * v[i - k];
        }
    }
    DenseMatrix vmat = DenseMatrix::identity(n);
    for (std::size_t k = n; k-- > 0;) {
        if (right_v[k].empty()) continue;
        const auto& v = right_v[k];
        const double beta = right_beta[k];
        for (std::size_t c = 0; c < n; ++c) {
            double dot = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) dot += v[j - k - 1] * vmat(j, c);
            const double fct = beta * dot;
            for (std::size_t j = k + 1; j < n; ++j) vmat(j, c) -= fct * v[j - k - 1];
        }
    }

    // Implicit-shift QR on the bidiagonal (d, e).
    const double tol = 1e-15;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm_b = std::max(norm_b, std::fabs(d[i]));
    for (std::size_t i = 0; i + 1 < n; ++i) norm_b = std::max(norm_b, std::fabs(e[i]));

    const std::size_t max_iter = 120 * std::max<std::size_t>(n, 1);
    std::size_t iter = 0;
    while (true) {
        bool any_active = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (e[i] == 0.0) continue;
            if (std::fabs(e[i]) <= tol * (std::fabs(d[i]) + std::fabs(d[i + 1])) ||
                std::fabs(e[i]) <= 1e-300) {
                e[i] = 0.0;
            } else {
                any_active = true;
            }
        }
        if (!any_active) break;
        if (++iter > max_iter) throw Error("svd: bidiagonal QR failed to converge");

        std::size_t hi = n - 1;
        while (hi > 0 && e[hi - 1] == 0.0) --hi;
        std::size_t lo = hi - 1;
        while (lo > 0 && e[lo - 1] != 0.0) --lo;

        // Zero diagonal inside the block: cancel the superdiagonal entry by
        // chasing it across the row with left rotations.
        bool cancelled = false;
        for (std::size_t i = lo; i < hi; ++i) {
            if (std::fabs(d[i]) <= tol * norm_b) {
                d[i] = 0.0;
                double f = e[i];
                e[i] = 0.0;
                for (std::size_t j = i + 1; j <= hi && f != 0.0; ++j) {
                    double c, s;
                    givens(d[j], f, c, s);
                    d[j] = c * d[j] + s * f;
                    if (j < hi) {
                        f = -s * e[j];
                        e[j] = c * e[j];
                    }
                    rotate_cols(u, j, i, c, s);
                }
                cancelled = true;
                break;
            }
        }
        if (cancelled) continue;

        // Wilkinson shift from the trailing 2×2 of BᵀB restricted to the block.
        const double t11 = d[hi - 1] * d[hi - 1] + (hi - 1 > lo ? e[hi - 2] * e[hi - 2] : 0.0);
        const double t12 = d[hi - 1] * e[hi - 1];
        const double t22 = d[hi] * d[hi] + e[hi - 1] * e[hi - 1];
        double mu;
        if (t12 == 0.0) {
            mu = t22;
        } else {
            const double delta = (t11 - t22) / 2.0;
            const double sgn = (delta >= 0.0) ? 1.0 : -1.0;
            mu = t22 - t12 * t12 / (delta + sgn * std::sqrt(delta * delta + t12 * t12));
        }

        double y = d[lo] * d[lo] - mu;
        double z = d[lo] * e[lo];
        double bulge = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            double c, s;
            givens(y, z, c, s);
            if (k > lo) e[k - 1] = c * e[k - 1] + s * bulge;
            double f = c * d[k] + s * e[k];
            e[k] = -s * d[k] + c * e[k];
            const double g = s * d[k + 1];
            d[k + 1] = c * d[k + 1];
            d[k] = f;
            rotate_cols(vmat, k, k + 1, c, s);

            double c2, s2;
            givens(d[k], g, c2, s2);
            d[k] = c2 * d[k] + s2 * g;
            f = c2 * e[k] + s2 * d[k + 1];
            d[k + 1] = -s2 * e[k] + c2 * d[k + 1];
            e[k] = f;
            if (k + 1 < hi) {
                bulge = s2 * e[k + 1];
                e[k + 1] = c2 * e[k + 1];
                y = e[k];
                z = bulge;
            }
            rotate_cols(u, k, k + 1, c2, s2);
        }
    }

    FullSvd f;
    f.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] < 0.0) {
            f.sigma[i] = -d[i];
            for (std::size_t r = 0; r < m; ++r) u(r, i) = -u(r, i);
        } else {
            f.sigma[i] = d[i];
        }
    }
    f.u = std::move(u);
    f.v = std::move(vmat);
    sort_descending(f);
    return f;
}

FullSvd svd_tall(const DenseMatrix& x) {
    return x.cols() <= kJacobiColumnLimit ? jacobi_svd(x) : golub_kahan_svd(x);
}

}  // namespace

SvdResult thin_svd(const DenseMatrix& x, std::size_t rank) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    const std::size_t mindim = std::min(m, n);
    if (rank < 1 || rank > mindim)
        throw ParameterError("thin_svd: rank must be in [1, min(rows, cols)]");
    ensure_finite(x, "thin_svd");
    detail::count_svd_call();

    FullSvd f;
    if (m >= n) {
        f = svd_tall(x);
    } else {
        f = svd_tall(x.transposed());
        std::swap(f.u, f.v);
    }

    SvdResult r;
    r.sigma.assign(f.sigma.begin(), f.sigma.begin() + static_cast<std::ptrdiff_t>(rank));
    r.u = DenseMatrix(m, rank);
    r.v = DenseMatrix(n, rank);
    for (std::size_t j = 0; j < rank; ++j) {
        for (std::size_t i = 0; i < m; ++i) r.u(i, j) = f.u(i, j);
        for (std::size_t i = 0; i < n; ++i) r.v(i, j) = f.v(i, j);
    }

    // Zero singular values leave their u columns undefined; fill the returned
    // ones deterministically so UᵀU = I still holds.
    std::vector<std::size_t> deficient;
    for (std::size_t j = 0; j < rank; ++j) {
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm_sq += r.u(i, j) * r.u(i, j);
        if (norm_sq < 0.5) deficient.push_back(j);
    }
    if (!deficient.empty()) complete_orthonormal_columns(r.u, deficient);

    // Sign convention: largest-magnitude entry of each v column non-negative,
    // ties broken by lowest index; u flips in tandem.
    for (std::size_t j = 0; j < rank; ++j) {
        std::size_t arg = 0;
        double best = std::fabs(r.v(0, j));
        for (std::size_t i = 1; i < n; ++i) {
            const double a = std::fabs(r.v(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (r.v(arg, j) < 0.0) {
            for (std::size_t i = 0; i < n; ++i) r.v(i, j) = -r.v(i, j);
            for (std::size_t i = 0; i < m; ++i) r.u(i, j) = -r.u(i, j);
        }
    }
    return r;
}

}  // namespace prac
