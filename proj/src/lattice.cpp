#include "lognorm/lattice.hpp"

namespace lognorm {

PMat::PMat(const PadicContext& ctx, int rows, int cols, int prec)
    : ctx_(&ctx), rows_(rows), cols_(cols), prec_(prec), a_((size_t)rows * cols) {
    if (prec < 1 || prec > ctx.precision())
        throw InvalidConfig("PMat: precision out of range");
}

PMat PMat::identity(const PadicContext& ctx, int n, int prec) {
    PMat m(ctx, n, n, prec);
    for (int i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
}

PMat PMat::from_padic(const std::vector<std::vector<PadicInt>>& entries) {
    if (entries.empty() || entries[0].empty())
        throw InvalidConfig("PMat::from_padic: empty");
    const PadicContext& ctx = entries[0][0].ctx();
    int prec = ctx.precision();
    for (auto& row : entries)
        for (auto& e : row) prec = std::min(prec, e.prec());
    PMat m(ctx, (int)entries.size(), (int)entries[0].size(), prec);
    for (int i = 0; i < m.rows(); ++i) {
        if ((int)entries[i].size() != m.cols())
            throw InvalidConfig("PMat::from_padic: ragged rows");
        for (int j = 0; j < m.cols(); ++j) m.set(i, j, entries[i][j].residue());
    }
    return m;
}

void PMat::set(int i, int j, const mpz_class& v) {
    a_[(size_t)i * cols_ + j] = v;
    canon(i, j);
}

void PMat::canon(int i, int j) {
    mpz_class& e = a_[(size_t)i * cols_ + j];
    mpz_mod(e.get_mpz_t(), e.get_mpz_t(), ctx_->ell_pow(prec_).get_mpz_t());
}

PMat PMat::operator*(const PMat& o) const {
    if (cols_ != o.rows_) throw InvalidConfig("PMat::mul: shape mismatch");
    PMat r(*ctx_, rows_, o.cols_, std::min(prec_, o.prec_));
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < o.cols_; ++j) {
            mpz_class s = 0;
            for (int k = 0; k < cols_; ++k) s += at(i, k) * o.at(k, j);
            r.set(i, j, s);
        }
    return r;
}

PMat PMat::transpose() const {
    PMat r(*ctx_, cols_, rows_, prec_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r.set(j, i, at(i, j));
    return r;
}

PMat PMat::reduce_to(int prec) const {
    if (prec > prec_) throw PrecisionExhausted("PMat::reduce_to: cannot gain precision");
    PMat r(*ctx_, rows_, cols_, prec);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r.set(i, j, at(i, j));
    return r;
}

PMat PMat::hstack(const PMat& o) const {
    if (rows_ != o.rows_) throw InvalidConfig("hstack: row mismatch");
    PMat r(*ctx_, rows_, cols_ + o.cols_, std::min(prec_, o.prec_));
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) r.set(i, j, at(i, j));
        for (int j = 0; j < o.cols_; ++j) r.set(i, cols_ + j, o.at(i, j));
    }
    return r;
}

PMat PMat::cols_slice(const std::vector<int>& idx) const {
    PMat r(*ctx_, rows_, (int)idx.size(), prec_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < (int)idx.size(); ++j) r.set(i, j, at(i, idx[j]));
    return r;
}

int PMat::val_at(int i, int j) const {
    const mpz_class& e = at(i, j);
    if (e == 0) return prec_;
    return (int)std::min<long>(val_p(e, ctx_->ell_z()), prec_);
}

bool PMat::operator==(const PMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    int p = std::min(prec_, o.prec_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) {
            mpz_class d = at(i, j) - o.at(i, j);
            mpz_mod(d.get_mpz_t(), d.get_mpz_t(), ctx_->ell_pow(p).get_mpz_t());
            if (d != 0) return false;
        }
    return true;
}

int Snf::rank_at_precision() const { return rank_below(S.prec()); }

int Snf::rank_below(int threshold) const {
    int r = 0;
    for (int v : divisor_vals)
        if (v < threshold) ++r;
    return r;
}

namespace {

// in-place row/col elementary ops mod ell^prec
struct Work {
    PMat A, U, V, Uinv, Vinv;

    void swap_rows(int i, int j) {
        if (i == j) return;
        for (int c = 0; c < A.cols(); ++c) {
            mpz_class t = A.at(i, c);
            A.set(i, c, A.at(j, c));
            A.set(j, c, t);
        }
        for (int c = 0; c < U.cols(); ++c) {
            mpz_class t = U.at(i, c);
            U.set(i, c, U.at(j, c));
            U.set(j, c, t);
        }
        // Uinv: swap columns i, j
        for (int r = 0; r < Uinv.rows(); ++r) {
            mpz_class t = Uinv.at(r, i);
            Uinv.set(r, i, Uinv.at(r, j));
            Uinv.set(r, j, t);
        }
    }

    void swap_cols(int i, int j) {
        if (i == j) return;
        for (int r = 0; r < A.rows(); ++r) {
            mpz_class t = A.at(r, i);
            A.set(r, i, A.at(r, j));
            A.set(r, j, t);
        }
        for (int r = 0; r < V.rows(); ++r) {
            mpz_class t = V.at(r, i);
            V.set(r, i, V.at(r, j));
            V.set(r, j, t);
        }
        for (int c = 0; c < Vinv.cols(); ++c) {
            mpz_class t = Vinv.at(i, c);
            Vinv.set(i, c, Vinv.at(j, c));
            Vinv.set(j, c, t);
        }
    }

    // row_i += q * row_j ;  U likewise; Uinv: col_j -= q * col_i
    void add_row(int i, int j, const mpz_class& q) {
        for (int c = 0; c < A.cols(); ++c) A.set(i, c, A.at(i, c) + q * A.at(j, c));
        for (int c = 0; c < U.cols(); ++c) U.set(i, c, U.at(i, c) + q * U.at(j, c));
        for (int r = 0; r < Uinv.rows(); ++r)
            Uinv.set(r, j, Uinv.at(r, j) - q * Uinv.at(r, i));
    }

    // col_i += q * col_j ; V: col_i += q*col_j ; Vinv: row_j -= q*row_i
    void add_col(int i, int j, const mpz_class& q) {
        for (int r = 0; r < A.rows(); ++r) A.set(r, i, A.at(r, i) + q * A.at(r, j));
        for (int r = 0; r < V.rows(); ++r) V.set(r, i, V.at(r, i) + q * V.at(r, j));
        for (int c = 0; c < Vinv.cols(); ++c)
            Vinv.set(j, c, Vinv.at(j, c) - q * Vinv.at(i, c));
    }

    // scale row i by unit u; Uinv col i by u^{-1}
    void scale_row(int i, const mpz_class& u, const mpz_class& uinv) {
        for (int c = 0; c < A.cols(); ++c) A.set(i, c, u * A.at(i, c));
        for (int c = 0; c < U.cols(); ++c) U.set(i, c, u * U.at(i, c));
        for (int r = 0; r < Uinv.rows(); ++r) Uinv.set(r, i, uinv * Uinv.at(r, i));
    }
};

} // namespace

Snf snf(const PMat& A0) {
    const PadicContext& ctx = A0.ctx();
    int prec = A0.prec();
    const mpz_class& mod = ctx.ell_pow(prec);
    Work w{A0, PMat::identity(ctx, A0.rows(), prec), PMat::identity(ctx, A0.cols(), prec),
           PMat::identity(ctx, A0.rows(), prec), PMat::identity(ctx, A0.cols(), prec)};

    int n = std::min(A0.rows(), A0.cols());
    std::vector<int> dv(n, prec);

    for (int k = 0; k < n; ++k) {
        // locate minimal-valuation entry in the trailing block
        int bi = -1, bj = -1, bv = prec;
        for (int i = k; i < w.A.rows(); ++i)
            for (int j = k; j < w.A.cols(); ++j) {
                int v = w.A.val_at(i, j);
                if (v < bv) { bv = v; bi = i; bj = j; }
            }
        if (bi < 0) break; // trailing block vanishes at precision
        w.swap_rows(k, bi);
        w.swap_cols(k, bj);
        // normalize pivot to exactly ell^v
        mpz_class unit = w.A.at(k, k) / ctx.ell_pow(bv);
        mpz_class uinv;
        if (!mpz_invert(uinv.get_mpz_t(), unit.get_mpz_t(), mod.get_mpz_t()))
            throw NotInvertible("snf: pivot unit inversion failed (internal)");
        w.scale_row(k, uinv, unit);
        // eliminate column and row
        for (int i = k + 1; i < w.A.rows(); ++i) {
            if (w.A.at(i, k) == 0) continue;
            mpz_class q = -(w.A.at(i, k) / ctx.ell_pow(bv));
            w.add_row(i, k, q);
        }
        for (int j = k + 1; j < w.A.cols(); ++j) {
            if (w.A.at(k, j) == 0) continue;
            mpz_class q = -(w.A.at(k, j) / ctx.ell_pow(bv));
            w.add_col(j, k, q);
        }
        dv[k] = bv;
    }

    Snf f;
    f.S = w.A;
    f.U = w.U;
    f.V = w.V;
    f.Uinv = w.Uinv;
    f.Vinv = w.Vinv;
    f.divisor_vals = dv;
    return f;
}

PMat kernel_saturated(const Snf& f) {
    const PadicContext& ctx = f.S.ctx();
    int prec = f.S.prec();
    std::vector<int> idx;
    for (int j = 0; j < f.S.cols(); ++j) {
        bool zero = j >= (int)f.divisor_vals.size() || f.divisor_vals[j] >= prec;
        if (zero) idx.push_back(j);
    }
    if (idx.empty()) return PMat(ctx, f.S.cols(), 0, prec);
    return f.V.cols_slice(idx);
}

std::optional<PMat> solve(const Snf& f, const PMat& b) {
    const PadicContext& ctx = f.S.ctx();
    int prec = std::min(f.S.prec(), b.prec());
    PMat c = f.U.reduce_to(prec) * b.reduce_to(prec); // S y = c
    PMat y(ctx, f.S.cols(), b.cols(), prec);
    int rmin = std::min(f.S.rows(), f.S.cols());
    int maxdv = 0; // division by ell^dv costs dv digits of the solution
    for (int col = 0; col < b.cols(); ++col) {
        for (int i = 0; i < f.S.rows(); ++i) {
            int dv = (i < rmin) ? f.divisor_vals[i] : prec;
            mpz_class ci = c.at(i, col);
            if (dv >= prec) {
                // zero pivot at precision: solvable only if rhs vanishes
                mpz_class r = ci % ctx.ell_pow(prec);
                if (r != 0) return std::nullopt;
                continue;
            }
            if (ci == 0) { y.set(i, col, 0); continue; }
            long vc = val_p(ci, ctx.ell_z());
            if (vc < dv) return std::nullopt;
            y.set(i, col, ci / ctx.ell_pow(dv));
            maxdv = std::max(maxdv, dv);
        }
    }
    PMat x = f.V.reduce_to(prec) * y;
    if (maxdv > 0) {
        if (prec - maxdv < 1)
            throw PrecisionExhausted("solve: no certified digits left");
        x = x.reduce_to(prec - maxdv);
    }
    return x;
}

PMat col_span_basis(const Snf& f) {
    const PadicContext& ctx = f.S.ctx();
    int prec = f.S.prec();
    std::vector<int> idx;
    for (int j = 0; j < (int)f.divisor_vals.size(); ++j)
        if (f.divisor_vals[j] < prec) idx.push_back(j);
    PMat basis(ctx, f.S.rows(), (int)idx.size(), prec);
    for (int t = 0; t < (int)idx.size(); ++t) {
        int j = idx[t];
        const mpz_class& d = ctx.ell_pow(f.divisor_vals[j]);
        for (int i = 0; i < f.S.rows(); ++i) basis.set(i, t, f.Uinv.at(i, j) * d);
    }
    return basis;
}

std::optional<int> index_valuation(const PMat& A, const PMat& B) {
    // coordinates of B's generators on a basis of span(A)
    PMat basis = col_span_basis(snf(A));
    Snf fb = snf(basis);
    if (fb.rank_at_precision() != basis.cols())
        throw NotASublattice("index_valuation: degenerate basis (internal)");
    auto coords = solve(fb, B);
    if (!coords)
        throw NotASublattice("index_valuation: B not contained in span(A) at precision");
    // index = product of the elementary divisors of the coordinate matrix
    // when it has full row rank; a rank drop means infinite at precision
    Snf fc = snf(*coords);
    int r = basis.cols();
    if ((int)fc.divisor_vals.size() < r) return std::nullopt;
    int total = 0;
    for (int i = 0; i < r; ++i) {
        if (fc.divisor_vals[i] >= fc.S.prec()) return std::nullopt;
        total += fc.divisor_vals[i];
    }
    return total;
}

PMat intersect_spans(const PMat& A, const PMat& B) {
    // kernel of [A | -B]; intersection = A * (first block of kernel)
    PMat negB = B;
    {
        PMat t(B.ctx(), B.rows(), B.cols(), B.prec());
        for (int i = 0; i < B.rows(); ++i)
            for (int j = 0; j < B.cols(); ++j) t.set(i, j, -B.at(i, j));
        negB = t;
    }
    PMat M = A.hstack(negB);
    Snf f = snf(M);
    PMat K = kernel_saturated(f);
    if (K.cols() == 0) return PMat(A.ctx(), A.rows(), 0, std::min(A.prec(), B.prec()));
    PMat Ka(K.ctx(), A.cols(), K.cols(), K.prec());
    for (int i = 0; i < A.cols(); ++i)
        for (int j = 0; j < K.cols(); ++j) Ka.set(i, j, K.at(i, j));
    PMat gens = A.reduce_to(std::min(A.prec(), Ka.prec())) * Ka;
    // normalize to a basis
    return col_span_basis(snf(gens));
}

bool same_span(const PMat& A, const PMat& B) {
    try {
        Snf fa = snf(A);
        Snf fb = snf(B);
        if (fa.rank_at_precision() != fb.rank_at_precision()) return false;
        return solve(fa, B).has_value() && solve(fb, A).has_value();
    } catch (const Error&) {
        return false;
    }
}

bool in_span(const PMat& A, const PMat& b) {
    return solve(snf(A), b).has_value();
}

} // namespace lognorm
