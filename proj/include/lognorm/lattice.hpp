#pragma once

#include <optional>
#include <vector>

#include "lognorm/padic.hpp"

namespace lognorm {

// Dense matrix over Z/ell^prec, prec <= N.  The single matrix-level
// precision is the min of the precisions of the entries that built it;
// entries are kept canonical mod ell^prec.
class PMat {
public:
    PMat() : ctx_(nullptr), rows_(0), cols_(0), prec_(0) {}
    PMat(const PadicContext& ctx, int rows, int cols, int prec);
    static PMat identity(const PadicContext& ctx, int n, int prec);
    static PMat from_padic(const std::vector<std::vector<PadicInt>>& entries);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int prec() const { return prec_; }
    const PadicContext& ctx() const { return *ctx_; }

    const mpz_class& at(int i, int j) const { return a_[(size_t)i * cols_ + j]; }
    void set(int i, int j, const mpz_class& v);

    PMat operator*(const PMat& o) const;
    PMat transpose() const;
    PMat reduce_to(int prec) const;
    PMat hstack(const PMat& o) const;
    PMat cols_slice(const std::vector<int>& idx) const;

    // v_ell of an entry, capped at prec
    int val_at(int i, int j) const;

    bool operator==(const PMat& o) const;

private:
    const PadicContext* ctx_;
    int rows_, cols_, prec_;
    std::vector<mpz_class> a_;
    void canon(int i, int j);
};

// Smith normal form over Z/ell^prec with minimal-valuation pivoting.
// S = U * A * V with U, V invertible mod ell^prec; S diagonal with
// divisor valuations nondecreasing.  A divisor valuation equal to prec
// means "zero at this precision"; valuations strictly below prec are
// certain for any lift of A.
struct Snf {
    PMat S, U, V;              // S = U A V
    PMat Uinv, Vinv;           // inverses, same precision
    std::vector<int> divisor_vals; // length min(rows, cols), capped at prec

    int rank_at_precision() const; // # divisors with val < prec
    // # divisors with val < threshold
    int rank_below(int threshold) const;
};

Snf snf(const PMat& A);

// Saturated kernel at precision: the columns of V corresponding to
// divisors that vanish at precision.  Basis vectors are primitive
// (columns of an invertible matrix).  Returns an n x k matrix.
PMat kernel_saturated(const Snf& f);

// Solve A x = b at precision.  Returns nullopt when no solution exists
// at the matrix precision.  The solution is defined modulo the kernel
// and modulo ell^(prec - max pivot valuation used).
std::optional<PMat> solve(const Snf& f, const PMat& b);

// Column span of A as a Z_ell-lattice: basis vectors ell^{v_j} * u_j,
// one per divisor with val < prec.  Returns an n x rank matrix whose
// columns form a basis of the span.
PMat col_span_basis(const Snf& f);

// Given lattices L_A = colspan(A) and L_B = colspan(B) in the same
// coordinate space with L_B <= L_A, the index (L_A : L_B) as ell^k.
// Throws NotASublattice when containment fails at precision, and
// returns nullopt (infinite at precision) when rank drops.
std::optional<int> index_valuation(const PMat& A, const PMat& B);

// intersection of colspan(A) and colspan(B), as a basis matrix
PMat intersect_spans(const PMat& A, const PMat& B);

// do the two column spans coincide at precision?
bool same_span(const PMat& A, const PMat& B);

// is b in colspan(A) at precision?
bool in_span(const PMat& A, const PMat& b);

} // namespace lognorm
