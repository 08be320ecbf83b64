"""Exponentially weighted complex RLS update shared by both algorithms.

One call performs the gain computation, inverse-correlation update and
filter correction for a single new regressor ``x`` with prior error
``err`` and per-sample weight 1/lam:

    u     = Phi^-1 x
    kappa = u / (alpha * lam + x^H u)
    Phi^-1 <- (Phi^-1 - kappa u^H) / alpha
    g     <- g + kappa * conj(err)

The row vector x^H Phi^-1 equals u^H because Phi^-1 is Hermitian; it is
re-symmetrized after every update to keep that property exact.

With alpha < 1 and a weakly excited regressor stream the inverse grows
as alpha^-t in the unexcited directions (forgetting-factor windup),
which makes the recursion exponentially sensitive to rounding and
produces huge gain transients when excitation returns. The update
therefore bounds the largest diagonal entry of Phi^-1 (a dimensionless,
scale-invariant quantity that stays well below the bound under normal
excitation) by rescaling the whole matrix when it is exceeded.
"""

import numpy as np

DEFAULT_PHI_INV_CAP = 16.0


def rls_update(phi_inv: np.ndarray, g: np.ndarray, x: np.ndarray, err: complex,
               alpha: float, lam: float, counter=None,
               cap: float = DEFAULT_PHI_INV_CAP) -> None:
    """Update ``phi_inv`` and ``g`` in place for one weighted sample."""
    n = x.shape[0]
    u = phi_inv @ x
    beta = float(np.real(np.vdot(x, u)))
    den = alpha * lam + beta
    kappa = u / den
    g += kappa * np.conj(err)
    phi_inv -= np.outer(kappa, np.conj(u))
    phi_inv *= 1.0 / alpha
    # keep Hermitian symmetry exact
    phi_inv[:] = 0.5 * (phi_inv + phi_inv.conj().T)
    if counter is not None:
        counter.add_cc(n * n)      # matrix-vector product
        counter.add_cc(n)          # x^H u
        counter.add_rr(2)          # alpha*lam, 1/den
        counter.add_rc(n)          # gain scaling
        counter.add_cc(n)          # filter correction
        counter.add_cc(n * n)      # rank-1 downdate
        counter.add_rc(n * n)      # 1/alpha scaling
        counter.add_rc(n * n)      # re-symmetrization
    # anti-windup bound
    peak = float(np.max(phi_inv.diagonal().real))
    if peak > cap:
        phi_inv *= cap / peak
        if counter is not None:
            counter.add_rc(n * n)
