"""Curvature coefficient functions of the profile, written in (phi, zeta).

The mean-curvature expansion of a perturbed unduloid involves arc-length
derivatives of the profile. On the profile curve they are all functions of
the radius ``phi`` and the slope ``zeta = dphi/dpsi``:

    psidot  = phi / sqrt(1 + zeta**2)        (= phi**2 + tau)
    phidot  = zeta * psidot
    psiddot = 2 * phi * phidot
    phiddot = phi - 2 * phi * psidot

with ``tau`` the first integral. Only arithmetic and ``** 0.5`` are used,
so every function accepts floats, numpy arrays and complex arguments (the
latter for complex-step differentiation).
"""


def dotted(phi, zeta):
    """Return ``(tau, psidot, phidot, psiddot, phiddot)``."""
    psid = phi / (1.0 + zeta * zeta) ** 0.5
    tau = psid - phi * phi
    phid = zeta * psid
    psidd = 2.0 * phi * phid
    phidd = phi - 2.0 * phi * psid
    return tau, psid, phid, psidd, phidd


def f1_a(phi, zeta):
    """Coefficient of ``a = Pi0 R(U, X0, U, X0)`` in ``F1 * Pi0(R1)``."""
    tau, psid, phid, psidd, _ = dotted(phi, zeta)
    return (phi * phid * psidd + 2.0 * phid * phid * psid + psid ** 3
            - (phi * phi - tau) * psid * psid - phi * phi * phid * phid) / (phi * phi)


def f1_b(phi, zeta):
    """Coefficient of ``b = Pi0 R(U, U_theta, U, U_theta)`` in ``F1 * Pi0(R1)``."""
    _, psid, _, _, _ = dotted(phi, zeta)
    return psid / 3.0


def f1_star(phi, zeta, a, b):
    """``F1 * Pi0(R1)`` for curvature scalars ``a`` and ``b``."""
    return f1_b(phi, zeta) * b + f1_a(phi, zeta) * a


def f2(phi, zeta):
    """First-mode coefficient ``(2/3) phidot``."""
    _, _, phid, _, _ = dotted(phi, zeta)
    return 2.0 * phid / 3.0


def f4(phi, zeta):
    """Coefficient multiplying the 1st-mode coupling ``xi`` in the 0th mode."""
    tau, psid, phid, psidd, phidd = dotted(phi, zeta)
    c = 2.0 / 3.0
    return (c * phid * phidd + c * phid ** 3 / phi - c * psid * psidd
            - 2.0 * c * (phi * phi - tau) * phid * psid / phi
            + 2.0 * c * phi * phid * psid) / (phi * phi)


def average_one_integrands(phi, zeta):
    """The two integrands of the averaging identity for the geodesic operator.

    Returns ``(u, v)`` where ``u`` is the potential coefficient divided by
    ``phi`` and ``v = phi**2 / psidot**3``; over one period
    ``int u * int v = (period length)**2``.
    """
    tau, psid, phid, psidd, _ = dotted(phi, zeta)
    u = (2.0 * phid * psidd + 2.0 * phid * phid * psid / phi + psid ** 3 / phi
         - 2.0 * psid * psid * (phi * phi - tau) / phi
         - 2.0 * phi * phid * phid) / phi
    v = phi * phi / psid ** 3
    return u, v
