"""High-precision reference values frozen into the C++ tests.

Independent of the C++ code: kinematics by composing homogeneous
transforms, inertia from numerically differentiated link-centre positions,
stiffness from the closed-form statics. Run with mpmath installed:

    python3 tests/oracles/model_oracle.py
"""
import mpmath as mp

mp.mp.dps = 40

ELL, R, M = mp.mpf("0.021"), mp.mpf("0.025"), mp.mpf("0.05")
K_EL, K_BEND = mp.mpf("0.2"), mp.mpf("2.868e-4")


def transform(angle, length):
    c, s = mp.cos(angle), mp.sin(angle)
    # rotation about the joint, then translation along the rotated link axis
    return mp.matrix([[c, s, length * s], [-s, c, length * c], [0, 0, 1]])


def chain_points(q, ell=ELL):
    """Joints, link centres and tip by transform composition."""
    base = mp.matrix([[1, 0, 0], [0, 1, ell], [0, 0, 1]])
    frame, centres = base, []
    for qi in q:
        centre = frame * transform(qi, ell)
        centres.append((centre[0, 2], centre[1, 2]))
        frame = frame * transform(qi, 2 * ell)
    return centres, (frame[0, 2], frame[1, 2])


def inertia(q, ell=ELL, m=M):
    n = len(q)
    rot = m * (2 * ell) ** 2 / 12
    out = mp.zeros(n, n)
    for i in range(n):
        def centre(k, x):
            qq = list(q)
            qq[k] = x
            return chain_points(qq, ell)[0][i]
        jac = []
        for k in range(n):
            jac.append((mp.diff(lambda x: centre(k, x)[0], q[k]), mp.diff(lambda x: centre(k, x)[1], q[k])))
        for a in range(n):
            for b in range(n):
                out[a, b] += m * (jac[a][0] * jac[b][0] + jac[a][1] * jac[b][1])
                if a <= i and b <= i:
                    out[a, b] += rot
    return out


def elastic_gradient_exact(qi):
    f = lambda x: K_EL * (x * x * (ELL**2 * mp.cos(x / 2) ** 2 + R**2) - ELL**2) + K_BEND * x * x
    return mp.diff(f, qi)


def main():
    q = [mp.mpf(v) for v in ("0.05", "-0.12", "0.2", "0.01", "-0.07", "0.15")]
    _, tip = chain_points(q)
    print("tip", mp.nstr(tip[0], 20), mp.nstr(tip[1], 20))
    mi = inertia(q)
    print("M diag", [mp.nstr(mi[i, i], 20) for i in range(6)])
    print("M(0,5)", mp.nstr(mi[0, 5], 20), "M(2,3)", mp.nstr(mi[2, 3], 20))
    print("M n=1", mp.nstr(inertia([mp.mpf("0.3")])[0, 0], 20))

    print("h1(0.1)", mp.nstr(mp.mpf("0.1") * (ELL * mp.cot(mp.mpf("0.05")) + R), 25))
    print("h2(0.1)", mp.nstr(mp.mpf("0.1") * (ELL * mp.cot(mp.mpf("0.05")) - R), 25))
    print("c1+g1(5deg)", mp.nstr(mp.mpf("1.2143") - mp.mpf("2.9015") * mp.sin(mp.radians(5)), 25))

    # Per-joint relative gradient deviation of the quadratic elastic model
    # (alpha2 matching the exact curvature at 0) over [-pi/12, pi/12].
    alpha2 = 2 * (K_EL * (ELL**2 + R**2) + K_BEND)
    worst = mp.mpf(0)
    for k in range(1, 2001):
        x = mp.pi / 12 * k / 2000
        g = elastic_gradient_exact(x)
        worst = max(worst, abs(alpha2 * x - g) / abs(g))
    print("elastic gradient deviation", mp.nstr(worst, 12))

    # Open-loop transverse stiffness at the straight configuration,
    # stiff_spine preset, tip contact: K = 1 / (J1 A^-1 J1^T) with
    # A = alpha1 11^T + alpha2 I - mu (2 c2 / n) 11^T.
    n, a1, a2, c2 = 6, ELL * M * mp.mpf("9.81"), mp.mpf(50), mp.mpf("-0.06")
    j1 = mp.matrix([2 * ELL * (n - 1 - k) + 2 * ELL for k in range(n)])
    for mu in (0, 45):
        a = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                a[i, j] = a1 - mu * 2 * c2 / n + (a2 if i == j else 0)
        x = mp.lu_solve(a, j1)
        print("K_probe mu", mu, mp.nstr(1 / (j1.T * x)[0], 20))


if __name__ == "__main__":
    main()
