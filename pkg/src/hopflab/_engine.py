"""Low-level integration kernels.

States live in complex form z = x + i y; the drift is f = A z - B |z|^2 z
with A = alpha + i beta, B = a - i b.  A real 2x2 matrix M acting on the
tangent plane is stored as the complex pair (P, Q) representing the R-linear
map w -> P w + Q conj(w):

    columns        col1 = P + Q,  col2 = i (P - Q)
    composition    (p2,q2) o (p1,q1) = (p2 p1 + q2 conj(q1), p2 q1 + q2 conj(p1))
    trace          2 Re P
    det            |P|^2 - |Q|^2
    singular vals  |P| + |Q|,  ||P| - |Q||

The Jacobian of the drift is the pair (A - 2 B |z|^2, -B z^2).  The pair form
cuts the per-step operation count roughly in half versus explicit 2x2
arithmetic, which matters because every estimator in the package reduces to
stepping these recursions 1e6..1e8 times.

Two engines implement the same recursions: a scalar engine (python complex,
fastest for a single trajectory) and a batch engine (numpy arrays, fastest
for ensembles).  Each public estimator uses one engine consistently, and
batch compositions are fixed functions of the inputs so results never depend
on worker count or scheduling.
"""

import math

import numpy as np

from .noise import generator

BLOCK_STEPS = 2048
SCALAR_BLOCK = 65536
WIDTH_CHUNK = 4096
BLOWUP_NORM2 = 1e16  # squared-norm guard, |z| > 1e8


class BlowUpError(RuntimeError):
    """State norm exceeded the blow-up guard (step-size failure)."""


class TangentBlowUpError(RuntimeError):
    """Tangent propagation overflowed; callers should renormalize."""


def complex_coeffs(p):
    return complex(p.alpha, p.beta), complex(p.a, -p.b)


def pq_to_matrix(P, Q):
    """Real 2x2 matrix of the map w -> P w + Q conj(w)."""
    return np.array([[P.real + Q.real, -P.imag + Q.imag],
                     [P.imag + Q.imag, P.real - Q.real]])


def matrix_to_pq(m):
    P = complex(m[0, 0] + m[1, 1], m[1, 0] - m[0, 1]) / 2
    Q = complex(m[0, 0] - m[1, 1], m[1, 0] + m[0, 1]) / 2
    return P, Q


def svd2_from_pq(P, Q):
    """Singular values (largest, smallest) of the matrix with pair (P, Q)."""
    ap, aq = abs(P), abs(Q)
    return ap + aq, abs(ap - aq)


# ---------------------------------------------------------------------------
# scalar engine
# ---------------------------------------------------------------------------

def run_lyapunov_scalar(p, path_seed, z0, T, dt, burn_in, renorm_every, n_batches=20):
    """Joint EM + Heun tangent run with QR renormalization, single trajectory.

    Returns (sum_lnr1, sum_lnr2, batch1, batch12, t_eff) where batch arrays
    hold per-batch sums of ln r1 and ln r1 + ln r2 over the post-burn-in
    window of effective length t_eff.
    """
    A, B = complex_coeffs(p)
    n = int(round(T / dt))
    burn_steps = int(round(burn_in / dt))
    burn_steps = ((burn_steps + renorm_every - 1) // renorm_every) * renorm_every
    if burn_steps >= n:
        raise ValueError("burn_in must be smaller than T")
    sq = p.sigma * math.sqrt(dt)
    rng = generator(path_seed)
    z = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    P, Q = 1.0 + 0j, 0.0 + 0j
    s = z.real * z.real + z.imag * z.imag
    pk = A - 2 * B * s
    qk = -B * z * z
    sum1 = sum2 = 0.0
    batch1 = np.zeros(n_batches)
    batch12 = np.zeros(n_batches)
    tail = n - burn_steps
    k = 0
    while k < n:
        m = min(SCALAR_BLOCK, n - k)
        dw = rng.standard_normal((m, 2))
        for j in range(m):
            s = z.real * z.real + z.imag * z.imag
            z = z + dt * (A * z - B * s * z) + sq * complex(dw[j, 0], dw[j, 1])
            s2 = z.real * z.real + z.imag * z.imag
            p2 = A - 2 * B * s2
            q2 = -B * z * z
            K1P = pk * P + qk * Q.conjugate()
            K1Q = pk * Q + qk * P.conjugate()
            P1 = P + dt * K1P
            Q1 = Q + dt * K1Q
            K2P = p2 * P1 + q2 * Q1.conjugate()
            K2Q = p2 * Q1 + q2 * P1.conjugate()
            P = P + 0.5 * dt * (K1P + K2P)
            Q = Q + 0.5 * dt * (K1Q + K2Q)
            pk, qk = p2, q2
            k += 1
            if k % renorm_every == 0:
                c1 = P + Q
                c2 = 1j * (P - Q)
                r1 = abs(c1)
                if not (r1 > 0 and math.isfinite(r1) and s2 < BLOWUP_NORM2):
                    raise BlowUpError(f"blow-up at t={k * dt:.6g}")
                q1 = c1 / r1
                pr = (q1.conjugate() * c2).real
                c2p = c2 - pr * q1
                r2 = abs(c2p)
                q2v = c2p / r2
                P = 0.5 * (q1 - 1j * q2v)
                Q = 0.5 * (q1 + 1j * q2v)
                if k > burn_steps:
                    l1 = math.log(r1)
                    l2 = math.log(r2)
                    sum1 += l1
                    sum2 += l2
                    b = min(n_batches - 1, (k - burn_steps - 1) * n_batches // tail)
                    batch1[b] += l1
                    batch12[b] += l1 + l2
    return sum1, sum2, batch1, batch12, tail * dt


# ---------------------------------------------------------------------------
# batch engine
# ---------------------------------------------------------------------------

def _draw_block(gens, m, out):
    for i, g in enumerate(gens):
        d = g.standard_normal((m, 2))
        out[i] = d[:, 0] + 1j * d[:, 1]


def run_lyapunov_batch(A, B, sigma, seeds, inits, T, dt, burn_in, renorm_every,
                       n_batches=20):
    """Vectorized joint runs with per-trajectory noise streams.

    A, B, sigma are scalars or arrays broadcastable to the ensemble width;
    each trajectory draws from its own Philox stream so any chunking of the
    ensemble yields the same per-trajectory results.

    Returns dict with sum1, sum12, batch1, batch12 ((w, n_batches)), t_eff,
    failed (bool array).
    """
    seeds = list(seeds)
    w = len(seeds)
    A = np.broadcast_to(np.asarray(A, complex), (w,)).copy()
    B = np.broadcast_to(np.asarray(B, complex), (w,)).copy()
    sq = np.broadcast_to(np.asarray(sigma, float), (w,)).copy() * math.sqrt(dt)
    z = np.asarray(inits, complex).copy()
    n = int(round(T / dt))
    burn_steps = int(round(burn_in / dt))
    burn_steps = ((burn_steps + renorm_every - 1) // renorm_every) * renorm_every
    if burn_steps >= n:
        raise ValueError("burn_in must be smaller than T")
    tail = n - burn_steps
    gens = [generator(s) for s in seeds]
    P = np.ones(w, complex)
    Q = np.zeros(w, complex)
    sum1 = np.zeros(w)
    sum2 = np.zeros(w)
    batch1 = np.zeros((w, n_batches))
    batch12 = np.zeros((w, n_batches))
    failed = np.zeros(w, bool)
    s = z.real ** 2 + z.imag ** 2
    pk = A - 2 * B * s
    qk = -B * z * z
    dwc = np.empty((w, BLOCK_STEPS), complex)
    k = 0
    with np.errstate(all="ignore"):
        while k < n:
            m = min(BLOCK_STEPS, n - k)
            _draw_block(gens, m, dwc[:, :m])
            for j in range(m):
                s = z.real ** 2 + z.imag ** 2
                z = z + dt * (A * z - B * s * z) + sq * dwc[:, j]
                s2 = z.real ** 2 + z.imag ** 2
                p2 = A - 2 * B * s2
                q2 = -B * z * z
                K1P = pk * P + qk * np.conj(Q)
                K1Q = pk * Q + qk * np.conj(P)
                P1 = P + dt * K1P
                Q1 = Q + dt * K1Q
                K2P = p2 * P1 + q2 * np.conj(Q1)
                K2Q = p2 * Q1 + q2 * np.conj(P1)
                P = P + 0.5 * dt * (K1P + K2P)
                Q = Q + 0.5 * dt * (K1Q + K2Q)
                pk, qk = p2, q2
                k += 1
                if k % renorm_every == 0:
                    bad = ~np.isfinite(s2) | (s2 > BLOWUP_NORM2)
                    if bad.any():
                        fresh = bad & ~failed
                        if fresh.any():
                            failed |= fresh
                            z[failed] = 0
                            P[failed] = 1
                            Q[failed] = 0
                            pk[failed] = A[failed]
                            qk[failed] = 0
                    c1 = P + Q
                    c2 = 1j * (P - Q)
                    r1 = np.abs(c1)
                    q1 = c1 / r1
                    pr = (np.conj(q1) * c2).real
                    c2p = c2 - pr * q1
                    r2 = np.abs(c2p)
                    q2v = c2p / r2
                    P = 0.5 * (q1 - 1j * q2v)
                    Q = 0.5 * (q1 + 1j * q2v)
                    if k > burn_steps:
                        l1 = np.log(r1)
                        l2 = np.log(r2)
                        sum1 += l1
                        sum2 += l2
                        b = min(n_batches - 1, (k - burn_steps - 1) * n_batches // tail)
                        batch1[:, b] += l1
                        batch12[:, b] += l1 + l2
    return {"sum1": sum1, "sum12": sum1 + sum2, "batch1": batch1,
            "batch12": batch12, "t_eff": tail * dt, "failed": failed}


def run_ftle_batch(A, B, sigma, seeds, inits, horizons, dt, renorm_every=10,
                   pullback_steps=0):
    """FTLE samples at several horizons, per-trajectory streams.

    After an optional trajectory-only pullback lead-in of ``pullback_steps``
    the tangent pair starts from the identity; at each horizon (in steps,
    sorted ascending) the log singular values of the accumulated tangent are
    recorded.  ln(sigma_min) is recovered from the exactly accumulated
    log-determinant to avoid cancellation at large horizons.

    Returns dict with lnsup, lninf of shape (w, len(horizons)), ln_det, and
    failed flags.
    """
    seeds = list(seeds)
    w = len(seeds)
    A = np.broadcast_to(np.asarray(A, complex), (w,)).copy()
    B = np.broadcast_to(np.asarray(B, complex), (w,)).copy()
    sq = np.broadcast_to(np.asarray(sigma, float), (w,)).copy() * math.sqrt(dt)
    z = np.asarray(inits, complex).copy()
    horizons = list(horizons)
    n = horizons[-1]
    nh = len(horizons)
    lnsup = np.full((w, nh), np.nan)
    lninf = np.full((w, nh), np.nan)
    lndets = np.full((w, nh), np.nan)
    failed = np.zeros(w, bool)
    out = {"lnsup": lnsup, "lninf": lninf, "ln_det": lndets, "failed": failed}

    gens = [generator(s) for s in seeds]
    dwc = np.empty((w, BLOCK_STEPS), complex)
    with np.errstate(all="ignore"):
        # pullback lead-in, trajectory only
        k = 0
        while k < pullback_steps:
            m = min(BLOCK_STEPS, pullback_steps - k)
            _draw_block(gens, m, dwc[:, :m])
            for j in range(m):
                s = z.real ** 2 + z.imag ** 2
                z = z + dt * (A * z - B * s * z) + sq * dwc[:, j]
                k += 1
            bad = ~np.isfinite(z.real) | ((z.real ** 2 + z.imag ** 2) > BLOWUP_NORM2)
            if bad.any():
                failed |= bad
                z[failed] = 0

        P = np.ones(w, complex)
        Q = np.zeros(w, complex)
        logscale = np.zeros(w)
        lndet = np.zeros(w)
        detacc = np.ones(w)
        s = z.real ** 2 + z.imag ** 2
        pk = A - 2 * B * s
        qk = -B * z * z
        k = 0
        hi = 0
        while k < n:
            m = min(BLOCK_STEPS, n - k)
            _draw_block(gens, m, dwc[:, :m])
            for j in range(m):
                s = z.real ** 2 + z.imag ** 2
                z = z + dt * (A * z - B * s * z) + sq * dwc[:, j]
                s2 = z.real ** 2 + z.imag ** 2
                p2 = A - 2 * B * s2
                q2 = -B * z * z
                ps = pk + p2 + dt * (p2 * pk + q2 * np.conj(qk))
                qs = qk + q2 + dt * (p2 * qk + q2 * np.conj(pk))
                pF = 1 + 0.5 * dt * ps
                qF = 0.5 * dt * qs
                detacc *= (pF.real ** 2 + pF.imag ** 2) - (qF.real ** 2 + qF.imag ** 2)
                K1P = pk * P + qk * np.conj(Q)
                K1Q = pk * Q + qk * np.conj(P)
                P1 = P + dt * K1P
                Q1 = Q + dt * K1Q
                K2P = p2 * P1 + q2 * np.conj(Q1)
                K2Q = p2 * Q1 + q2 * np.conj(P1)
                P = P + 0.5 * dt * (K1P + K2P)
                Q = Q + 0.5 * dt * (K1Q + K2Q)
                pk, qk = p2, q2
                k += 1
                if k % renorm_every == 0 or k == n:
                    ap = np.abs(P)
                    aq = np.abs(Q)
                    sc = np.hypot(ap, aq)
                    bad = ~np.isfinite(sc) | (sc == 0) | (s2 > BLOWUP_NORM2) | ~np.isfinite(detacc) | (detacc <= 0)
                    if bad.any():
                        fresh = bad & ~failed
                        if fresh.any():
                            failed |= fresh
                            z[failed] = 0
                            P[failed] = 1
                            Q[failed] = 0
                            pk[failed] = A[failed]
                            qk[failed] = 0
                            detacc[failed] = 1
                            sc = np.hypot(np.abs(P), np.abs(Q))
                    logscale += np.log(sc)
                    P /= sc
                    Q /= sc
                    lndet += np.log(detacc)
                    detacc[:] = 1
                while hi < nh and horizons[hi] == k:
                    l1 = logscale + np.log(np.abs(P) + np.abs(Q))
                    # fold in the determinant factors pending since the last
                    # renormalization (horizons need not align with it)
                    ld = lndet + np.log(detacc)
                    lnsup[:, hi] = l1
                    lninf[:, hi] = ld - l1
                    lndets[:, hi] = ld
                    hi += 1
    return out


def run_cloud(A, B, sigma, path_seed, inits, n_steps, dt, snapshot_steps=()):
    """Flow many initial conditions under ONE shared noise path.

    Returns (final_states, snapshots dict step->states copy, failed flags).
    """
    z = np.asarray(inits, complex).copy()
    pending = sorted(set(snapshot_steps))
    snaps = {}
    if pending and pending[0] == 0:
        pending.pop(0)
        snaps[0] = z.copy()
    failed = np.zeros(z.shape[0], bool)
    rng = generator(path_seed)
    sq = sigma * math.sqrt(dt)
    k = 0
    with np.errstate(all="ignore"):
        while k < n_steps:
            m = min(BLOCK_STEPS, n_steps - k)
            d = rng.standard_normal((m, 2))
            dwc = d[:, 0] + 1j * d[:, 1]
            for j in range(m):
                s = z.real ** 2 + z.imag ** 2
                z = z + dt * (A * z - B * s * z) + sq * dwc[j]
                k += 1
                if pending and k == pending[0]:
                    pending.pop(0)
                    snaps[k] = z.copy()
            bad = ~np.isfinite(z.real) | ((z.real ** 2 + z.imag ** 2) > BLOWUP_NORM2)
            failed |= bad
    return z, snaps, failed


def run_pair_margins(A, B, sigma, seeds, u0, v0, n_steps, dt, alpha):
    """Per-trial worst ratio of d(t) to exp(alpha t) d(0) over the grid.

    Each trial runs the pair (u0_i, v0_i) under its own stream; returns the
    array of per-trial worst margins max_t d(t) exp(-alpha t)/d(0) - 1.
    """
    seeds = list(seeds)
    w = len(seeds)
    U = np.asarray(u0, complex).copy()
    V = np.asarray(v0, complex).copy()
    d0 = np.abs(U - V)
    if np.any(d0 == 0):
        raise ValueError("initial conditions of a pair must differ")
    gens = [generator(s) for s in seeds]
    sq = sigma * math.sqrt(dt)
    worst = np.zeros(w)
    dwc = np.empty((w, BLOCK_STEPS), complex)
    k = 0
    while k < n_steps:
        m = min(BLOCK_STEPS, n_steps - k)
        _draw_block(gens, m, dwc[:, :m])
        for j in range(m):
            su = U.real ** 2 + U.imag ** 2
            sv = V.real ** 2 + V.imag ** 2
            U = U + dt * (A * U - B * su * U) + sq * dwc[:, j]
            V = V + dt * (A * V - B * sv * V) + sq * dwc[:, j]
            k += 1
            ratio = np.abs(U - V) * (math.exp(-alpha * k * dt) / d0)
            np.maximum(worst, ratio, out=worst)
    return worst - 1.0


def run_radial_histogram(p, path_seed, z0, n_steps, dt, burn_steps, edges):
    """Histogram of s = |z|^2 along one trajectory (scalar engine)."""
    A, B = complex_coeffs(p)
    sq = p.sigma * math.sqrt(dt)
    rng = generator(path_seed)
    z = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    kept = 0
    svals = np.empty(SCALAR_BLOCK)
    k = 0
    while k < n_steps:
        m = min(SCALAR_BLOCK, n_steps - k)
        dw = rng.standard_normal((m, 2))
        for j in range(m):
            s = z.real * z.real + z.imag * z.imag
            z = z + dt * (A * z - B * s * z) + sq * complex(dw[j, 0], dw[j, 1])
            svals[j] = z.real * z.real + z.imag * z.imag
        if not (math.isfinite(svals[m - 1]) and svals[m - 1] < BLOWUP_NORM2):
            raise BlowUpError(f"blow-up near step {k + m}")
        lo = max(0, burn_steps - k)
        if lo < m:
            c, _ = np.histogram(svals[lo:m], bins=edges)
            counts += c
            kept += m - lo
        k += m
    return counts, kept


# ---------------------------------------------------------------------------
# path-driven loops (public flow API)
# ---------------------------------------------------------------------------

def em_states(p, increments, z0, dt):
    """Euler-Maruyama states along given increments; raises on blow-up."""
    A, B = complex_coeffs(p)
    sig = p.sigma
    n = increments.shape[0]
    out = np.empty(n + 1, complex)
    z = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    out[0] = z
    for k in range(n):
        s = z.real * z.real + z.imag * z.imag
        if not (math.isfinite(s) and s < BLOWUP_NORM2):
            raise BlowUpError(f"blow-up at step {k} (t offset {k * dt:.6g})")
        z = z + dt * (A * z - B * s * z) + sig * complex(increments[k, 0], increments[k, 1])
        out[k + 1] = z
    return out


def heun_tangent_along(p, states, dt):
    """Heun propagation of the tangent pair along stored complex states.

    Stage matrices are the Jacobians at consecutive grid states.  Returns
    arrays (P_k, Q_k) with P_0 = 1, Q_0 = 0; raises TangentBlowUpError on
    overflow.
    """
    A, B = complex_coeffs(p)
    n = states.shape[0] - 1
    P = np.empty(n + 1, complex)
    Q = np.empty(n + 1, complex)
    P[0], Q[0] = 1.0, 0.0
    z = states[0]
    s = z.real * z.real + z.imag * z.imag
    pk = A - 2 * B * s
    qk = -B * z * z
    cp, cq = P[0], Q[0]
    for k in range(n):
        z2 = states[k + 1]
        s2 = z2.real * z2.real + z2.imag * z2.imag
        p2 = A - 2 * B * s2
        q2 = -B * z2 * z2
        K1P = pk * cp + qk * cq.conjugate()
        K1Q = pk * cq + qk * cp.conjugate()
        P1 = cp + dt * K1P
        Q1 = cq + dt * K1Q
        K2P = p2 * P1 + q2 * Q1.conjugate()
        K2Q = p2 * Q1 + q2 * P1.conjugate()
        cp = cp + 0.5 * dt * (K1P + K2P)
        cq = cq + 0.5 * dt * (K1Q + K2Q)
        if not (math.isfinite(cp.real) and math.isfinite(cq.real)):
            raise TangentBlowUpError(f"tangent blow-up at step {k + 1}")
        P[k + 1], Q[k + 1] = cp, cq
        pk, qk = p2, q2
    return P, Q


def heun_controlled(p, control, z0, n_steps, dt):
    """Deterministic Heun for dz/dt = f(z) + sigma*g'(t), g' held per step."""
    A, B = complex_coeffs(p)
    derivs = control.step_derivatives()
    if derivs.shape[0] < n_steps:
        raise ValueError("control path shorter than integration window")
    u = p.sigma * (derivs[:, 0] + 1j * derivs[:, 1])
    out = np.empty(n_steps + 1, complex)
    z = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    out[0] = z
    for k in range(n_steps):
        s = z.real * z.real + z.imag * z.imag
        k1 = A * z - B * s * z + u[k]
        z1 = z + dt * k1
        s1 = z1.real * z1.real + z1.imag * z1.imag
        k2 = A * z1 - B * s1 * z1 + u[k]
        z = z + 0.5 * dt * (k1 + k2)
        if not math.isfinite(z.real):
            raise BlowUpError(f"blow-up at step {k + 1}")
        out[k + 1] = z
    return out


def heun_rde_ou(p, increments, c, z0, dt):
    """OU-conjugated random ODE route to the same SDE solution.

    Builds the OU series from the increments (exact update, innovation from
    the same stream), integrates dPsi/dt = f(Psi + sigma Z*) + c sigma Z* by
    Heun with Z* held per step, and back-transforms phi = Psi + sigma Z*.
    The OU starts at 0, so Psi(0) = z0.
    """
    A, B = complex_coeffs(p)
    sig = p.sigma
    n = increments.shape[0]
    decay = math.exp(-c * dt)
    scale = math.sqrt((1 - math.exp(-2 * c * dt)) / (2 * c * dt))
    zs = 0.0 + 0j
    psi = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    out = np.empty(n + 1, complex)
    out[0] = psi + sig * zs
    for k in range(n):
        w = psi + sig * zs
        s = w.real * w.real + w.imag * w.imag
        k1 = A * w - B * s * w + c * sig * zs
        w1 = psi + dt * k1 + sig * zs
        s1 = w1.real * w1.real + w1.imag * w1.imag
        k2 = A * w1 - B * s1 * w1 + c * sig * zs
        psi = psi + 0.5 * dt * (k1 + k2)
        zs = decay * zs + scale * complex(increments[k, 0], increments[k, 1])
        out[k + 1] = psi + sig * zs
        if not math.isfinite(psi.real):
            raise BlowUpError(f"blow-up at step {k + 1}")
    return out


def joint_with_records(p, increments, z0, dt, renorm_every):
    """Path-driven joint run recording per-renorm log norms.

    Returns (states, renorm_steps, lnr1, lnr2).  Identical trajectory to
    `em_states`; the tangent is propagated with QR renormalization and the
    accumulated sums reproduce the unrenormalized tangent blockwise.
    """
    A, B = complex_coeffs(p)
    sig = p.sigma
    n = increments.shape[0]
    states = np.empty(n + 1, complex)
    z = complex(z0[0], z0[1]) if not isinstance(z0, complex) else z0
    states[0] = z
    P, Q = 1.0 + 0j, 0.0 + 0j
    s = z.real * z.real + z.imag * z.imag
    pk = A - 2 * B * s
    qk = -B * z * z
    steps, l1s, l2s = [], [], []
    for k in range(n):
        s = z.real * z.real + z.imag * z.imag
        if not (math.isfinite(s) and s < BLOWUP_NORM2):
            raise BlowUpError(f"blow-up at step {k}")
        z = z + dt * (A * z - B * s * z) + sig * complex(increments[k, 0], increments[k, 1])
        states[k + 1] = z
        s2 = z.real * z.real + z.imag * z.imag
        p2 = A - 2 * B * s2
        q2 = -B * z * z
        K1P = pk * P + qk * Q.conjugate()
        K1Q = pk * Q + qk * P.conjugate()
        P1 = P + dt * K1P
        Q1 = Q + dt * K1Q
        K2P = p2 * P1 + q2 * Q1.conjugate()
        K2Q = p2 * Q1 + q2 * P1.conjugate()
        P = P + 0.5 * dt * (K1P + K2P)
        Q = Q + 0.5 * dt * (K1Q + K2Q)
        pk, qk = p2, q2
        if (k + 1) % renorm_every == 0 or k + 1 == n:
            c1 = P + Q
            c2 = 1j * (P - Q)
            r1 = abs(c1)
            q1 = c1 / r1
            pr = (q1.conjugate() * c2).real
            c2p = c2 - pr * q1
            r2 = abs(c2p)
            q2v = c2p / r2
            P = 0.5 * (q1 - 1j * q2v)
            Q = 0.5 * (q1 + 1j * q2v)
            steps.append(k + 1)
            l1s.append(math.log(r1))
            l2s.append(math.log(r2))
    return states, np.array(steps), np.array(l1s), np.array(l2s)


# ---------------------------------------------------------------------------
# stationary radial sampling
# ---------------------------------------------------------------------------

def radial_cdf_table(p, n_nodes=10000):
    """Tabulated CDF of s = x^2+y^2 under the stationary law.

    10^4 nodes on [0, s_max] with s_max placed where the Gaussian tail mass
    is below 1e-12; interior accuracy comes from composite Simpson on the
    doubled grid.  Returns (s_nodes, cdf) with cdf[0] = 0, cdf[-1] = 1.
    """
    al, a, sig = p.alpha, p.a, p.sigma
    if sig <= 0:
        raise ValueError("sigma must be > 0")
    s_peak = max(al / a, 0.0)
    s_max = s_peak + 8.0 * sig / math.sqrt(a)
    fine = np.linspace(0.0, s_max, 2 * n_nodes + 1)
    expo = (2 * al * fine - a * fine ** 2) / (2 * sig * sig)
    g = np.exp(expo - expo.max())
    h = fine[1] - fine[0]
    # Simpson mass on each node pair [2i, 2i+2]
    seg = (h / 3.0) * (g[0:-1:2] + 4.0 * g[1::2] + g[2::2])
    cdf = np.empty(n_nodes + 1)
    cdf[0] = 0.0
    np.cumsum(seg, out=cdf[1:])
    cdf /= cdf[-1]
    return fine[0::2].copy(), cdf


def sample_radial(p, n, rng, table=None):
    """Draw s values by inverse CDF with linear interpolation between nodes."""
    s_nodes, cdf = table if table is not None else radial_cdf_table(p)
    u = rng.uniform(0.0, 1.0, size=n)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.clip(idx, 1, len(cdf) - 1)
    c0 = cdf[idx - 1]
    c1 = cdf[idx]
    w = (u - c0) / np.where(c1 > c0, c1 - c0, 1.0)
    return s_nodes[idx - 1] + w * (s_nodes[idx] - s_nodes[idx - 1])


def sample_states(p, n, rng, table=None):
    """Stationary-density samples as complex states."""
    s = sample_radial(p, n, rng, table)
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    return np.sqrt(s) * np.exp(1j * theta)
