"""Compiled inner loop: continuous-time allocator flow plus platform dynamics.

These mirror ``actuation``, ``allocator`` and ``dynamics`` one-for-one and
exist only for speed; the test suite checks them against the numpy
reference implementations. Small fixed-size linear algebra is written out
by hand to keep the per-evaluation cost in the microsecond range.
"""

import numpy as np
from numba import njit

N = 6
NX = 18


@njit(cache=True, error_model="numpy", inline="always")
def wrench_and_jacobian(x, geo, box, eps, wrench, M, sdiag, xs):
    """Fill h_a(sat(x)), dh_a(sat(x)) * S(x), S(x) and sat(x) in place."""
    cg, sg, px, py, cf, ctau = geo
    lower, upper = box[0], box[1]
    for j in range(NX):
        v = x[j]
        if v < lower[j]:
            xs[j] = lower[j]
            sdiag[j] = eps
        elif v > upper[j]:
            xs[j] = upper[j]
            sdiag[j] = eps
        else:
            xs[j] = v
            sdiag[j] = 1.0
    for r in range(6):
        wrench[r] = 0.0
    for i in range(N):
        a, b, w = xs[i], xs[N + i], xs[2 * N + i]
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        c, s = cg[i], sg[i]
        zx, zy, zz = sb * ca, -sa, cb * ca
        ax, ay, az = -sb * sa, -ca, -cb * sa
        bx, bz = cb * ca, -sb * ca
        z0, z1, z2 = c * zx - s * zy, s * zx + c * zy, zz
        thrust = cf[i] * w * w
        drag = ctau[i] * w * abs(w)
        fx, fy, fz = thrust * z0, thrust * z1, thrust * z2
        pxi, pyi = px[i], py[i]
        wrench[0] += fx
        wrench[1] += fy
        wrench[2] += fz
        wrench[3] += -drag * z0 + pyi * fz
        wrench[4] += -drag * z1 - pxi * fz
        wrench[5] += -drag * z2 + pxi * fy - pyi * fx
        for k in range(3):
            if k == 0:
                d0, d1, d2 = c * ax - s * ay, s * ax + c * ay, az
                sf, sd = thrust, drag
            elif k == 1:
                d0, d1, d2 = c * bx, s * bx, bz
                sf, sd = thrust, drag
            else:
                d0, d1, d2 = z0, z1, z2
                sf, sd = 2.0 * cf[i] * w, 2.0 * ctau[i] * abs(w)
            col = k * N + i
            sk = sdiag[col]
            gx, gy, gz = sf * d0, sf * d1, sf * d2
            M[0, col] = gx * sk
            M[1, col] = gy * sk
            M[2, col] = gz * sk
            M[3, col] = (-sd * d0 + pyi * gz) * sk
            M[4, col] = (-sd * d1 - pxi * gz) * sk
            M[5, col] = (-sd * d2 + pxi * gy - pyi * gx) * sk


@njit(cache=True, error_model="numpy", inline="always")
def ipow(v, n):
    """v**n for small non-negative integer n, by repeated multiplication."""
    out = 1.0
    for _ in range(n):
        out *= v
    return out


@njit(cache=True, error_model="numpy", inline="always")
def objective_grad(xs, box, obj, g):
    mid, width = box[2], box[3]
    na, nb, mu_a, mu_b, mu_w = obj
    ia, ib = int(na), int(nb)
    for i in range(N):
        da = xs[i] - mid[i]
        db = xs[N + i] - mid[N + i]
        g[i] = na * mu_a * ipow(da, ia - 1) / ipow(width[i], ia)
        g[N + i] = nb * mu_b * ipow(db, ib - 1) / ipow(width[N + i], ib)
        g[2 * N + i] = 2.0 * mu_w * xs[2 * N + i]


@njit(cache=True, error_model="numpy")
def objective_value(xs, box, obj):
    mid, width = box[2], box[3]
    na, nb, mu_a, mu_b, mu_w = obj
    ia, ib = int(na), int(nb)
    total = 0.0
    for i in range(N):
        total += mu_a * ipow((xs[i] - mid[i]) / width[i], ia)
        total += mu_b * ipow((xs[N + i] - mid[N + i]) / width[N + i], ib)
        total += mu_w * xs[2 * N + i] ** 2
    return total


@njit(cache=True, error_model="numpy", inline="always")
def cholesky6(G, damping, L):
    """Lower Cholesky factor of G + damping I into L; False if not SPD."""
    for i in range(6):
        for j in range(i + 1):
            acc = G[i, j]
            if i == j:
                acc += damping
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if acc <= 0.0:
                    return False
                L[i, i] = np.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    return True


@njit(cache=True, error_model="numpy", inline="always")
def cholesky6_solve(L, rhs, out, y):
    for i in range(6):
        acc = rhs[i]
        for k in range(i):
            acc -= L[i, k] * y[k]
        y[i] = acc / L[i, i]
    for i in range(5, -1, -1):
        acc = y[i]
        for k in range(i + 1, 6):
            acc -= L[k, i] * out[k]
        out[i] = acc / L[i, i]


@njit(cache=True, error_model="numpy", inline="always")
def gram_solve(M, r1, r2, out1, out2, G, L, y):
    """Solve (M M^T) [out1 out2] = [r1 r2] by Cholesky; damp if not SPD.

    G, L and y are 6x6, 6x6 and 6 scratch buffers.
    """
    for i in range(6):
        for j in range(i + 1):
            acc = 0.0
            for k in range(NX):
                acc += M[i, k] * M[j, k]
            G[i, j] = acc
            G[j, i] = acc
    if not cholesky6(G, 0.0, L):
        cholesky6(G, 1e-12, L)
    cholesky6_solve(L, r1, out1, y)
    cholesky6_solve(L, r2, out2, y)


@njit(cache=True, error_model="numpy")
def workspace():
    """Scratch buffers for allocator_terms, reused across evaluations."""
    return (np.empty(6), np.empty((6, NX)), np.empty(NX), np.empty(NX), np.empty(6),
            np.empty(NX), np.empty(6), np.empty(6), np.empty(6), np.empty(6),
            np.empty(NX), np.empty(NX), np.empty((6, 6)), np.zeros((6, 6)), np.empty(6))


@njit(cache=True, error_model="numpy", inline="always")
def allocator_terms(x, u_star, u_star_dot, geo, box, alloc, K, ws):
    """Evaluate the allocator at actuator state x into the workspace.

    Afterwards ws holds (wrench, M, S, sat(x), ..., nu, u_vc, u_y, u_j, ...),
    where nu = (M M^T)^-1 M S grad J are the multipliers of the null-space
    projection.
    """
    wrench, M, sdiag, xs, r, g, mg, a, nu, u_vc, u_y, u_j, G, L, y = ws
    gamma_p, gamma_j, eps = alloc[0], alloc[1], alloc[2]
    obj = (alloc[3], alloc[4], alloc[5], alloc[6], alloc[7])
    wrench_and_jacobian(x, geo, box, eps, wrench, M, sdiag, xs)
    for i in range(6):
        acc = 0.0
        for k in range(6):
            acc += K[i, k] * (wrench[k] - u_star[k])
        u_vc[i] = u_star_dot[i] / gamma_p + u_star[i] - acc
        r[i] = u_vc[i] - wrench[i]
    if gamma_j > 0.0:
        objective_grad(xs, box, obj, g)
        for j in range(NX):
            g[j] *= sdiag[j]
    else:
        for j in range(NX):
            g[j] = 0.0
    for i in range(6):
        acc = 0.0
        for k in range(NX):
            acc += M[i, k] * g[k]
        mg[i] = acc
    gram_solve(M, r, mg, a, nu, G, L, y)
    for k in range(NX):
        ta = 0.0
        tb = 0.0
        for i in range(6):
            ta += M[i, k] * a[i]
            tb += M[i, k] * nu[i]
        u_y[k] = gamma_p * ta
        u_j[k] = gamma_j * (g[k] - tb)


@njit(cache=True, error_model="numpy")
def stiffness_bound(geo, box, alloc, range_rate, ws):
    """Fastest allocator decay rate at the workspace state; mirrors
    allocator.allocation_stiffness.

    Holding the wrench-space coefficients fixed, u_a linearizes to -S C S
    with C = gamma_j H_J - sum_k m_k H_k, m = gamma_j nu + gamma_p a, and
    H_k the Hessians of the wrench components. C is block diagonal over
    propellers (3x3 blocks in alpha, beta, omega), so its spectral radius is
    bounded by the largest absolute row sum. ``range_rate`` covers the
    wrench-space modes, gamma_p * |I + K|.
    """
    cg, sg, px, py, cf, ctau = geo
    mid, width = box[2], box[3]
    gamma_p, gamma_j = alloc[0], alloc[1]
    na, nb, mu_a, mu_b, mu_w = alloc[3], alloc[4], alloc[5], alloc[6], alloc[7]
    ia, ib = int(na), int(nb)
    sdiag, xs, a_, nu = ws[2], ws[3], ws[7], ws[8]
    m = np.empty(6)
    for k in range(6):
        m[k] = gamma_j * nu[k] + gamma_p * a_[k]
    n0, n1, n2, t0, t1, t2 = m[0], m[1], m[2], m[3], m[4], m[5]
    H = np.empty((3, 3))
    rho = 0.0
    for i in range(N):
        a, b, w = xs[i], xs[N + i], xs[2 * N + i]
        ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
        c, s = cg[i], sg[i]
        # force multiplier seen by the thrust: m_f + m_tau x p
        q0 = n0 - t2 * py[i]
        q1 = n1 + t2 * px[i]
        q2 = n2 + t0 * py[i] - t1 * px[i]
        thrust, dthrust = cf[i] * w * w, 2.0 * cf[i] * w
        drag, ddrag = ctau[i] * w * abs(w), 2.0 * ctau[i] * abs(w)
        sign_w = 1.0 if w >= 0.0 else -1.0
        # second derivatives of the spin axis and their coefficients
        for k in range(6):
            if k == 0:    # (alpha, alpha)
                vx, vy, vz, fc, dc, r_, c_ = -sb * ca, sa, -cb * ca, thrust, drag, 0, 0
            elif k == 1:  # (alpha, beta)
                vx, vy, vz, fc, dc, r_, c_ = -cb * sa, 0.0, sb * sa, thrust, drag, 0, 1
            elif k == 2:  # (beta, beta)
                vx, vy, vz, fc, dc, r_, c_ = -sb * ca, 0.0, -cb * ca, thrust, drag, 1, 1
            elif k == 3:  # (alpha, omega)
                vx, vy, vz, fc, dc, r_, c_ = -sb * sa, -ca, -cb * sa, dthrust, ddrag, 0, 2
            elif k == 4:  # (beta, omega)
                vx, vy, vz, fc, dc, r_, c_ = cb * ca, 0.0, -sb * ca, dthrust, ddrag, 1, 2
            else:         # (omega, omega)
                vx, vy, vz, fc, dc, r_, c_ = sb * ca, -sa, cb * ca, 2.0 * cf[i], \
                    2.0 * ctau[i] * sign_w, 2, 2
            d0, d1, d2 = c * vx - s * vy, s * vx + c * vy, vz
            val = -(fc * (q0 * d0 + q1 * d1 + q2 * d2) - dc * (t0 * d0 + t1 * d1 + t2 * d2))
            H[r_, c_] = val
            H[c_, r_] = val
        if gamma_j > 0.0:
            H[0, 0] += gamma_j * na * (na - 1.0) * mu_a * ipow(xs[i] - mid[i], ia - 2) \
                / ipow(width[i], ia)
            H[1, 1] += gamma_j * nb * (nb - 1.0) * mu_b * ipow(xs[N + i] - mid[N + i], ib - 2) \
                / ipow(width[N + i], ib)
            H[2, 2] += gamma_j * 2.0 * mu_w
        for r_ in range(3):
            row = 0.0
            for c_ in range(3):
                row += abs(H[r_, c_] * sdiag[r_ * N + i] * sdiag[c_ * N + i])
            if row > rho:
                rho = row
    return rho + range_rate


@njit(cache=True, error_model="numpy")
def joint_derivative(s, u_star, u_star_dot, geo, box, alloc, K, plat, ws, out):
    allocator_terms(s[12:], u_star, u_star_dot, geo, box, alloc, K, ws)
    platform_derivative(s, ws[0], plat, out)
    u_y, u_j = ws[10], ws[11]
    for j in range(NX):
        out[12 + j] = u_y[j] - u_j[j]


@njit(cache=True, error_model="numpy", inline="always")
def platform_derivative(s, wrench, plat, out):
    mass, J, Jinv, gravity = plat
    roll, pitch, yaw = s[6], s[7], s[8]
    dr, dp, dy = s[9], s[10], s[11]
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    f0, f1, f2 = wrench[0], wrench[1], wrench[2]
    out[0], out[1], out[2] = s[3], s[4], s[5]
    out[3] = (cy * cp * f0 + (cy * sp * sr - sy * cr) * f1 + (cy * sp * cr + sy * sr) * f2) / mass
    out[4] = (sy * cp * f0 + (sy * sp * sr + cy * cr) * f1 + (sy * sp * cr - cy * sr) * f2) / mass
    out[5] = (-sp * f0 + cp * sr * f1 + cp * cr * f2) / mass - gravity
    # body rates omega = W delta_dot
    w0 = dr - sp * dy
    w1 = cr * dp + cp * sr * dy
    w2 = -sr * dp + cp * cr * dy
    jw0 = J[0, 0] * w0 + J[0, 1] * w1 + J[0, 2] * w2
    jw1 = J[1, 0] * w0 + J[1, 1] * w1 + J[1, 2] * w2
    jw2 = J[2, 0] * w0 + J[2, 1] * w1 + J[2, 2] * w2
    t0 = wrench[3] - (w1 * jw2 - w2 * jw1)
    t1 = wrench[4] - (w2 * jw0 - w0 * jw2)
    t2 = wrench[5] - (w0 * jw1 - w1 * jw0)
    o0 = Jinv[0, 0] * t0 + Jinv[0, 1] * t1 + Jinv[0, 2] * t2
    o1 = Jinv[1, 0] * t0 + Jinv[1, 1] * t1 + Jinv[1, 2] * t2
    o2 = Jinv[2, 0] * t0 + Jinv[2, 1] * t1 + Jinv[2, 2] * t2
    # subtract Wdot delta_dot, then apply W^-1
    v0 = o0 - (-cp * dp * dy)
    v1 = o1 - (-sr * dr * dp + (-sp * sr * dp + cp * cr * dr) * dy)
    v2 = o2 - (-cr * dr * dp + (-sp * cr * dp - cp * sr * dr) * dy)
    ddy = (sr * v1 + cr * v2) / cp
    out[6], out[7], out[8] = dr, dp, dy
    out[9] = v0 + sp * ddy
    out[10] = cr * v1 - sr * v2
    out[11] = ddy


@njit(cache=True, error_model="numpy")
def substep_count(dt, rate, ratio, n_min, n_max):
    """Sub-steps needed so that rate * h <= ratio, clipped to [n_min, n_max]."""
    n = int(np.ceil(dt * rate / ratio))
    return min(max(n, n_min), n_max)


@njit(cache=True, error_model="numpy")
def integrate(s0, u_star, u_star_dot, dt, steps, geo, box, alloc, K, plat, sing_tol):
    """Advance the joint 30-state by dt with classical RK4 sub-steps.

    ``steps`` is (ratio, n_min, n_max, range_rate): the sub-step count is
    chosen from the stiffness bound at s0. Returns (state, status, n_sub)
    with status 0 ok, 1 kinematic singularity, 2 non-finite state.
    """
    ratio, n_min, n_max, range_rate = steps
    n = s0.shape[0]
    ws = workspace()
    s = s0.copy()
    tmp = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    if abs(np.cos(s[7])) < sing_tol:
        return s, 1, 0
    joint_derivative(s, u_star, u_star_dot, geo, box, alloc, K, plat, ws, k1)
    rate = stiffness_bound(geo, box, alloc, range_rate, ws)
    n_sub = substep_count(dt, rate, ratio, int(n_min), int(n_max))
    h = dt / n_sub
    for step in range(n_sub):
        if step > 0:
            if abs(np.cos(s[7])) < sing_tol:
                return s, 1, n_sub
            joint_derivative(s, u_star, u_star_dot, geo, box, alloc, K, plat, ws, k1)
        for j in range(n):
            tmp[j] = s[j] + 0.5 * h * k1[j]
        if abs(np.cos(tmp[7])) < sing_tol:
            return s, 1, n_sub
        joint_derivative(tmp, u_star, u_star_dot, geo, box, alloc, K, plat, ws, k2)
        for j in range(n):
            tmp[j] = s[j] + 0.5 * h * k2[j]
        if abs(np.cos(tmp[7])) < sing_tol:
            return s, 1, n_sub
        joint_derivative(tmp, u_star, u_star_dot, geo, box, alloc, K, plat, ws, k3)
        for j in range(n):
            tmp[j] = s[j] + h * k3[j]
        if abs(np.cos(tmp[7])) < sing_tol:
            return s, 1, n_sub
        joint_derivative(tmp, u_star, u_star_dot, geo, box, alloc, K, plat, ws, k4)
        finite = True
        for j in range(n):
            s[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not np.isfinite(s[j]):
                finite = False
        if not finite:
            return s, 2, n_sub
    return s, 0, n_sub


@njit(cache=True, error_model="numpy")
def diagnostics(x, u_star, u_star_dot, geo, box, alloc, K, range_rate):
    """Allocator outputs at x.

    Returns (u_v, u_vc, u_y, u_j, saturated, sigma_min, sigma_max, J, rate).
    """
    ws = workspace()
    allocator_terms(x, u_star, u_star_dot, geo, box, alloc, K, ws)
    M, xs = ws[1], ws[3]
    saturated = (x < box[0]) | (x > box[1])
    sv = np.linalg.svd(M, False)[1]
    obj = (alloc[3], alloc[4], alloc[5], alloc[6], alloc[7])
    rate = stiffness_bound(geo, box, alloc, range_rate, ws)
    return (ws[0].copy(), ws[9].copy(), ws[10].copy(), ws[11].copy(), saturated,
            sv[-1], sv[0], objective_value(xs, box, obj), rate)


@njit(cache=True, error_model="numpy")
def _mat3_vec(A, v0, v1, v2, out):
    for i in range(3):
        out[i] = A[i, 0] * v0 + A[i, 1] * v1 + A[i, 2] * v2


@njit(cache=True, error_model="numpy")
def control_wrench(s, ref, gains, plat):
    """Commanded wrench for platform state s; mirrors controller.wrench_command.

    ref rows: position, velocity, acceleration, attitude, attitude rate,
    attitude acceleration. gains: (kp, kd, kp_att, kd_att) 3x3 matrices.
    """
    kp, kd, kpa, kda = gains
    mass, J, Jinv, gravity = plat
    out = np.empty(6)
    tmp = np.empty(3)
    acc = np.empty(3)
    for i in range(3):
        acc[i] = ref[2, i]
    acc[2] += gravity
    _mat3_vec(kd, ref[1, 0] - s[3], ref[1, 1] - s[4], ref[1, 2] - s[5], tmp)
    for i in range(3):
        acc[i] += tmp[i]
    _mat3_vec(kp, ref[0, 0] - s[0], ref[0, 1] - s[1], ref[0, 2] - s[2], tmp)
    for i in range(3):
        acc[i] += tmp[i]
    roll, pitch, yaw = s[6], s[7], s[8]
    dr, dp, dy = s[9], s[10], s[11]
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    # force = m R^T acc
    out[0] = mass * (cy * cp * acc[0] + sy * cp * acc[1] - sp * acc[2])
    out[1] = mass * ((cy * sp * sr - sy * cr) * acc[0] + (sy * sp * sr + cy * cr) * acc[1]
                     + cp * sr * acc[2])
    out[2] = mass * ((cy * sp * cr + sy * sr) * acc[0] + (sy * sp * cr - cy * sr) * acc[1]
                     + cp * cr * acc[2])
    # attitude channel: a = ref_ddd + K_D e_dot + K_P e
    a = np.empty(3)
    for i in range(3):
        a[i] = ref[5, i]
    _mat3_vec(kda, ref[4, 0] - dr, ref[4, 1] - dp, ref[4, 2] - dy, tmp)
    for i in range(3):
        a[i] += tmp[i]
    _mat3_vec(kpa, ref[3, 0] - roll, ref[3, 1] - pitch, ref[3, 2] - yaw, tmp)
    for i in range(3):
        a[i] += tmp[i]
    # W a + Wdot delta_dot
    v0 = a[0] - sp * a[2] + (-cp * dp * dy)
    v1 = cr * a[1] + cp * sr * a[2] + (-sr * dr * dp + (-sp * sr * dp + cp * cr * dr) * dy)
    v2 = -sr * a[1] + cp * cr * a[2] + (-cr * dr * dp + (-sp * cr * dp - cp * sr * dr) * dy)
    # body rates omega = W delta_dot
    w0 = dr - sp * dy
    w1 = cr * dp + cp * sr * dy
    w2 = -sr * dp + cp * cr * dy
    jw = np.empty(3)
    _mat3_vec(J, w0, w1, w2, jw)
    _mat3_vec(J, v0, v1, v2, tmp)
    out[3] = tmp[0] + w1 * jw[2] - w2 * jw[1]
    out[4] = tmp[1] + w2 * jw[0] - w0 * jw[2]
    out[5] = tmp[2] + w0 * jw[1] - w1 * jw[0]
    return out
