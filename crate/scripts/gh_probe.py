#!/usr/bin/env python3
"""Probe: relative accuracy of Gauss-Hermite quadrature for canonical MMSE
of discrete constellations, vs high-precision adaptive quadrature.

Canonical channel: y = sqrt(s) x + n, n ~ CN(0,1)  (real part var 1/2).
Real constellation: 1-D reduction with w ~ N(0,1/2), density e^{-w^2}/sqrt(pi).
"""
import numpy as np
from numpy.polynomial.hermite import hermgauss
import mpmath as mp

mp.mp.dps = 30

# ---------- exact references ----------
def mmse_bpsk_exact(t):
    t = mp.mpf(t)
    if t == 0:
        return mp.mpf(1)
    f = lambda u: mp.e**(-u*u)/mp.sqrt(mp.pi) * (1 - mp.tanh(2*t + 2*mp.sqrt(t)*u))
    lo = -2*mp.sqrt(t) - 14   # cover the transition at u=-sqrt(t) and beyond
    return mp.quad(f, [lo, -mp.sqrt(t), 0, 14])

PAM4 = [mp.mpf(k)/mp.sqrt(5) for k in (-3, -1, 1, 3)]

def mmse_pam_exact(t, pts):
    # 1-D: E|x-E[x|y]|^2 ; y = sqrt(t) x + w, w ~ N(0,1/2)
    t = mp.mpf(t)
    st = mp.sqrt(t)
    m = len(pts)
    def integrand_given_j(j):
        xj = pts[j]
        def g(u):
            # w = u, y = st*xj + u ; posterior weights exp(-(y - st xi)^2)
            num = mp.mpf(0); den = mp.mpf(0)
            for xi in pts:
                e = mp.e**(-(st*(xj - xi) + u)**2 + u*u)   # relative to i=j
                num += xi * e; den += e
            xh = num/den
            return mp.e**(-u*u)/mp.sqrt(mp.pi) * (xj - xh)**2
        return g
    tot = mp.mpf(0)
    for j in range(m):
        g = integrand_given_j(j)
        tot += mp.quad(g, [-2*st*2 - 14, 0, 14]) / m
    return tot

# ---------- GH evaluation (f64) ----------
def mmse_gh_real(t, pts, probs, n):
    u, w = hermgauss(n)           # weight e^{-x^2}
    st = np.sqrt(t)
    pts = np.asarray(pts, float); probs = np.asarray(probs, float)
    tot = 0.0
    for j, xj in enumerate(pts):
        # ln w_i = ln p_i - t (xj-xi)^2 - 2 st u (xj - xi)
        d = xj - pts                      # (m,)
        L = np.log(probs)[None, :] - t*d[None, :]**2 - 2*st*np.outer(u, d)
        W = np.exp(L)                     # (n, m)
        xh = (W @ pts) / W.sum(axis=1)
        tot += probs[j] * np.dot(w, (xj - xh)**2)
    return tot / np.sqrt(np.pi)

def mmse_gh_complex(t, pts, probs, n):
    u, wu = hermgauss(n)
    st = np.sqrt(t)
    pts = np.asarray(pts, complex); probs = np.asarray(probs, float)
    re = pts.real; im = pts.imag
    tot = 0.0
    for j in range(len(pts)):
        dr = re[j] - re; di = im[j] - im
        d2 = dr*dr + di*di
        # L[a,b,i] = lnp_i - t d2_i - 2 st (u_a dr_i + u_b di_i)
        A = np.exp(-2*st*np.outer(u, dr))      # (n, m)
        B = np.exp(-2*st*np.outer(u, di))      # (n, m)
        C = probs * np.exp(-t*d2)              # (m,)
        # denom[a,b] = sum_i C_i A[a,i] B[b,i] ; num similarly with re, im
        den = np.einsum('ai,bi->ab', A*C, B)
        numr = np.einsum('ai,bi->ab', A*(C*re), B)
        numi = np.einsum('ai,bi->ab', A*C, B*im)
        xr = numr/den; xi = numi/den
        q = (re[j]-xr)**2 + (im[j]-xi)**2
        tot += probs[j] * (wu @ q @ wu)
    return tot / np.pi

BPSK = ([-1.0, 1.0], [0.5, 0.5])
P4 = ([float(x) for x in PAM4], [0.25]*4)
# 16-QAM = (4PAM x 4PAM)/sqrt(2)
q16 = [(a + 1j*b)/np.sqrt(2) for a in P4[0] for b in P4[0]]
Q16 = (q16, [1/16.]*16)

print("== BPSK: GH vs exact ==")
for t in [0.25, 1.0, 4.0, 10.0, 25.0, 50.0, 100.0, 200.0]:
    ex = mmse_bpsk_exact(t)
    row = [f"t={t:7.2f} exact={mp.nstr(ex, 12):>18}"]
    for n in [64, 128, 256]:
        v = mmse_gh_real(t, *BPSK, n)
        rel = float((v - ex)/ex)
        row.append(f"n{n}:{rel:+.2e}")
    print("  ".join(row), flush=True)

print("== 4-PAM: GH vs exact ==")
for t in [0.5, 2.0, 8.0, 25.0, 60.0, 120.0]:
    ex = mmse_pam_exact(t, PAM4)
    row = [f"t={t:7.2f} exact={mp.nstr(ex, 12):>18}"]
    for n in [64, 128, 256]:
        v = mmse_gh_real(t, *P4, n)
        rel = float((v - ex)/ex)
        row.append(f"n{n}:{rel:+.2e}")
    print("  ".join(row), flush=True)

print("== 16-QAM: 2-D GH vs exact (= 4PAM at t/2) ==")
for t in [1.0, 4.0, 10.0, 30.0, 60.0, 120.0, 240.0]:
    ex = mmse_pam_exact(t/2, PAM4)
    row = [f"t={t:7.2f} exact={mp.nstr(ex, 12):>18}"]
    for n in [48, 64, 128]:
        v = mmse_gh_complex(t, *Q16, n)
        rel = float((v - ex)/ex)
        row.append(f"n{n}:{rel:+.2e}")
    print("  ".join(row), flush=True)
