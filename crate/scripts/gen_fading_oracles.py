#!/usr/bin/env python3
"""Frozen reference values for the fading-kernel layer: closed-form Mellin
transforms (in-domain and analytically continued), kernel density spot
values, and small-t expansion coefficients, all at 40 digits."""
import mpmath as mp
mp.mp.dps = 40


def mellin_vec(k, sigma, mu_abs, z):
    # M[f;z] = e^-a (2s2)^z Gamma(z+k)/Gamma(k) 1F1(z+k; k; a), a = mu^2/(2s2)
    s2 = 2 * mp.mpf(sigma) ** 2
    a = mp.mpf(mu_abs) ** 2 / s2
    return mp.e**-a * s2**z * mp.gamma(z + k) / mp.gamma(k) * mp.hyp1f1(z + k, k, a)


def mellin_nak(shape, w, z):
    shape, w = mp.mpf(shape), mp.mpf(w)
    return (w / shape) ** z * mp.gamma(z + shape) / mp.gamma(shape)


def kernel_vec(k, sigma, mu_abs, t):
    # f(t) = t * g(t), g = density of |h|^2 (noncentral chi-square scale)
    s2 = 2 * mp.mpf(sigma) ** 2
    t, s0 = mp.mpf(t), mp.mpf(mu_abs) ** 2
    if s0 == 0:
        g = t ** (k - 1) * mp.e ** (-t / s2) / (s2**k * mp.gamma(k))
    else:
        g = (1 / s2) * mp.e ** (-(t + s0) / s2) * (t / s0) ** (mp.mpf(k - 1) / 2) \
            * mp.besseli(k - 1, mp.sqrt(t * s0) * 2 / s2)
    return t * g


print("# in-domain Mellin values")
print("ricean mu=1.3 sigma=0.8 z=0.7 :", mp.nstr(mellin_vec(1, 0.8, 1.3, mp.mpf('0.7')), 25))
print("ricean mu=1.3 sigma=0.8 z=2.5 :", mp.nstr(mellin_vec(1, 0.8, 1.3, mp.mpf('2.5')), 25))
print("nakagami mu=0.5 w=1 z=0.7    :", mp.nstr(mellin_nak('0.5', 1, mp.mpf('0.7')), 25))
print("nakagami mu=2.5 w=1.7 z=1.8  :", mp.nstr(mellin_nak('2.5', '1.7', mp.mpf('1.8')), 25))
print("vector k=3 sigma=0.6 mu=1.2 z=1.5 :", mp.nstr(mellin_vec(3, 0.6, 1.2, mp.mpf('1.5')), 25))

print("# analytically continued values C(z) = M[f;1-z]")
print("rayleigh 2s2=1 z=2.3   :", mp.nstr(mp.gamma(2 - mp.mpf('2.3')), 25))
print("ricean 2s2=1 mu=1 (a=1) z=2.5 :",
      mp.nstr(mp.e**-1 * mp.gamma(mp.mpf('-0.5')) * mp.hyp1f1(mp.mpf('-0.5'), 1, 1), 25))
print("nakagami mu=0.6 w=1.3 z=2.8 :", mp.nstr(mellin_nak('0.6', '1.3', 1 - mp.mpf('2.8')), 25))
print("vector k=2 sigma=0.7 mu=1.1 z=3.3 :", mp.nstr(mellin_vec(2, 0.7, 1.1, 1 - mp.mpf('3.3')), 25))

print("# derivatives of z -> M[f;1-z], Rayleigh 2s2=1 (= Gamma(2-z)) at z=0.5")
print("d1:", mp.nstr(-mp.gamma(mp.mpf('1.5')) * mp.digamma(mp.mpf('1.5')), 25))
print("d2:", mp.nstr(mp.gamma(mp.mpf('1.5')) * (mp.digamma(mp.mpf('1.5'))**2
                                                + mp.polygamma(1, mp.mpf('1.5'))), 25))
print("# derivative of z -> M[f;1-z], Ricean 2s2=1 mu=sqrt(2) (a=2) at z=0.4")
f = lambda z: mp.e**-2 * mp.gamma(2 - z) * mp.hyp1f1(2 - z, 1, 2)
print("d1:", mp.nstr(mp.diff(f, mp.mpf('0.4')), 25))

print("# kernel density spot values")
print("ricean mu=3 sigma=0.5 t=8.7 :", mp.nstr(kernel_vec(1, 0.5, 3, mp.mpf('8.7')), 25))
print("vector k=3 sigma=0.6 mu=1.2 t=2.4 :", mp.nstr(kernel_vec(3, 0.6, 1.2, mp.mpf('2.4')), 25))
print("nakagami mu=2.5 w=1.7 t=0.9 :",
      mp.nstr((mp.mpf('2.5')/mp.mpf('1.7'))**mp.mpf('2.5') / mp.gamma(mp.mpf('2.5'))
              * mp.mpf('0.9')**mp.mpf('2.5') * mp.e**(-mp.mpf('2.5')*mp.mpf('0.9')/mp.mpf('1.7')), 25))

print("# small-t coefficients p_m of f(t) = sum p_m t^(m+k): g=f/t^... ")
# Ricean mu=2 sigma=1 (a=2, 2s2=2): g(t) = f(t)/t analytic, p_m = g^(m)(0)/m!
g1 = lambda t: kernel_vec(1, 1, 2, t) / t if t != 0 else mp.e**-2 / 2
for m in range(4):
    c = mp.diff(g1, mp.mpf('1e-3'), m) / mp.factorial(m)  # crude check only
print("ricean mu=2 sigma=1 taylor of g at 0 (radius method):")
print([mp.nstr(c, 20) for c in mp.taylor(g1, 0, 3)])
# vector k=3 sigma=0.6 mu=1.2 (a=2): f = sum p_m t^(m+3) -> h(t)=f/t^3
p0_v = mp.e**-2 * mp.mpf('0.72')**-3 / mp.gamma(3)
h3 = lambda t: kernel_vec(3, 0.6, 1.2, t) / t**3 if t != 0 else p0_v
print("vector k=3 sigma=0.6 mu=1.2 taylor of f/t^3 at 0:")
print([mp.nstr(c, 20) for c in mp.taylor(h3, 0, 2)])

print("# kernel mass M[f;1] spot checks (= E|h|^2)")
for (k, s, mu) in [(1, mp.sqrt(0.5), 0), (1, 0.8, 1.3), (3, 0.6, 1.2)]:
    v = mp.quad(lambda t: kernel_vec(k, s, mu, t), [0, 1, 10, 200])
    print(f"k={k} sigma={mp.nstr(mp.mpf(s),8)} mu={mu}: mass =", mp.nstr(v, 20))
