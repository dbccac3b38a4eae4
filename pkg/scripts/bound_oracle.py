"""Independent high-precision evaluation of every closed-form bound.

This script deliberately re-derives each formula from scratch with mpmath
(50 significant digits) and shares no code with the package; the test suite
compares the package implementations against these values.  Run directly, it
prints a small table of reference values.
"""

from mpmath import mp, mpf, log, sqrt

mp.dps = 50


def oracle_prob_const() -> float:
    return float(1 + 24 / log(2) ** 2)


def oracle_B(d, m, sigma, delta, lam) -> float:
    d, m, sigma, delta, lam = mpf(d), mpf(m), mpf(sigma), mpf(delta), mpf(lam)
    d3 = max(mpf(3), d)
    t1 = 4 * sigma * (sqrt(log(log(2 * d3)) / d3) + sqrt(log(1 / delta) / d))
    t2 = 4 * sigma**2 * (log(log(2 * m)) + log(1 / delta)) / lam
    t3 = (2 * sqrt(m * sigma**2 * log(1 / delta)) + 2 * lam) / m
    return float(t1 + t2 + t3)


def oracle_B_improved(d, m, m_left, m_right, sigma, delta, lam) -> float:
    d, m, sigma, delta, lam = mpf(d), mpf(m), mpf(sigma), mpf(delta), mpf(lam)
    d3 = max(mpf(3), d)
    t1 = 4 * sigma * (sqrt(log(log(2 * d3)) / d3) + sqrt(log(1 / delta) / d))
    t2 = 4 * sigma**2 * (log(log(2 * m)) + log(1 / delta)) / lam
    t3 = 2 * sqrt(m * sigma**2 * log(1 / delta)) / m + 2 * (
        lam / mpf(m_left) + lam / mpf(m_right)
    )
    return float(t1 + t2 + t3)


def oracle_B_quantile(d, m, delta, lam) -> float:
    d, m, delta, lam = mpf(d), mpf(m), mpf(delta), mpf(lam)
    d3 = max(mpf(3), d)
    t1 = 2 * (sqrt(log(log(2 * d3)) / d3) + sqrt(log(1 / delta) / d))
    t2 = (log(log(2 * m)) + log(1 / delta)) / lam
    t3 = (sqrt(m * log(1 / delta)) + 2 * lam) / m
    return float(t1 + t2 + t3)


def oracle_B_uniform(n, delta, lam) -> float:
    n, delta, lam = mpf(n), mpf(delta), mpf(lam)
    return float((log(log(2 * n)) + log(1 / delta)) / lam + sqrt(log(1 / delta) / n))


def oracle_envelope(t, sigma, delta) -> float:
    t, sigma, delta = mpf(t), mpf(sigma), mpf(delta)
    return float(4 * sigma * sqrt(t * (log(log(2 * t)) + log(1 / delta))))


def _improved_eta_sum(m_list, eta):
    # eta has K+1 entries with eta[0] = eta[K] = 0
    K = len(m_list)
    s = mpf(0)
    for k in range(1, K + 1):
        if eta[k - 1] != eta[k]:
            s += 1 / mpf(m_list[k - 1])
    return s


def oracle_sse_quantile(m_list, eta, delta, lam, L, V, improved=False) -> float:
    K = len(m_list)
    n = sum(m_list)
    n, delta, lam, L, V = mpf(n), mpf(delta), mpf(lam), mpf(L), mpf(V)
    lnd = log(n / delta)
    lln = log(log(2 * n))
    seg = mpf(K) + sum(log(mpf(mk) / 2) for mk in m_list)
    t1 = 24 / L**2 * (2 * lln + lnd) * seg
    t2 = 3 * n / L**2 * 4 * (lln**2 + lnd**2) / lam**2
    t3 = 6 * K / L**2 * lnd
    if improved:
        t4 = 144 * lam**2 / L**2 * _improved_eta_sum(m_list, eta)
    else:
        t4 = 24 * lam**2 / L**2 * sum(1 / mpf(mk) for mk in m_list)
    t5 = 2 * K * max(mpf(3), mpf(12) ** 4 / L**4, mpf(144) / (2 * L**2) * lnd) * V**2
    return float(t1 + t2 + t3 + t4 + t5)


def oracle_sse_mean(m_list, eta, delta, lam, sigma, improved=False) -> float:
    K = len(m_list)
    n = sum(m_list)
    n, delta, lam, sigma = mpf(n), mpf(delta), mpf(lam), mpf(sigma)
    lnd = log(n / delta)
    lln = log(log(2 * n))
    seg = mpf(K) + sum(log(mpf(mk) / 2) for mk in m_list)
    t1 = 192 * sigma**2 * (lln + lnd / 2) * seg
    t2 = 24 * n * sigma**4 * (lln**2 + lnd**2 / 4) / lam**2
    t3 = 12 * K * sigma**2 * lnd
    if improved:
        t4 = 144 * lam**2 * _improved_eta_sum(m_list, eta)
    else:
        t4 = 24 * lam**2 * sum(1 / mpf(mk) for mk in m_list)
    return float(t1 + t2 + t3 + t4)


if __name__ == "__main__":
    print("prob_const:", oracle_prob_const())
    print("B(d=3, m=100, sigma=0.5, delta=0.1, lam=10):", oracle_B(3, 100, 0.5, 0.1, 10))
    print("B_quantile(d=100, m=1000, delta=0.05, lam=sqrt(1000)):",
          oracle_B_quantile(100, 1000, 0.05, float(sqrt(1000))))
    print("envelope(t=4, sigma=1, delta=0.05):", oracle_envelope(4, 1, 0.05))
    print("envelope(t=1, sigma=1, delta=0.1):", oracle_envelope(1, 1, 0.1))
