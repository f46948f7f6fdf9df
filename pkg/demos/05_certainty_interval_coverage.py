"""
Coverage of the certainty interval H1 +/- L_n for N(0,1).

L_n = sqrt((log(1/h) v log log n) / (n h gamma^4)) * zeta_hat, with
zeta_hat = max sqrt(f_hat int K^2) over the estimated support.  With the
slowly vanishing gamma_n the interval is very conservative; the alternative
scaling with gamma^4 in the numerator is shown for contrast and almost never
covers.

Run:  python3 demos/05_certainty_interval_coverage.py   (about 10 s)
"""

from entrokit import coverage_experiment, make_kernel
from entrokit.models import normal

kernel = make_kernel("gaussian")
for n in (5000, 20000):
    for form in ("inverse_gamma4", "gamma4"):
        res = coverage_experiment(normal(), kernel, 0.3, n, replicates=100, seed=1, form=form)
        print(f"n={n:6d}  form={form:<8} coverage {res.coverage:6.1%}  median half width {res.median_half_width:.3g}")
