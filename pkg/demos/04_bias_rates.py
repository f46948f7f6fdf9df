"""
Bias of the smoothed density against bandwidth, for kernels of order 2 and 4.

On the raised-cosine density 1 - cos(2 pi x) the interior bias of K_h * f is
exactly |cos(2 pi x)| |1 - phi_K(2 pi h)| with phi_K the kernel's
characteristic function, so sup-bias ~ h^s where s is the kernel order.

Run:  python3 demos/04_bias_rates.py
"""

from entrokit import bias_probe, make_kernel
from entrokit.models import cosine

hs = [0.2, 0.1, 0.05, 0.025]
for kernel in (make_kernel("epanechnikov"), make_kernel("polynomial_order_s", order=4),
               make_kernel("polynomial_order_s", order=6)):
    probe = bias_probe(cosine(), kernel, hs)
    biases = "  ".join(f"{b:.2e}" for b in probe.sup_bias)
    print(f"{kernel.name:<14} order {kernel.order}: sup bias {biases}   log-log slope {probe.slope:.2f}")
