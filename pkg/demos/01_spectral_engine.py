"""Spectral picture of the spherical Dirac operator on S^2 and S^3.

Run: python demos/01_spectral_engine.py
"""

from spherical_pi.operators import norm_report, spectrum, verify_identity

for n in (2, 3):
    print(f"== S^{n}, truncation N = 4")
    for tag in ("gamma0", "Ds", "Laplace_s"):
        rep = spectrum(tag, n, 4)
        for b in rep.blocks[:3]:
            pairs = ", ".join(f"{v:+.3f} (x{k})" for v, k in zip(b.eigenvalues, b.multiplicities))
            print(f"  {tag:10s} m={b.degree}: {pairs}")
    # Ds eigenvalues are read through its self-adjoint factor Gamma0 - n/2
    for tag in ("thm_ds_w", "ds_pi", "pairing_plus"):
        r = verify_identity(tag, n, 4)
        print(f"  identity {tag:14s} residual {r.residual:.2e}")
    norms = norm_report(n, 5)
    print(f"  ||T|| = {norms['T']['max']:.6f} (2/n = {2 / n:.6f})")
    print(f"  ||Pi_s0|| = {norms['Pi_s0']['max']:.4f}, Pi_s1 gain in "
          f"[{norms['Pi_s1']['min']:.4f}, {norms['Pi_s1']['max']:.4f}]")
