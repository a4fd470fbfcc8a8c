"""Exact-arithmetic Hermitian Maass lift pipeline.

Modules:
    core_field  -- Q(sqrt(-D)) arithmetic, cyclotomic scalars, Gauss sums
    numberfield -- coefficient fields Q[x]/(m) and the stabilization tower
    qseries     -- truncated q-expansions with exact coefficients
    elliptic    -- spaces of elliptic modular forms, eigenforms, p-stabilization
    theta       -- theta transformation matrices and the twist identity
    jacobi      -- special Hermitian Jacobi forms at coefficient level
    hermitian   -- Hermitian Fourier tables, the Maass lift, U_p
    padic       -- weight families, interpolation series, mod p^M cross-checks
    cli         -- batch command-line front end
"""

__version__ = "0.1.0"
