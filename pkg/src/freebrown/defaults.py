"""Numerical defaults shared by the library and the CLI.

========================  ==========  ==================================================
name                      value       used by
========================  ==========  ==================================================
step                      1e-3        RK4 step for characteristics
samples                   1024        points per boundary curve
tol_cons                  1e-8        conserved-quantity drift budget
margin                    0.05        dilation of Omega for eigenvalue containment
eps_blow                  1e-10       p_x > 1/eps_blow declares blow-up
t_small                   1e-3        start of the f^{-1} continuation in t
fd_step                   1e-3        finite-difference step for pointwise residuals
newton_tol                1e-15       relative Newton step tolerance
newton_maxiter            60          Newton iteration cap per continuation stage
singular_radius           0.6         field nodes with |lambda| below this are masked
boundary_band             0.2         field nodes this close to dOmega are masked
========================  ==========  ==================================================
"""

DEFAULTS = {
    "step": 1e-3,
    "samples": 1024,
    "tol_cons": 1e-8,
    "margin": 0.05,
    "eps_blow": 1e-10,
    "t_small": 1e-3,
    "fd_step": 1e-3,
    "newton_tol": 1e-15,
    "newton_maxiter": 60,
    "singular_radius": 0.6,
    "boundary_band": 0.2,
}

STEP = DEFAULTS["step"]
SAMPLES = DEFAULTS["samples"]
TOL_CONS = DEFAULTS["tol_cons"]
MARGIN = DEFAULTS["margin"]
EPS_BLOW = DEFAULTS["eps_blow"]
T_SMALL = DEFAULTS["t_small"]
FD_STEP = DEFAULTS["fd_step"]
