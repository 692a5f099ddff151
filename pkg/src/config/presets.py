from __future__ import annotations

from src.domain.models import ConstraintSet, LinkBudget, TradeoffModel

# Trade-off law constants that describe eBCH(128, k) OS decoders at eps=1e-5
EBCH128_MODEL = TradeoffModel(a=0.029, b=0.03, fit_residual=0.0)

# L_m = 1 ms, T_s = 1 us, T_b = 1 ns. r_m and rho_m are set so they never bind.
URLLC_CONSTRAINTS = ConstraintSet(
    L_m=1e-3,
    eps_m=1e-5,
    T_s=1e-6,
    T_b=1e-9,
    r_m=0.0,
    rho_m_db=30.0,
)

DEFAULT_BLOCKLENGTH = 128

# 30 dB at 1 m, free-space exponent, -110 dBm receiver noise, 100 m
DEFAULT_LINK = LinkBudget()

DEFAULT_BATTERY_WH = 1.0

# (m, designed t) of the cyclic parents; extension gives n = 128
EBCH128_CODES: dict[str, tuple[int, int]] = {
    "ebch128_64": (7, 10),
    "ebch128_71": (7, 9),
}

MODEL_PRESETS: dict[str, TradeoffModel] = {
    "ebch128": EBCH128_MODEL,
}
