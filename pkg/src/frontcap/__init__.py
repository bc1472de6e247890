"""Front-capturing prediction-correction schemes for tumor growth models.

Solves rho_t - div(rho grad p) = rho G with p = m/(m-1) rho^(m-1) in 1D,
2D and radial geometry, plus the three-species PQD variant, with closed-form
oracles for the porous-medium and Hele-Shaw limiting regimes.
"""

__version__ = "0.1.0"
